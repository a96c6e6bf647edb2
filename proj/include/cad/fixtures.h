#pragma once

#include <string>
#include <vector>

#include "cad/metrics.h"
#include "cad/toy_models.h"

namespace cad::fixtures {

// Synthetic knowledge-conflict testbed. Every item has a one-token context
// holding the answer entity and a query whose last token ("cue") selects a
// prior row with 0.9 on the memorized answer and 0.1 on the swapped one.
// After any answer entity the prior puts 0.98 on <eos>.
struct ConflictFixture {
  CopyPriorModel model;
  std::vector<EvalExample> original;  // context holds the memorized answer
  std::vector<EvalExample> swapped;   // make_swap of each original item
};

inline constexpr double kConflictLambda = 0.3;
inline constexpr double kPriorMemorized = 0.9;
inline constexpr double kPriorSwapped = 0.1;
inline constexpr double kPriorEosAfterAnswer = 0.98;

// 10 proverb-completion items followed by 40 capital-city items.
ConflictFixture build_conflict_fixture();

// Text-only fixture sets for external models; synthetic, not drawn from any
// published benchmark.
std::vector<EvalExample> memotrap_style_examples();  // 10 items
std::vector<EvalExample> nqswap_style_examples();    // 20 items, already swapped
std::vector<std::string> ngram_corpus();

}  // namespace cad::fixtures
