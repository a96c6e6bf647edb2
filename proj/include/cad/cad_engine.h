#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "cad/core.h"
#include "cad/provider.h"
#include "cad/sampling.h"

namespace cad {

struct GenerationConfig {
  double alpha = 0.5;
  Strategy strategy = Strategy::kTopP;
  double p = 0.9;
  int max_tokens = 64;
  std::uint64_t seed = 0;
  std::set<TokenId> stop_tokens;

  // Throws kInvalidConfig on alpha < 0, p outside (0,1] or max_tokens < 1.
  void validate() const;
  SelectionConfig selection() const { return {strategy, p}; }
};

enum class StopReason { kEos, kMaxTokens };
std::string_view stop_reason_name(StopReason r);

struct StepRecord {
  std::string context_digest;  // digest of the context-branch logits
  std::string bare_digest;     // digest of the context-free branch logits
  TokenId token = 0;
  double probability = 0.0;    // of `token` under the adjusted distribution
};

struct GenerationResult {
  TokenSeq tokens;  // includes the terminating stop token, if any
  std::string text; // detokenized, stop token excluded
  std::vector<StepRecord> steps;
  StopReason stop_reason = StopReason::kMaxTokens;

  bool operator==(const GenerationResult&) const = default;
};

inline bool operator==(const StepRecord& a, const StepRecord& b) {
  return a.context_digest == b.context_digest && a.bare_digest == b.bare_digest &&
         a.token == b.token && a.probability == b.probability;
}

// Contrastive logits (1 + alpha) * with_context - alpha * without_context,
// evaluated as with_context + alpha * (with_context - without_context).
LogitVector cad_combine(const LogitVector& with_context,
                        const LogitVector& without_context, double alpha);

// softmax(cad_combine(...)): the context-aware next-token distribution.
ProbVector cad_distribution(const LogitVector& with_context,
                            const LogitVector& without_context, double alpha);

// Two-branch autoregressive decoding. Each step scores
//   context ++ query ++ generated   and   query ++ generated,
// draws one token from the contrastive distribution and appends it to both.
GenerationResult generate(const LogitProvider& provider, const Prompt& prompt,
                          const GenerationConfig& config);

// Placeholders a prompt template must contain, context before query.
inline constexpr std::string_view kContextSlot = "{context}";
inline constexpr std::string_view kQuerySlot = "{query}";
inline constexpr std::string_view kDefaultTemplate = "{context}\n\n{query}";

// Renders `tmpl` and tokenizes it in two segments: everything before the
// query slot is the context segment, the rest is the query segment. An empty
// context drops the context segment entirely.
Prompt build_prompt(const LogitProvider& provider, std::string_view tmpl,
                    std::string_view context, std::string_view query);

}  // namespace cad
