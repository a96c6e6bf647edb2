#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cad {

struct EvalExample {
  std::string id;
  std::string context;
  std::string query;
  std::vector<std::string> answers;

  bool operator==(const EvalExample&) const = default;
};

// Extractive-QA answer normalization: lowercase, strip ASCII punctuation,
// drop the articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view s);

// 1 when the normalized prediction equals some normalized gold answer.
int exact_match(std::string_view prediction, const std::vector<std::string>& answers);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Lowercased whitespace tokens.
std::vector<std::string> rouge_tokens(std::string_view text);

// Longest common subsequence length, two-row dynamic program.
template <typename T>
std::size_t lcs_length(std::span<const T> a, std::span<const T> b) {
  const std::size_t width = b.size() + 1;
  std::vector<std::size_t> rows(2 * width, 0);
  std::size_t* prev = rows.data();
  std::size_t* cur = prev + width;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return lcs_length<std::string>(std::span(a), std::span(b));
}

// Sentence-level ROUGE-L with F1 (beta = 1).
RougeScore rouge_l(std::string_view candidate, std::string_view reference);

// Replaces every occurrence of each gold answer in the context by
// `replacement`; the result's only answer is `replacement` and its id gets a
// "-swap" suffix. Throws kNotSwappable when an answer is absent from the
// context.
EvalExample make_swap(const EvalExample& example, std::string_view replacement);

}  // namespace cad
