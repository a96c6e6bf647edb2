#include "cad/metrics.h"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "cad/error.h"

namespace cad {

std::string normalize_answer(std::string_view s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (unsigned char c : s) {
    if (std::ispunct(c)) continue;
    cleaned.push_back(static_cast<char>(std::tolower(c)));
  }
  std::istringstream words(cleaned);
  std::string word, out;
  while (words >> word) {
    if (word == "a" || word == "an" || word == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

int exact_match(std::string_view prediction, const std::vector<std::string>& answers) {
  const std::string pred = normalize_answer(prediction);
  for (const auto& answer : answers) {
    if (normalize_answer(answer) == pred) return 1;
  }
  return 0;
}

std::vector<std::string> rouge_tokens(std::string_view text) {
  std::string lowered(text);
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::istringstream in(lowered);
  std::vector<std::string> tokens;
  for (std::string t; in >> t;) tokens.push_back(std::move(t));
  return tokens;
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = rouge_tokens(candidate);
  const auto ref = rouge_tokens(reference);
  RougeScore score;
  if (cand.empty() || ref.empty()) return score;
  const auto lcs = static_cast<double>(lcs_length(cand, ref));
  score.precision = lcs / static_cast<double>(cand.size());
  score.recall = lcs / static_cast<double>(ref.size());
  if (score.precision + score.recall > 0.0) {
    score.f1 = 2.0 * score.precision * score.recall / (score.precision + score.recall);
  }
  return score;
}

EvalExample make_swap(const EvalExample& example, std::string_view replacement) {
  EvalExample out = example;
  for (const auto& answer : example.answers) {
    if (answer.empty() || example.context.find(answer) == std::string::npos) {
      throw Error(ErrorCode::kNotSwappable,
                  "answer '" + answer + "' does not occur in the context of " + example.id);
    }
  }
  for (const auto& answer : example.answers) {
    std::string& ctx = out.context;
    for (std::size_t pos = ctx.find(answer); pos != std::string::npos;
         pos = ctx.find(answer, pos + replacement.size())) {
      ctx.replace(pos, answer.size(), replacement);
    }
  }
  out.answers = {std::string(replacement)};
  out.id = example.id + "-swap";
  return out;
}

}  // namespace cad
