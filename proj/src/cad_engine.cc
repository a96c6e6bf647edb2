#include "cad/cad_engine.h"

#include <array>
#include <cmath>

namespace cad {
namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

void GenerationConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidConfig, "alpha must be a finite value >= 0");
  }
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "nucleus mass p must lie in (0, 1]");
  }
  if (max_tokens < 1) throw Error(ErrorCode::kInvalidConfig, "max_tokens must be >= 1");
}

std::string_view stop_reason_name(StopReason r) {
  return r == StopReason::kEos ? "eos" : "max_tokens";
}

LogitVector cad_combine(const LogitVector& with_context,
                        const LogitVector& without_context, double alpha) {
  if (with_context.size() != without_context.size()) {
    throw Error(ErrorCode::kBranchMismatch,
                "branch logits have lengths " + std::to_string(with_context.size()) +
                    " and " + std::to_string(without_context.size()));
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidConfig, "alpha must be a finite value >= 0");
  }
  check_finite(with_context);
  check_finite(without_context);
  std::vector<double> out(with_context.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = with_context[i] + alpha * (with_context[i] - without_context[i]);
  }
  return LogitVector(std::move(out));
}

ProbVector cad_distribution(const LogitVector& with_context,
                            const LogitVector& without_context, double alpha) {
  return softmax(cad_combine(with_context, without_context, alpha));
}

GenerationResult generate(const LogitProvider& provider, const Prompt& prompt,
                          const GenerationConfig& config) {
  config.validate();
  if (prompt.query.empty()) throw Error(ErrorCode::kInvalidPrompt, "query must be non-empty");
  const std::size_t vocab = provider.vocab_size();
  auto check_ids = [&](const TokenSeq& seq, const char* part) {
    for (TokenId id : seq) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
        throw Error(ErrorCode::kInvalidPrompt, std::string(part) + " token " +
                                                   std::to_string(id) +
                                                   " outside provider vocabulary");
      }
    }
  };
  check_ids(prompt.context, "context");
  check_ids(prompt.query, "query");
  check_ids(prompt.generated, "generated");

  std::array<TokenSeq, 2> branches;
  branches[0] = prompt.context;
  branches[0].insert(branches[0].end(), prompt.query.begin(), prompt.query.end());
  branches[0].insert(branches[0].end(), prompt.generated.begin(), prompt.generated.end());
  branches[1] = prompt.query;
  branches[1].insert(branches[1].end(), prompt.generated.begin(), prompt.generated.end());

  RandomSource rng(config.seed);
  const TokenId eos = provider.eos();
  GenerationResult result;
  for (int step = 0; step < config.max_tokens; ++step) {
    std::vector<LogitVector> rows;
    try {
      rows = provider.logits_batch(branches);
      if (rows.size() != 2) {
        throw Error(ErrorCode::kProtocol, "expected 2 logit rows, got " + std::to_string(rows.size()));
      }
      for (const auto& row : rows) {
        if (row.size() != vocab) {
          throw Error(ErrorCode::kProtocol, "logit row length " + std::to_string(row.size()) +
                                                " differs from vocabulary size " +
                                                std::to_string(vocab));
        }
      }
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kProvider, "step " + std::to_string(step) + ": " + e.what());
    }

    const ProbVector probs = cad_distribution(rows[0], rows[1], config.alpha);
    const TokenId token = select(probs, config.selection(), rng);
    result.tokens.push_back(token);
    result.steps.push_back({digest(rows[0].values()), digest(rows[1].values()), token,
                            probs[static_cast<std::size_t>(token)]});
    if (token == eos || config.stop_tokens.contains(token)) {
      result.stop_reason = StopReason::kEos;
      break;
    }
    for (auto& branch : branches) branch.push_back(token);
  }

  std::span<const TokenId> visible = result.tokens;
  if (result.stop_reason == StopReason::kEos) visible = visible.first(visible.size() - 1);
  result.text = provider.detokenize(visible);
  return result;
}

Prompt build_prompt(const LogitProvider& provider, std::string_view tmpl,
                    std::string_view context, std::string_view query) {
  const auto cpos = tmpl.find(kContextSlot);
  const auto qpos = tmpl.find(kQuerySlot);
  if (cpos == std::string_view::npos || qpos == std::string_view::npos || cpos > qpos) {
    throw Error(ErrorCode::kInvalidConfig,
                "template must contain {context} followed by {query}");
  }
  Prompt prompt;
  if (!context.empty()) {
    std::string head(tmpl.substr(0, qpos));
    replace_all(head, kContextSlot, context);
    prompt.context = provider.tokenize(head);
  }
  std::string tail(tmpl.substr(qpos));
  replace_all(tail, kQuerySlot, query);
  prompt.query = provider.tokenize(tail);
  if (prompt.query.empty()) throw Error(ErrorCode::kInvalidPrompt, "query must be non-empty");
  return prompt;
}

}  // namespace cad
