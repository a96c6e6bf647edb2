#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cad/provider.h"

namespace cad {

// Format tag written into every persisted toy model.
inline constexpr std::string_view kToyFormat = "cad-toy-v1";

// Logit assigned to zero-probability tokens so contrastive arithmetic stays
// finite.
inline constexpr double kLogitFloor = -1e9;

// Add-k smoothed n-gram model over a closed vocabulary. Only full windows of
// `order` tokens are counted; a sequence shorter than order-1 tokens has no
// usable context and gets the uniform distribution.
class NGramModel final : public LogitProvider {
 public:
  using Counts = std::map<TokenSeq, std::map<TokenId, std::uint64_t>>;

  NGramModel(Vocabulary vocab, int order, double k, Counts counts);

  static NGramModel train(const std::vector<TokenSeq>& corpus, int order,
                          double k, Vocabulary vocab);

  int order() const noexcept { return order_; }
  double k() const noexcept { return k_; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const Counts& counts() const noexcept { return counts_; }

  // Smoothed conditional distribution given the last order-1 tokens of seq.
  ProbVector distribution(std::span<const TokenId> seq) const;

  std::string name() const override;
  std::size_t vocab_size() const override { return vocab_.size(); }
  TokenId eos() const override { return vocab_.eos(); }
  LogitVector logits(std::span<const TokenId> seq) const override;
  TokenSeq tokenize(std::string_view text) const override { return vocab_.tokenize(text); }
  std::string detokenize(std::span<const TokenId> ids) const override {
    return vocab_.detokenize(ids);
  }
  bool concurrent_safe() const override { return true; }

  std::string serialize() const;
  static NGramModel deserialize(std::string_view text);

 private:
  Vocabulary vocab_;
  int order_;
  double k_;
  Counts counts_;
  std::map<TokenSeq, std::uint64_t> totals_;
};

// Synthetic knowledge-conflict model: a bigram prior ("parametric memory")
// mixed with a copy distribution over the tokens of the context,
//
//   p = lambda * uniform(distinct context tokens) + (1 - lambda) * prior(.|last)
//
// with p = prior(.|last) when the context span is empty.
class CopyPriorModel final : public LogitProvider {
 public:
  // Rows are keyed by the previous token and must be full distributions over
  // the vocabulary. Tokens without a row use the uniform distribution.
  CopyPriorModel(Vocabulary vocab, double lambda,
                 std::map<TokenId, std::vector<double>> prior);

  double lambda() const noexcept { return lambda_; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const std::map<TokenId, std::vector<double>>& prior() const noexcept { return prior_; }
  std::vector<double> prior_row(TokenId previous) const;

  // The mixture above with an explicit context span.
  LogitVector copyprior_logits(std::span<const TokenId> seq,
                               std::span<const TokenId> context_span) const;

  // Splits `seq` at its last separator token. Context tokens that already
  // occur after the separator are dropped, so each context token is copied
  // at most once. Without a separator the span is empty.
  TokenSeq context_span(std::span<const TokenId> seq) const;

  std::string name() const override;
  std::size_t vocab_size() const override { return vocab_.size(); }
  TokenId eos() const override { return vocab_.eos(); }
  LogitVector logits(std::span<const TokenId> seq) const override {
    return copyprior_logits(seq, context_span(seq));
  }
  TokenSeq tokenize(std::string_view text) const override { return vocab_.tokenize(text); }
  std::string detokenize(std::span<const TokenId> ids) const override {
    return vocab_.detokenize(ids);
  }
  bool concurrent_safe() const override { return true; }

  std::string serialize() const;
  static CopyPriorModel deserialize(std::string_view text);

 private:
  Vocabulary vocab_;
  double lambda_;
  std::map<TokenId, std::vector<double>> prior_;
};

// Reads a cad-toy-v1 document of either kind.
std::unique_ptr<LogitProvider> load_toy_model(const std::filesystem::path& path);
void save_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace cad
