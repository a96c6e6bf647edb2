#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cad/error.h"

namespace cad {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

// Scores over the vocabulary for one decoding step. Finiteness is checked by
// the operations that consume a LogitVector, not on construction.
class LogitVector {
 public:
  LogitVector() = default;
  explicit LogitVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& mutable_values() noexcept { return values_; }

  bool operator==(const LogitVector&) const = default;

 private:
  std::vector<double> values_;
};

class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& mutable_values() noexcept { return values_; }

  bool operator==(const ProbVector&) const = default;

 private:
  std::vector<double> values_;
};

inline constexpr double kProbSumTolerance = 1e-9;

// Throws kInvalidLogits when the vector is empty or has a NaN/inf entry.
void check_finite(const LogitVector& logits);
// Throws kInvalidInput unless every entry is in [0,1] and the sum is 1
// within kProbSumTolerance.
void check_distribution(const ProbVector& probs);

// exp(v_i - max v) / sum_j exp(v_j - max v).
ProbVector softmax(const LogitVector& logits);

// Index of the largest entry; ties go to the lowest index.
TokenId argmax(std::span<const double> values);
inline TokenId argmax(const LogitVector& v) { return argmax(v.values()); }
inline TokenId argmax(const ProbVector& v) { return argmax(v.values()); }

// The (context c, query x, generated y_<t) triple driving the two decoding
// branches. An empty context makes both branches identical.
struct Prompt {
  TokenSeq context;
  TokenSeq query;
  TokenSeq generated;
};

// Closed vocabulary with optional reserved tokens. The separator token stands
// for a paragraph break (blank line) in text and is what the toy copy model
// uses to find where the context ends.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> surface, TokenId eos,
             std::optional<TokenId> unk = std::nullopt,
             std::optional<TokenId> sep = std::nullopt);

  // Builds a vocabulary from `words` (deduplicated, order kept) followed by
  // the reserved tokens "<eos>", "<sep>" and "<unk>".
  static Vocabulary with_specials(const std::vector<std::string>& words);

  std::size_t size() const noexcept { return surface_.size(); }
  TokenId eos() const noexcept { return eos_; }
  std::optional<TokenId> unk() const noexcept { return unk_; }
  std::optional<TokenId> sep() const noexcept { return sep_; }
  const std::string& surface(TokenId id) const;
  const std::vector<std::string>& surfaces() const noexcept { return surface_; }
  std::optional<TokenId> find(std::string_view word) const;
  bool contains(TokenId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < surface_.size();
  }
  bool is_special(TokenId id) const noexcept {
    return id == eos_ || id == unk_ || id == sep_;
  }

  // Whitespace tokenization. Blank lines become the separator token when the
  // vocabulary has one; unknown words map to UNK or raise kInvalidToken.
  TokenSeq tokenize(std::string_view text) const;
  // Joins surfaces with single spaces, the separator renders as a blank line
  // and EOS is dropped.
  std::string detokenize(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary& other) const {
    return surface_ == other.surface_ && eos_ == other.eos_ &&
           unk_ == other.unk_ && sep_ == other.sep_;
  }

 private:
  std::vector<std::string> surface_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId eos_ = 0;
  std::optional<TokenId> unk_;
  std::optional<TokenId> sep_;
};

// 64-bit FNV-1a over the IEEE-754 bit patterns, rendered as 16 hex digits.
std::string digest(std::span<const double> values);

}  // namespace cad
