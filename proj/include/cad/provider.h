#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "cad/core.h"

namespace cad {

// The model being decoded: a token sequence in, next-token scores out.
// Implementations must be deterministic and return vocab_size() scores.
class LogitProvider {
 public:
  virtual ~LogitProvider() = default;

  virtual std::string name() const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual TokenId eos() const = 0;

  virtual LogitVector logits(std::span<const TokenId> seq) const = 0;

  // One row per sequence, in request order. The default issues one logits()
  // call per sequence; remote providers override it to batch the request.
  virtual std::vector<LogitVector> logits_batch(
      std::span<const TokenSeq> sequences) const;

  virtual TokenSeq tokenize(std::string_view text) const = 0;
  virtual std::string detokenize(std::span<const TokenId> ids) const = 0;

  // True when concurrent calls from several threads are allowed.
  virtual bool concurrent_safe() const { return false; }
};

// Forwards every call to `inner` under a mutex.
class SerializedProvider final : public LogitProvider {
 public:
  explicit SerializedProvider(const LogitProvider& inner) : inner_(inner) {}

  std::string name() const override { return inner_.name(); }
  std::size_t vocab_size() const override { return inner_.vocab_size(); }
  TokenId eos() const override { return inner_.eos(); }
  LogitVector logits(std::span<const TokenId> seq) const override;
  std::vector<LogitVector> logits_batch(
      std::span<const TokenSeq> sequences) const override;
  TokenSeq tokenize(std::string_view text) const override;
  std::string detokenize(std::span<const TokenId> ids) const override;
  bool concurrent_safe() const override { return true; }

 private:
  const LogitProvider& inner_;
  mutable std::mutex mu_;
};

}  // namespace cad
