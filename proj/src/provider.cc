#include "cad/provider.h"

namespace cad {

std::vector<LogitVector> LogitProvider::logits_batch(
    std::span<const TokenSeq> sequences) const {
  std::vector<LogitVector> rows;
  rows.reserve(sequences.size());
  for (const auto& seq : sequences) rows.push_back(logits(seq));
  return rows;
}

LogitVector SerializedProvider::logits(std::span<const TokenId> seq) const {
  std::lock_guard lock(mu_);
  return inner_.logits(seq);
}

std::vector<LogitVector> SerializedProvider::logits_batch(
    std::span<const TokenSeq> sequences) const {
  std::lock_guard lock(mu_);
  return inner_.logits_batch(sequences);
}

TokenSeq SerializedProvider::tokenize(std::string_view text) const {
  std::lock_guard lock(mu_);
  return inner_.tokenize(text);
}

std::string SerializedProvider::detokenize(std::span<const TokenId> ids) const {
  std::lock_guard lock(mu_);
  return inner_.detokenize(ids);
}

}  // namespace cad
