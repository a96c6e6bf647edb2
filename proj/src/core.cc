#include "cad/core.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

namespace cad {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidLogits: return "invalid-logits";
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kInvalidToken: return "invalid-token";
    case ErrorCode::kInvalidPrompt: return "invalid-prompt";
    case ErrorCode::kBranchMismatch: return "branch-mismatch";
    case ErrorCode::kProvider: return "provider";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kVersion: return "version";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kRemote: return "remote";
    case ErrorCode::kNotSwappable: return "not-swappable";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
  }
  return "unknown";
}

void check_finite(const LogitVector& logits) {
  if (logits.empty()) throw Error(ErrorCode::kInvalidLogits, "empty logit vector");
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      throw Error(ErrorCode::kInvalidLogits,
                  "non-finite logit at index " + std::to_string(i));
    }
  }
}

void check_distribution(const ProbVector& probs) {
  if (probs.empty()) throw Error(ErrorCode::kInvalidInput, "empty distribution");
  double sum = 0.0;
  for (double p : probs.values()) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kInvalidInput, "probability outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    throw Error(ErrorCode::kInvalidInput,
                "probabilities sum to " + std::to_string(sum));
  }
}

ProbVector softmax(const LogitVector& logits) {
  check_finite(logits);
  const auto v = logits.values();
  const double max = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - max);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return ProbVector(std::move(out));
}

TokenId argmax(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidInput, "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

Vocabulary::Vocabulary(std::vector<std::string> surface, TokenId eos,
                       std::optional<TokenId> unk, std::optional<TokenId> sep)
    : surface_(std::move(surface)), eos_(eos), unk_(unk), sep_(sep) {
  if (surface_.empty()) throw Error(ErrorCode::kInvalidConfig, "empty vocabulary");
  for (std::size_t i = 0; i < surface_.size(); ++i) {
    if (!index_.emplace(surface_[i], static_cast<TokenId>(i)).second) {
      throw Error(ErrorCode::kInvalidConfig, "duplicate token '" + surface_[i] + "'");
    }
  }
  auto check = [&](std::optional<TokenId> id, const char* what) {
    if (id && !contains(*id)) {
      throw Error(ErrorCode::kInvalidConfig, std::string(what) + " id out of range");
    }
  };
  check(eos_, "eos");
  check(unk_, "unk");
  check(sep_, "sep");
}

Vocabulary Vocabulary::with_specials(const std::vector<std::string>& words) {
  std::vector<std::string> surface;
  std::unordered_map<std::string, bool> seen;
  for (const auto& w : words) {
    if (w == "<eos>" || w == "<sep>" || w == "<unk>") continue;
    if (seen.emplace(w, true).second) surface.push_back(w);
  }
  const auto base = static_cast<TokenId>(surface.size());
  surface.insert(surface.end(), {"<eos>", "<sep>", "<unk>"});
  return Vocabulary(std::move(surface), base, base + 2, base + 1);
}

const std::string& Vocabulary::surface(TokenId id) const {
  if (!contains(id)) {
    throw Error(ErrorCode::kInvalidToken, "token id " + std::to_string(id) +
                                              " outside vocabulary of size " +
                                              std::to_string(size()));
  }
  return surface_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenSeq Vocabulary::tokenize(std::string_view text) const {
  TokenSeq out;
  std::string word;
  int newlines = 0;  // newlines seen since the last word
  auto flush = [&] {
    if (word.empty()) return;
    if (auto id = find(word)) {
      out.push_back(*id);
    } else if (unk_) {
      out.push_back(*unk_);
    } else {
      throw Error(ErrorCode::kInvalidToken, "unknown word '" + word + "'");
    }
    word.clear();
  };
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      flush();
      if (c == '\n' && ++newlines == 2 && sep_ && (out.empty() || out.back() != *sep_)) {
        out.push_back(*sep_);
      }
    } else {
      word.push_back(c);
      newlines = 0;
    }
  }
  flush();
  return out;
}

std::string Vocabulary::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  bool paragraph = false;
  for (TokenId id : ids) {
    const std::string& s = surface(id);
    if (id == eos_) continue;
    if (sep_ && id == *sep_) {
      paragraph = true;
      continue;
    }
    if (!out.empty()) out += paragraph ? "\n\n" : " ";
    paragraph = false;
    out += s;
  }
  if (paragraph) out += "\n\n";
  return out;
}

std::string digest(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cad
