#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cad/core.h"

namespace cad {

// xoshiro256** (Blackman & Vigna). The 64-bit seed is expanded into the
// 256-bit state with four successive splitmix64 outputs, so a seed yields the
// same stream on every platform.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  std::uint64_t next();
  // Uniform double in [0,1) built from the top 53 bits of next().
  double uniform();

  const std::array<std::uint64_t, 4>& state() const noexcept { return s_; }

 private:
  std::array<std::uint64_t, 4> s_;
};

enum class Strategy { kGreedy, kTopP };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct Nucleus {
  std::vector<TokenId> members;  // in descending probability order
  ProbVector renormalized;       // full length, zero outside the nucleus
};

// Relative slack when comparing the cumulative mass against p, so that sums
// such as 0.6 + 0.3 count as reaching 0.9.
inline constexpr double kNucleusSlack = 1e-12;

// Smallest prefix of the tokens sorted by descending probability (ties by
// lower id) whose mass reaches p, renormalized within the prefix.
Nucleus top_p_nucleus(const ProbVector& probs, double p);

// Inverse-CDF draw in ascending token order for a given u in [0,1).
TokenId sample_at(const ProbVector& probs, double u);
TokenId sample(const ProbVector& probs, RandomSource& rng);

struct SelectionConfig {
  Strategy strategy = Strategy::kGreedy;
  double p = 1.0;
};

TokenId select(const ProbVector& probs, const SelectionConfig& config, RandomSource& rng);

}  // namespace cad
