#include "cad/sampling.h"

#include <algorithm>
#include <numeric>

namespace cad {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

void check_p(double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "nucleus mass p must lie in (0, 1]");
  }
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed) {
  for (auto& word : s_) word = splitmix64(seed);
}

std::uint64_t RandomSource::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RandomSource::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::string_view strategy_name(Strategy s) {
  return s == Strategy::kGreedy ? "greedy" : "top_p";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "greedy") return Strategy::kGreedy;
  if (name == "top_p" || name == "top-p") return Strategy::kTopP;
  throw Error(ErrorCode::kInvalidConfig, "unknown sampling strategy '" + std::string(name) + "'");
}

Nucleus top_p_nucleus(const ProbVector& probs, double p) {
  check_p(p);
  check_distribution(probs);
  const auto v = probs.values();
  std::vector<TokenId> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](TokenId a, TokenId b) { return v[a] > v[b]; });

  Nucleus nucleus;
  double mass = 0.0;
  const double target = p * (1.0 - kNucleusSlack);
  for (TokenId id : order) {
    nucleus.members.push_back(id);
    mass += v[id];
    if (mass >= target) break;
  }
  std::vector<double> renorm(v.size(), 0.0);
  for (TokenId id : nucleus.members) renorm[id] = v[id] / mass;
  nucleus.renormalized = ProbVector(std::move(renorm));
  return nucleus;
}

TokenId sample_at(const ProbVector& probs, double u) {
  const auto v = probs.values();
  if (v.empty()) throw Error(ErrorCode::kInvalidInput, "sampling from an empty distribution");
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > 0.0) last_positive = i;
    cumulative += v[i];
    if (cumulative > u && v[i] > 0.0) return static_cast<TokenId>(i);
  }
  // Rounding left the total just under u.
  return static_cast<TokenId>(last_positive);
}

TokenId sample(const ProbVector& probs, RandomSource& rng) {
  check_distribution(probs);
  return sample_at(probs, rng.uniform());
}

TokenId select(const ProbVector& probs, const SelectionConfig& config, RandomSource& rng) {
  switch (config.strategy) {
    case Strategy::kGreedy:
      check_distribution(probs);
      return argmax(probs);
    case Strategy::kTopP:
      return sample(top_p_nucleus(probs, config.p).renormalized, rng);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown sampling strategy");
}

}  // namespace cad
