#include <random>

#include "cad/error.h"
#include "cad/metrics.h"
#include "gtest/gtest.h"
#include "oracles.h"

namespace cad {
namespace {

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize_answer(" The Eiffel Tower. "), "eiffel tower");
  EXPECT_EQ(normalize_answer("early"), "early");
  EXPECT_EQ(normalize_answer("An  apple,  a day"), "apple day");
  EXPECT_EQ(normalize_answer(""), "");
  EXPECT_EQ(normalize_answer("theater"), "theater");
}

TEST(ExactMatch, Examples) {
  EXPECT_EQ(exact_match("Early!", {"early"}), 1);
  EXPECT_EQ(exact_match("never", {"early"}), 0);
  EXPECT_EQ(exact_match("the twitter ceo", {"Twitter CEO"}), 1);
  EXPECT_EQ(exact_match("paris", {"Lyon", "Paris."}), 1);
  EXPECT_EQ(exact_match("paris", {}), 0);
}

TEST(ExactMatch, SymmetricUnderNormalization) {
  const std::vector<std::string> words{"The Cat", "cat", "a dog!", "Dog", "", "an", "x y", "X  Y."};
  for (const auto& a : words) {
    for (const auto& b : words) EXPECT_EQ(exact_match(a, {b}), exact_match(b, {a})) << a << " / " << b;
  }
}

TEST(Rouge, Identical) {
  const auto s = rouge_l("police killed the gunman", "police killed the gunman");
  EXPECT_EQ(s.precision, 1.0);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.f1, 1.0);
}

TEST(Rouge, BruteForceExample) {
  const auto a = rouge_tokens("police kill the gunman");
  const auto b = rouge_tokens("police killed the gunman");
  ASSERT_EQ(oracle::brute_force_lcs(a, b), 3u);
  const auto s = rouge_l("police kill the gunman", "police killed the gunman");
  EXPECT_NEAR(s.precision, 0.75, 1e-15);
  EXPECT_NEAR(s.recall, 0.75, 1e-15);
  EXPECT_NEAR(s.f1, 0.75, 1e-15);
}

TEST(Rouge, EmptySides) {
  for (const auto& s : {rouge_l("", "something here"), rouge_l("words", ""), rouge_l("", "")}) {
    EXPECT_EQ(s.precision, 0.0);
    EXPECT_EQ(s.recall, 0.0);
    EXPECT_EQ(s.f1, 0.0);
  }
}

TEST(Rouge, CaseInsensitiveTokens) {
  EXPECT_EQ(rouge_tokens("  Hello   WORLD\tagain\n"), (std::vector<std::string>{"hello", "world", "again"}));
  EXPECT_EQ(rouge_l("Hello world", "hello WORLD").f1, 1.0);
}

TEST(Rouge, DpMatchesBruteForceOnRandomSequences) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> len(0, 10), sym(0, 3);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::string> a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
    for (auto& t : a) t = std::string(1, static_cast<char>('a' + sym(rng)));
    for (auto& t : b) t = std::string(1, static_cast<char>('a' + sym(rng)));
    ASSERT_EQ(lcs_length(a, b), oracle::brute_force_lcs(a, b));
    const auto s = rouge_l([&] {
      std::string out;
      for (const auto& t : a) out += t + " ";
      return out;
    }(), [&] {
      std::string out;
      for (const auto& t : b) out += t + " ";
      return out;
    }());
    EXPECT_GE(s.f1, 0.0);
    EXPECT_LE(s.f1, 1.0);
  }
}

TEST(MakeSwap, ReplacesEveryOccurrence) {
  const EvalExample ex{"q1", "Elon Musk is now in charge", "Who is in charge?", {"Elon Musk"}};
  const auto swapped = make_swap(ex, "Jane Doe");
  EXPECT_EQ(swapped.context, "Jane Doe is now in charge");
  EXPECT_EQ(swapped.answers, (std::vector<std::string>{"Jane Doe"}));
  EXPECT_EQ(swapped.query, ex.query);
  EXPECT_EQ(swapped.id, "q1-swap");

  const EvalExample twice{"q2", "Rome. Rome was not built in a day.", "q", {"Rome"}};
  EXPECT_EQ(make_swap(twice, "Ur").context, "Ur. Ur was not built in a day.");
}

TEST(MakeSwap, SameReplacementKeepsContext) {
  const EvalExample ex{"q1", "Elon Musk is now in charge", "q", {"Elon Musk"}};
  const auto swapped = make_swap(ex, "Elon Musk");
  EXPECT_EQ(swapped.context, ex.context);
  EXPECT_EQ(swapped.id, "q1-swap");
}

TEST(MakeSwap, AbsentAnswer) {
  try {
    make_swap(EvalExample{"q", "nothing relevant", "q", {"X"}}, "Y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotSwappable);
  }
}

}  // namespace
}  // namespace cad
