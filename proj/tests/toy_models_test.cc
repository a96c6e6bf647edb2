#include <cmath>
#include <map>
#include <random>

#include "cad/toy_models.h"
#include "gtest/gtest.h"

namespace cad {
namespace {

constexpr TokenId kA = 0, kB = 1;

Vocabulary ab_vocab() { return Vocabulary({"a", "b"}, kB); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

TEST(NGramTrain, BigramAddOneMatchesHandCount) {
  const TokenSeq text{kA, kB, kA, kB, kA};
  // Independent tally of adjacent pairs.
  std::map<std::pair<TokenId, TokenId>, int> pairs;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) ++pairs[{text[i], text[i + 1]}];
  int after_a = 0;
  for (const auto& [pair, n] : pairs) after_a += pair.first == kA ? n : 0;
  const double expected = (pairs[{kA, kB}] + 1.0) / (after_a + 2.0);
  ASSERT_DOUBLE_EQ(expected, 0.75);

  const auto model = NGramModel::train({text}, 2, 1.0, ab_vocab());
  const auto p = model.distribution(TokenSeq{kB, kA});
  EXPECT_NEAR(p[kB], 0.75, 1e-15);
  EXPECT_NEAR(p[kA], 0.25, 1e-15);
  const auto from_logits = softmax(model.logits(TokenSeq{kA}));
  EXPECT_NEAR(from_logits[kA], 0.25, 1e-12);
  EXPECT_NEAR(from_logits[kB], 0.75, 1e-12);
}

TEST(NGramTrain, UnigramAddOne) {
  const auto model = NGramModel::train({{kA}}, 1, 1.0, ab_vocab());
  EXPECT_NEAR(model.distribution(TokenSeq{})[kA], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(model.distribution(TokenSeq{kB, kB})[kA], 2.0 / 3.0, 1e-15);
}

TEST(NGramTrain, UnseenContextAndShortSequenceAreUniform) {
  const auto model = NGramModel::train({{kA, kA, kA}}, 3, 0.5, ab_vocab());
  for (const TokenSeq& seq : {TokenSeq{}, TokenSeq{kA}, TokenSeq{kB, kB}}) {
    const auto p = softmax(model.logits(seq));
    EXPECT_NEAR(p[kA], 0.5, 1e-12);
    EXPECT_NEAR(p[kB], 0.5, 1e-12);
  }
  const auto bigram = NGramModel::train({{kA, kB, kA, kB, kA}}, 2, 1.0, ab_vocab());
  const auto empty = softmax(bigram.logits(TokenSeq{}));
  EXPECT_NEAR(empty[kA], 0.5, 1e-12);
}

TEST(NGramTrain, RejectsBadConfig) {
  EXPECT_EQ(code_of([] { NGramModel::train({{kA}}, 0, 1.0, ab_vocab()); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] { NGramModel::train({{kA}}, 2, 0.0, ab_vocab()); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] { NGramModel::train({}, 2, 1.0, ab_vocab()); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] { NGramModel::train({{kA, 5}}, 2, 1.0, ab_vocab()); }), ErrorCode::kInvalidToken);
}

TEST(NGramLogits, OutOfRangeToken) {
  const auto model = NGramModel::train({{kA, kB}}, 2, 1.0, ab_vocab());
  EXPECT_EQ(code_of([&] { model.logits(TokenSeq{kA, 2}); }), ErrorCode::kInvalidToken);
  EXPECT_EQ(code_of([&] { model.logits(TokenSeq{-1}); }), ErrorCode::kInvalidToken);
}

class TrainedNGram : public ::testing::Test {
 protected:
  void SetUp() override {
    vocab_ = Vocabulary::with_specials({"the", "cat", "dog", "sat", "on", "mat", "rug"});
    std::vector<TokenSeq> corpus;
    for (const char* line : {"the cat sat on the mat", "the dog sat on the rug", "the cat sat"}) {
      auto seq = vocab_.tokenize(line);
      seq.push_back(vocab_.eos());
      corpus.push_back(seq);
    }
    model_ = std::make_unique<NGramModel>(NGramModel::train(corpus, 3, 0.1, vocab_));
  }

  std::vector<TokenSeq> random_sequences(std::size_t n) const {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<TokenId> tok(0, static_cast<TokenId>(vocab_.size() - 1));
    std::uniform_int_distribution<int> len(0, 8);
    std::vector<TokenSeq> out(n);
    for (auto& seq : out) {
      seq.resize(static_cast<std::size_t>(len(rng)));
      for (auto& t : seq) t = tok(rng);
    }
    return out;
  }

  Vocabulary vocab_;
  std::unique_ptr<NGramModel> model_;
};

TEST_F(TrainedNGram, LogitsAreNormalizedLogProbabilities) {
  for (const auto& seq : random_sequences(100)) {
    const auto logits = model_->logits(seq);
    ASSERT_EQ(logits.size(), vocab_.size());
    double sum = 0.0;
    for (double l : logits.values()) sum += std::exp(l);
    EXPECT_NEAR(sum, 1.0, 1e-9);
    const auto p = softmax(logits);
    EXPECT_NO_THROW(check_distribution(p));
  }
}

TEST_F(TrainedNGram, DeterministicAndReloadsBitIdentically) {
  const auto reloaded = NGramModel::deserialize(model_->serialize());
  EXPECT_EQ(reloaded.serialize(), model_->serialize());
  for (const auto& seq : random_sequences(100)) {
    const auto a = model_->logits(seq);
    EXPECT_EQ(a, model_->logits(seq));
    EXPECT_EQ(a, reloaded.logits(seq));
  }
}

TEST(NGramPersistence, RejectsForeignDocuments) {
  EXPECT_EQ(code_of([] { NGramModel::deserialize("{\"format\":\"other\"}"); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([] { NGramModel::deserialize("not json"); }), ErrorCode::kFormat);
  const auto copy = CopyPriorModel(ab_vocab(), 0.5, {});
  EXPECT_EQ(code_of([&] { NGramModel::deserialize(copy.serialize()); }), ErrorCode::kFormat);
}

// --- copy-prior model --------------------------------------------------------

class CopyPrior : public ::testing::Test {
 protected:
  // never, early, than, <eos>, <sep>, <unk>
  void SetUp() override {
    vocab_ = Vocabulary::with_specials({"never", "early", "than"});
    never_ = *vocab_.find("never");
    early_ = *vocab_.find("early");
    than_ = *vocab_.find("than");
  }

  CopyPriorModel model(double lambda) const {
    std::vector<double> row(vocab_.size(), 0.0);
    row[static_cast<std::size_t>(never_)] = 0.9;
    row[static_cast<std::size_t>(early_)] = 0.1;
    return CopyPriorModel(vocab_, lambda, {{than_, row}});
  }

  Vocabulary vocab_;
  TokenId never_{}, early_{}, than_{};
};

TEST_F(CopyPrior, EmptySpanIsThePriorRow) {
  const auto p = softmax(model(0.3).copyprior_logits(TokenSeq{than_}, TokenSeq{}));
  EXPECT_NEAR(p[never_], 0.9, 1e-12);
  EXPECT_NEAR(p[early_], 0.1, 1e-12);
  EXPECT_EQ(p[than_], 0.0);
}

TEST_F(CopyPrior, MixtureArithmetic) {
  const auto logits = model(0.3).copyprior_logits(TokenSeq{than_}, TokenSeq{early_});
  const auto p = softmax(logits);
  EXPECT_NEAR(p[early_], 0.3 * 1.0 + 0.7 * 0.1, 1e-12);
  EXPECT_NEAR(p[never_], 0.7 * 0.9, 1e-12);
  EXPECT_EQ(logits[than_], kLogitFloor);
}

TEST_F(CopyPrior, CopyMassIsUniformOverDistinctTokens) {
  const auto p = softmax(model(0.4).copyprior_logits(TokenSeq{than_}, TokenSeq{early_, never_, early_}));
  EXPECT_NEAR(p[early_], 0.4 * 0.5 + 0.6 * 0.1, 1e-12);
  EXPECT_NEAR(p[never_], 0.4 * 0.5 + 0.6 * 0.9, 1e-12);
}

TEST_F(CopyPrior, ZeroLambdaIgnoresContext) {
  const auto m = model(0.0);
  const auto base = m.copyprior_logits(TokenSeq{than_}, TokenSeq{});
  EXPECT_EQ(m.copyprior_logits(TokenSeq{than_}, TokenSeq{early_}), base);
  EXPECT_EQ(m.copyprior_logits(TokenSeq{than_}, TokenSeq{never_, early_, than_}), base);
}

TEST_F(CopyPrior, Errors) {
  EXPECT_EQ(code_of([&] { CopyPriorModel(vocab_, 1.5, {}); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([&] { CopyPriorModel(vocab_, -0.1, {}); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([&] { CopyPriorModel(vocab_, 0.3, {{than_, std::vector<double>(vocab_.size(), 0.5)}}); }),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([&] { model(0.3).copyprior_logits(TokenSeq{}, TokenSeq{}); }), ErrorCode::kInvalidInput);
}

TEST_F(CopyPrior, ContextSpanEndsAtLastSeparatorAndCopiesOnce) {
  const auto m = model(0.3);
  const TokenId sep = *vocab_.sep();
  EXPECT_TRUE(m.context_span(TokenSeq{early_, than_}).empty());
  EXPECT_EQ(m.context_span(TokenSeq{early_, sep, than_}), (TokenSeq{early_}));
  EXPECT_EQ(m.context_span(TokenSeq{early_, never_, sep, than_, early_}), (TokenSeq{never_}));
  // Reserved tokens are never copied.
  EXPECT_EQ(m.context_span(TokenSeq{vocab_.eos(), early_, sep, than_}), (TokenSeq{early_}));

  const auto p = softmax(m.logits(TokenSeq{early_, sep, than_}));
  EXPECT_NEAR(p[early_], 0.37, 1e-12);
  EXPECT_NEAR(p[never_], 0.63, 1e-12);
}

TEST_F(CopyPrior, SerializationRoundTrip) {
  const auto m = model(0.3);
  const auto reloaded = CopyPriorModel::deserialize(m.serialize());
  EXPECT_EQ(reloaded.serialize(), m.serialize());
  const TokenId sep = *vocab_.sep();
  for (const TokenSeq& seq : {TokenSeq{than_}, TokenSeq{early_, sep, than_}, TokenSeq{never_}}) {
    EXPECT_EQ(reloaded.logits(seq), m.logits(seq));
  }
}

TEST_F(CopyPrior, LoadToyModelDispatchesOnKind) {
  const auto path = std::filesystem::temp_directory_path() / "cad_copy_prior_test.model";
  save_text(path, model(0.3).serialize());
  auto provider = load_toy_model(path);
  EXPECT_EQ(provider->vocab_size(), vocab_.size());
  EXPECT_NE(dynamic_cast<CopyPriorModel*>(provider.get()), nullptr);
  std::filesystem::remove(path);
  EXPECT_EQ(code_of([&] { load_toy_model(path); }), ErrorCode::kIo);
}

}  // namespace
}  // namespace cad
