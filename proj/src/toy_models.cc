#include "cad/toy_models.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cad {
namespace {

using json = nlohmann::json;

void check_tokens(const Vocabulary& vocab, std::span<const TokenId> seq) {
  for (TokenId id : seq) {
    if (!vocab.contains(id)) {
      throw Error(ErrorCode::kInvalidToken, "token id " + std::to_string(id) +
                                                " outside vocabulary of size " +
                                                std::to_string(vocab.size()));
    }
  }
}

LogitVector log_of(std::span<const double> probs) {
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out[i] = probs[i] > 0.0 ? std::log(probs[i]) : kLogitFloor;
  }
  return LogitVector(std::move(out));
}

json vocab_to_json(const Vocabulary& vocab) {
  json j;
  j["tokens"] = vocab.surfaces();
  j["eos"] = vocab.eos();
  if (vocab.unk()) j["unk"] = *vocab.unk();
  if (vocab.sep()) j["sep"] = *vocab.sep();
  return j;
}

Vocabulary vocab_from_json(const json& j) {
  auto opt = [&](const char* key) -> std::optional<TokenId> {
    if (!j.contains(key)) return std::nullopt;
    return j.at(key).get<TokenId>();
  };
  return Vocabulary(j.at("tokens").get<std::vector<std::string>>(),
                    j.at("eos").get<TokenId>(), opt("unk"), opt("sep"));
}

TokenId lookup(const Vocabulary& vocab, const std::string& word) {
  auto id = vocab.find(word);
  if (!id) throw Error(ErrorCode::kFormat, "token '" + word + "' not in vocabulary");
  return *id;
}

json parse_document(std::string_view text, std::string_view kind) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed toy model: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kToyFormat) {
    throw Error(ErrorCode::kFormat, "missing format tag cad-toy-v1");
  }
  if (!kind.empty() && doc.value("kind", "") != kind) {
    throw Error(ErrorCode::kFormat, "expected a " + std::string(kind) + " model");
  }
  return doc;
}

}  // namespace

// --- NGramModel --------------------------------------------------------------

NGramModel::NGramModel(Vocabulary vocab, int order, double k, Counts counts)
    : vocab_(std::move(vocab)), order_(order), k_(k), counts_(std::move(counts)) {
  if (order_ < 1) throw Error(ErrorCode::kInvalidConfig, "n-gram order must be >= 1");
  if (!(k_ > 0.0) || !std::isfinite(k_)) {
    throw Error(ErrorCode::kInvalidConfig, "add-k constant must be > 0");
  }
  for (const auto& [context, row] : counts_) {
    if (context.size() != static_cast<std::size_t>(order_ - 1)) {
      throw Error(ErrorCode::kInvalidConfig, "n-gram context has the wrong length");
    }
    check_tokens(vocab_, context);
    std::uint64_t total = 0;
    for (const auto& [next, count] : row) {
      check_tokens(vocab_, std::span(&next, 1));
      total += count;
    }
    totals_[context] = total;
  }
}

NGramModel NGramModel::train(const std::vector<TokenSeq>& corpus, int order,
                             double k, Vocabulary vocab) {
  if (order < 1) throw Error(ErrorCode::kInvalidConfig, "n-gram order must be >= 1");
  if (!(k > 0.0)) throw Error(ErrorCode::kInvalidConfig, "add-k constant must be > 0");
  if (corpus.empty()) throw Error(ErrorCode::kInvalidConfig, "empty training corpus");
  const auto n = static_cast<std::size_t>(order);
  Counts counts;
  for (const auto& seq : corpus) {
    check_tokens(vocab, seq);
    for (std::size_t end = n; end <= seq.size(); ++end) {
      TokenSeq context(seq.begin() + static_cast<std::ptrdiff_t>(end - n),
                       seq.begin() + static_cast<std::ptrdiff_t>(end - 1));
      ++counts[context][seq[end - 1]];
    }
  }
  return NGramModel(std::move(vocab), order, k, std::move(counts));
}

ProbVector NGramModel::distribution(std::span<const TokenId> seq) const {
  check_tokens(vocab_, seq);
  const std::size_t v = vocab_.size();
  const auto width = static_cast<std::size_t>(order_ - 1);
  if (seq.size() < width) return ProbVector(std::vector<double>(v, 1.0 / static_cast<double>(v)));

  const TokenSeq context(seq.end() - static_cast<std::ptrdiff_t>(width), seq.end());
  const double denom_k = k_ * static_cast<double>(v);
  std::vector<double> probs(v);
  auto row = counts_.find(context);
  if (row == counts_.end()) {
    std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(v));
    return ProbVector(std::move(probs));
  }
  const double denom = static_cast<double>(totals_.at(context)) + denom_k;
  std::fill(probs.begin(), probs.end(), k_ / denom);
  for (const auto& [next, count] : row->second) {
    probs[static_cast<std::size_t>(next)] = (static_cast<double>(count) + k_) / denom;
  }
  return ProbVector(std::move(probs));
}

LogitVector NGramModel::logits(std::span<const TokenId> seq) const {
  return log_of(distribution(seq).values());
}

std::string NGramModel::name() const {
  return "toy-ngram(order=" + std::to_string(order_) + ")";
}

std::string NGramModel::serialize() const {
  json doc;
  doc["format"] = kToyFormat;
  doc["kind"] = "ngram";
  doc["vocab"] = vocab_to_json(vocab_);
  doc["order"] = order_;
  doc["k"] = k_;
  json rows = json::array();
  for (const auto& [context, row] : counts_) {
    json entry;
    std::vector<std::string> ctx;
    for (TokenId id : context) ctx.push_back(vocab_.surface(id));
    entry["context"] = ctx;
    json next = json::object();
    for (const auto& [id, count] : row) next[vocab_.surface(id)] = count;
    entry["next"] = next;
    rows.push_back(entry);
  }
  doc["counts"] = rows;
  return doc.dump(2) + "\n";
}

NGramModel NGramModel::deserialize(std::string_view text) {
  const json doc = parse_document(text, "ngram");
  try {
    Vocabulary vocab = vocab_from_json(doc.at("vocab"));
    Counts counts;
    for (const auto& entry : doc.at("counts")) {
      TokenSeq context;
      for (const auto& w : entry.at("context")) context.push_back(lookup(vocab, w.get<std::string>()));
      auto& row = counts[context];
      for (const auto& [word, count] : entry.at("next").items()) {
        row[lookup(vocab, word)] = count.get<std::uint64_t>();
      }
    }
    return NGramModel(std::move(vocab), doc.at("order").get<int>(),
                      doc.at("k").get<double>(), std::move(counts));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed n-gram model: ") + e.what());
  }
}

// --- CopyPriorModel ----------------------------------------------------------

CopyPriorModel::CopyPriorModel(Vocabulary vocab, double lambda,
                               std::map<TokenId, std::vector<double>> prior)
    : vocab_(std::move(vocab)), lambda_(lambda), prior_(std::move(prior)) {
  if (!(lambda_ >= 0.0 && lambda_ <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "copy weight lambda must lie in [0,1]");
  }
  for (const auto& [prev, row] : prior_) {
    check_tokens(vocab_, std::span(&prev, 1));
    if (row.size() != vocab_.size()) {
      throw Error(ErrorCode::kInvalidConfig, "prior row length differs from vocabulary size");
    }
    try {
      check_distribution(ProbVector(row));
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidConfig,
                  "prior row for '" + vocab_.surface(prev) + "': " + e.detail());
    }
  }
}

std::vector<double> CopyPriorModel::prior_row(TokenId previous) const {
  auto it = prior_.find(previous);
  if (it != prior_.end()) return it->second;
  return std::vector<double>(vocab_.size(), 1.0 / static_cast<double>(vocab_.size()));
}

LogitVector CopyPriorModel::copyprior_logits(std::span<const TokenId> seq,
                                             std::span<const TokenId> context_span) const {
  if (seq.empty()) throw Error(ErrorCode::kInvalidInput, "copy-prior model needs a non-empty sequence");
  check_tokens(vocab_, seq);
  check_tokens(vocab_, context_span);
  std::vector<double> p = prior_row(seq.back());
  if (context_span.empty()) return log_of(p);

  const std::set<TokenId> distinct(context_span.begin(), context_span.end());
  const double copy_mass = 1.0 / static_cast<double>(distinct.size());
  for (double& x : p) x *= 1.0 - lambda_;
  for (TokenId id : distinct) p[static_cast<std::size_t>(id)] += lambda_ * copy_mass;
  return log_of(p);
}

TokenSeq CopyPriorModel::context_span(std::span<const TokenId> seq) const {
  const auto sep = vocab_.sep();
  if (!sep) return {};
  auto last = std::find(seq.rbegin(), seq.rend(), *sep);
  if (last == seq.rend()) return {};
  const auto split = seq.begin() + (seq.rend() - last - 1);
  const std::set<TokenId> later(split + 1, seq.end());
  TokenSeq span;
  for (auto it = seq.begin(); it != split; ++it) {
    if (!vocab_.is_special(*it) && !later.contains(*it)) span.push_back(*it);
  }
  return span;
}

std::string CopyPriorModel::name() const {
  std::ostringstream os;
  os << "toy-copy(lambda=" << lambda_ << ")";
  return os.str();
}

std::string CopyPriorModel::serialize() const {
  json doc;
  doc["format"] = kToyFormat;
  doc["kind"] = "copy-prior";
  doc["vocab"] = vocab_to_json(vocab_);
  doc["lambda"] = lambda_;
  json rows = json::object();
  for (const auto& [prev, row] : prior_) {
    json sparse = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] != 0.0) sparse[vocab_.surface(static_cast<TokenId>(i))] = row[i];
    }
    rows[vocab_.surface(prev)] = sparse;
  }
  doc["prior"] = rows;
  return doc.dump(2) + "\n";
}

CopyPriorModel CopyPriorModel::deserialize(std::string_view text) {
  const json doc = parse_document(text, "copy-prior");
  try {
    Vocabulary vocab = vocab_from_json(doc.at("vocab"));
    std::map<TokenId, std::vector<double>> prior;
    for (const auto& [prev, sparse] : doc.at("prior").items()) {
      std::vector<double> row(vocab.size(), 0.0);
      for (const auto& [word, p] : sparse.items()) {
        row[static_cast<std::size_t>(lookup(vocab, word))] = p.get<double>();
      }
      prior.emplace(lookup(vocab, prev), std::move(row));
    }
    return CopyPriorModel(std::move(vocab), doc.at("lambda").get<double>(), std::move(prior));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed copy-prior model: ") + e.what());
  }
}

// --- persistence -------------------------------------------------------------

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void save_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::unique_ptr<LogitProvider> load_toy_model(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  const json doc = parse_document(text, "");
  const std::string kind = doc.value("kind", "");
  if (kind == "ngram") return std::make_unique<NGramModel>(NGramModel::deserialize(text));
  if (kind == "copy-prior") return std::make_unique<CopyPriorModel>(CopyPriorModel::deserialize(text));
  throw Error(ErrorCode::kFormat, "unknown toy model kind '" + kind + "'");
}

}  // namespace cad
