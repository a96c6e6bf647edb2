#include "cad/fixtures.h"

#include <set>

namespace cad::fixtures {
namespace {

struct ConflictItem {
  const char* id;
  const char* query;
  const char* memorized;
  const char* swapped;
};

// The cue is the last query word and is unique across items.
constexpr ConflictItem kProverbs[] = {
    {"proverb-01", "Better late than", "never", "early"},
    {"proverb-02", "A penny saved is a penny", "earned", "lost"},
    {"proverb-03", "Rome was not built in a", "day", "month"},
    {"proverb-04", "Absence makes the heart grow", "fonder", "colder"},
    {"proverb-05", "All that glitters is not", "gold", "silver"},
    {"proverb-06", "Birds of a feather flock", "together", "apart"},
    {"proverb-07", "Practice makes", "perfect", "progress"},
    {"proverb-08", "Time is", "money", "fleeting"},
    {"proverb-09", "Honesty is the best", "policy", "gift"},
    {"proverb-10", "An apple a day keeps the doctor", "away", "close"},
};

struct Capital {
  const char* country;
  const char* city;
};

constexpr Capital kCapitals[] = {
    {"France", "Paris"},       {"Spain", "Madrid"},        {"Italy", "Rome"},
    {"Germany", "Berlin"},     {"Portugal", "Lisbon"},     {"Austria", "Vienna"},
    {"Greece", "Athens"},      {"Poland", "Warsaw"},       {"Hungary", "Budapest"},
    {"Ireland", "Dublin"},     {"Norway", "Oslo"},         {"Sweden", "Stockholm"},
    {"Finland", "Helsinki"},   {"Denmark", "Copenhagen"},  {"Russia", "Moscow"},
    {"Egypt", "Cairo"},        {"Kenya", "Nairobi"},       {"Japan", "Tokyo"},
    {"China", "Beijing"},      {"Thailand", "Bangkok"},    {"Vietnam", "Hanoi"},
    {"Indonesia", "Jakarta"},  {"Philippines", "Manila"},  {"Peru", "Lima"},
    {"Chile", "Santiago"},     {"Colombia", "Bogota"},     {"Venezuela", "Caracas"},
    {"Cuba", "Havana"},        {"Canada", "Ottawa"},       {"Australia", "Canberra"},
    {"Turkey", "Ankara"},      {"Iran", "Tehran"},         {"Iraq", "Baghdad"},
    {"Lebanon", "Beirut"},     {"Nepal", "Kathmandu"},     {"Ghana", "Accra"},
    {"Senegal", "Dakar"},      {"Morocco", "Rabat"},       {"Belgium", "Brussels"},
    {"Czechia", "Prague"},
};

constexpr std::size_t kCapitalCount = std::size(kCapitals);
// Offset used to pick a different capital as the swapped answer.
constexpr std::size_t kSwapOffset = 7;

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::string w;
  for (char c : s) {
    if (c == ' ') {
      if (!w.empty()) out.push_back(std::move(w));
      w.clear();
    } else {
      w.push_back(c);
    }
  }
  if (!w.empty()) out.push_back(std::move(w));
  return out;
}

}  // namespace

ConflictFixture build_conflict_fixture() {
  struct Row {
    EvalExample original;
    std::string cue, memorized, swapped;
  };
  std::vector<Row> rows;
  for (const auto& p : kProverbs) {
    rows.push_back({{p.id, p.memorized, p.query, {p.memorized}},
                    split_words(p.query).back(), p.memorized, p.swapped});
  }
  for (std::size_t i = 0; i < kCapitalCount; ++i) {
    const auto& c = kCapitals[i];
    const auto& other = kCapitals[(i + kSwapOffset) % kCapitalCount];
    char id[32];
    std::snprintf(id, sizeof(id), "capital-%02zu", i + 1);
    rows.push_back({{id, c.city, std::string("Which city is the capital of ") + c.country, {c.city}},
                    c.country, c.city, other.city});
  }

  std::vector<std::string> words;
  std::set<std::string> entities;
  for (const auto& r : rows) {
    for (auto& w : split_words(r.original.query)) words.push_back(w);
    words.push_back(r.memorized);
    words.push_back(r.swapped);
    entities.insert(r.memorized);
    entities.insert(r.swapped);
  }
  Vocabulary vocab = Vocabulary::with_specials(words);
  const std::size_t v = vocab.size();
  const auto id_of = [&](const std::string& w) { return *vocab.find(w); };

  std::map<TokenId, std::vector<double>> prior;
  for (const auto& r : rows) {
    std::vector<double> row(v, 0.0);
    row[static_cast<std::size_t>(id_of(r.memorized))] = kPriorMemorized;
    row[static_cast<std::size_t>(id_of(r.swapped))] = kPriorSwapped;
    prior[id_of(r.cue)] = std::move(row);
  }
  // After an answer: mostly <eos>, the rest spread over ordinary words so no
  // word has zero prior mass.
  std::vector<TokenId> ordinary;
  for (TokenId id = 0; static_cast<std::size_t>(id) < v; ++id) {
    if (!vocab.is_special(id)) ordinary.push_back(id);
  }
  for (const auto& e : entities) {
    const TokenId self = id_of(e);
    std::vector<double> row(v, 0.0);
    row[static_cast<std::size_t>(vocab.eos())] = kPriorEosAfterAnswer;
    const double rest = (1.0 - kPriorEosAfterAnswer) / static_cast<double>(ordinary.size() - 1);
    for (TokenId id : ordinary) {
      if (id != self) row[static_cast<std::size_t>(id)] = rest;
    }
    prior[self] = std::move(row);
  }

  ConflictFixture fx{CopyPriorModel(std::move(vocab), kConflictLambda, std::move(prior)), {}, {}};
  for (const auto& r : rows) {
    fx.original.push_back(r.original);
    fx.swapped.push_back(make_swap(r.original, r.swapped));
  }
  return fx;
}

std::vector<EvalExample> memotrap_style_examples() {
  std::vector<EvalExample> out;
  for (const auto& p : kProverbs) {
    std::string id = p.id;
    id.replace(0, 7, "memotrap");
    out.push_back({id, std::string("Write a quote that ends in the word \"") + p.swapped + "\":",
                   p.query, {p.swapped}});
  }
  return out;
}

std::vector<EvalExample> nqswap_style_examples() {
  struct Doc {
    const char* id;
    const char* context;
    const char* question;
    const char* answer;
    const char* replacement;
  };
  static constexpr Doc kDocs[] = {
      {"nq-01", "Tesla CEO Elon Musk is now in charge of Twitter, the company confirmed on Friday.",
       "Who is in charge of Twitter now?", "Elon Musk", "Jane Doe"},
      {"nq-02", "The Eiffel Tower was designed by the engineering firm of Gustave Eiffel and completed in 1889.",
       "When was the Eiffel Tower completed?", "1889", "1923"},
      {"nq-03", "Mount Everest, on the border of Nepal and China, is the highest mountain above sea level.",
       "Which country borders Mount Everest along with China?", "Nepal", "Peru"},
      {"nq-04", "The novel Pride and Prejudice was written by Jane Austen and published in 1813.",
       "Who wrote Pride and Prejudice?", "Jane Austen", "Mary Shelley"},
      {"nq-05", "The Amazon River flows through Brazil before emptying into the Atlantic Ocean.",
       "Into which ocean does the Amazon River empty?", "Atlantic Ocean", "Indian Ocean"},
      {"nq-06", "Penicillin was discovered in 1928 by Alexander Fleming at St Mary's Hospital in London.",
       "Who discovered penicillin?", "Alexander Fleming", "Robert Koch"},
      {"nq-07", "The Great Barrier Reef lies off the coast of Queensland in northeastern Australia.",
       "Off which Australian state does the Great Barrier Reef lie?", "Queensland", "Tasmania"},
      {"nq-08", "The first person to walk on the Moon was Neil Armstrong during the Apollo 11 mission.",
       "Who was the first person to walk on the Moon?", "Neil Armstrong", "Yuri Gagarin"},
      {"nq-09", "The Mona Lisa hangs in the Louvre, the national art museum of France in Paris.",
       "In which museum does the Mona Lisa hang?", "Louvre", "Prado"},
      {"nq-10", "Water boils at 100 degrees Celsius at standard atmospheric pressure.",
       "At how many degrees Celsius does water boil?", "100", "85"},
      {"nq-11", "The theory of general relativity was published by Albert Einstein in 1915.",
       "Who published the theory of general relativity?", "Albert Einstein", "Niels Bohr"},
      {"nq-12", "The currency of Japan is the yen, issued by the Bank of Japan.",
       "What is the currency of Japan?", "yen", "won"},
      {"nq-13", "Lake Baikal in Siberia is the deepest freshwater lake in the world.",
       "What is the deepest freshwater lake in the world?", "Lake Baikal", "Lake Tahoe"},
      {"nq-14", "The Statue of Liberty was a gift to the United States from the people of France.",
       "Which country gave the Statue of Liberty to the United States?", "France", "Spain"},
      {"nq-15", "Hamlet is a tragedy written by William Shakespeare around 1600.",
       "Who wrote Hamlet?", "William Shakespeare", "Christopher Marlowe"},
      {"nq-16", "The largest planet in the Solar System is Jupiter, a gas giant.",
       "What is the largest planet in the Solar System?", "Jupiter", "Neptune"},
      {"nq-17", "The Berlin Wall fell in 1989, leading to German reunification a year later.",
       "In which year did the Berlin Wall fall?", "1989", "1975"},
      {"nq-18", "Insulin was first isolated by Frederick Banting and Charles Best in Toronto.",
       "In which city was insulin first isolated?", "Toronto", "Chicago"},
      {"nq-19", "The Sahara, the largest hot desert, covers much of North Africa.",
       "Which region does the Sahara cover much of?", "North Africa", "Central Asia"},
      {"nq-20", "The telephone was patented by Alexander Graham Bell in 1876.",
       "Who patented the telephone?", "Alexander Graham Bell", "Thomas Edison"},
  };
  std::vector<EvalExample> out;
  for (const auto& d : kDocs) {
    out.push_back(make_swap({d.id, d.context, d.question, {d.answer}}, d.replacement));
  }
  return out;
}

std::vector<std::string> ngram_corpus() {
  return {
      "the cat sat on the mat",
      "the dog sat on the rug",
      "a cat chased a mouse",
      "the mouse ran under the mat",
      "a dog chased the cat",
      "the cat slept on the rug",
      "the dog slept under the table",
      "a mouse sat under the table",
      "the cat ate the fish",
      "the dog ate a bone",
      "better late than never",
      "practice makes perfect",
  };
}

}  // namespace cad::fixtures
