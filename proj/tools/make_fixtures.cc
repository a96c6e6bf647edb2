// Writes the bundled synthetic fixtures into a directory (default: fixtures).

#include <filesystem>
#include <iostream>
#include <string>

#include "cad/eval.h"
#include "cad/fixtures.h"

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "fixtures";
  try {
    std::filesystem::create_directories(dir);
    const auto fx = cad::fixtures::build_conflict_fixture();
    cad::save_text(dir / "conflict.model", fx.model.serialize());
    cad::save_text(dir / "conflict_original.jsonl", cad::format_dataset(fx.original));
    cad::save_text(dir / "swap.jsonl", cad::format_dataset(fx.swapped));
    cad::save_text(dir / "memotrap.jsonl", cad::format_dataset(cad::fixtures::memotrap_style_examples()));
    cad::save_text(dir / "nqswap.jsonl", cad::format_dataset(cad::fixtures::nqswap_style_examples()));
    std::string corpus;
    for (const auto& line : cad::fixtures::ngram_corpus()) corpus += line + "\n";
    cad::save_text(dir / "corpus.txt", corpus);
  } catch (const std::exception& e) {
    std::cerr << "make_fixtures: " << e.what() << "\n";
    return 2;
  }
  std::cout << "fixtures written to " << dir.string() << "\n";
  return 0;
}
