#pragma once

#include <chrono>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cad/provider.h"

namespace cad::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// "toy-ngram:<file>", "toy-copy:<file>", "cmd:<command>" or "http:<url>".
struct ProviderSpec {
  std::string scheme;
  std::string locator;

  static ProviderSpec parse(std::string_view text);
};

std::unique_ptr<LogitProvider> open_provider(const ProviderSpec& spec,
                                             std::chrono::milliseconds wire_timeout);

// Wire timeout from CAD_WIRE_TIMEOUT_MS, falling back to 30 s.
std::chrono::milliseconds wire_timeout_from_env();

// Runs `cad <args...>` (args excludes the program name). Machine-readable
// output goes to `out`, progress and diagnostics to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cad::cli
