#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cad/cad_engine.h"
#include "cad/metrics.h"
#include "cad/provider.h"

namespace cad {

inline constexpr std::string_view kReportFormat = "cad-report-v1";
inline constexpr std::string_view kSweepFormat = "cad-sweep-v1";

struct ExampleResult {
  std::string id;
  std::string prediction;
  int em = 0;
  double rouge_l = 0.0;  // best F1 over the gold answers
  bool failed = false;
  std::string error;

  bool operator==(const ExampleResult&) const = default;
};

struct Report {
  std::string provider;
  GenerationConfig config;
  std::string prompt_template;
  std::vector<ExampleResult> per_example;  // sorted by id
  double mean_em = 0.0;
  double mean_rouge_l = 0.0;
  std::size_t failures = 0;
};

bool operator==(const Report& a, const Report& b);

struct EvalOptions {
  std::string prompt_template{kDefaultTemplate};
  int jobs = 1;
  // Called after each finished example with (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

// Generates an answer for every example and scores it. Per-example failures
// are recorded with em = 0 and do not abort the run. Every example is decoded
// with config.seed.
Report run_eval(const std::vector<EvalExample>& examples, const LogitProvider& provider,
                const GenerationConfig& config, const EvalOptions& options = {});

struct SweepReport {
  std::vector<std::pair<double, Report>> entries;
};

SweepReport sweep(const std::vector<EvalExample>& examples, const LogitProvider& provider,
                  const std::vector<double>& alphas, const GenerationConfig& config,
                  const EvalOptions& options = {});

// Newline-delimited records {id, context, query, answers}.
std::vector<EvalExample> parse_dataset(std::string_view text);
std::vector<EvalExample> read_dataset(const std::filesystem::path& path);
std::string format_dataset(const std::vector<EvalExample>& examples);

// JSON documents. `timestamp` goes into a single "created_at" line; all other
// bytes depend only on the report.
std::string report_to_json(const Report& report, std::string_view timestamp);
std::string sweep_to_json(const SweepReport& sweep, std::string_view timestamp);
// alpha,em,rouge_l table.
std::string sweep_to_csv(const SweepReport& sweep);

// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

}  // namespace cad
