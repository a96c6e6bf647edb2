#include "cad/eval.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <mutex>
#include <sstream>
#include <thread>

#include "cad/toy_models.h"
#include "json.hpp"

namespace cad {
namespace {

using json = nlohmann::json;

ExampleResult evaluate_one(const EvalExample& example, const LogitProvider& provider,
                           const GenerationConfig& config, const std::string& tmpl) {
  ExampleResult r;
  r.id = example.id;
  try {
    const Prompt prompt = build_prompt(provider, tmpl, example.context, example.query);
    r.prediction = generate(provider, prompt, config).text;
    r.em = exact_match(r.prediction, example.answers);
    for (const auto& answer : example.answers) {
      r.rouge_l = std::max(r.rouge_l, cad::rouge_l(r.prediction, answer).f1);
    }
  } catch (const std::exception& e) {
    r.em = 0;
    r.rouge_l = 0.0;
    r.failed = true;
    r.error = e.what();
  }
  return r;
}

json config_to_json(const GenerationConfig& c) {
  json j;
  j["alpha"] = c.alpha;
  j["strategy"] = strategy_name(c.strategy);
  j["p"] = c.p;
  j["max_tokens"] = c.max_tokens;
  j["seed"] = c.seed;
  j["stop_tokens"] = std::vector<TokenId>(c.stop_tokens.begin(), c.stop_tokens.end());
  return j;
}

json report_body(const Report& r) {
  json j;
  j["provider"] = r.provider;
  j["config"] = config_to_json(r.config);
  j["template"] = r.prompt_template;
  j["aggregates"] = {{"em", r.mean_em},
                     {"rouge_l_f1", r.mean_rouge_l},
                     {"count", r.per_example.size()},
                     {"failures", r.failures}};
  json rows = json::array();
  for (const auto& e : r.per_example) {
    json row = {{"id", e.id}, {"prediction", e.prediction}, {"em", e.em}, {"rouge_l", e.rouge_l}};
    if (e.failed) {
      row["failed"] = true;
      row["error"] = e.error;
    }
    rows.push_back(row);
  }
  j["per_example"] = rows;
  return j;
}

}  // namespace

bool operator==(const Report& a, const Report& b) {
  return a.provider == b.provider && a.config.alpha == b.config.alpha &&
         a.config.strategy == b.config.strategy && a.config.p == b.config.p &&
         a.config.max_tokens == b.config.max_tokens && a.config.seed == b.config.seed &&
         a.config.stop_tokens == b.config.stop_tokens &&
         a.prompt_template == b.prompt_template && a.per_example == b.per_example &&
         a.mean_em == b.mean_em && a.mean_rouge_l == b.mean_rouge_l &&
         a.failures == b.failures;
}

Report run_eval(const std::vector<EvalExample>& examples, const LogitProvider& provider,
                const GenerationConfig& config, const EvalOptions& options) {
  if (examples.empty()) throw Error(ErrorCode::kInvalidInput, "no examples to evaluate");
  config.validate();
  // Surfaces template errors before any work is done.
  if (options.prompt_template.find(kContextSlot) == std::string::npos ||
      options.prompt_template.find(kQuerySlot) == std::string::npos) {
    throw Error(ErrorCode::kInvalidConfig, "template must contain {context} and {query}");
  }

  std::vector<ExampleResult> results(examples.size());
  const std::size_t jobs = static_cast<std::size_t>(std::max(1, options.jobs));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;

  std::optional<SerializedProvider> serialized;
  const LogitProvider* shared = &provider;
  if (jobs > 1 && !provider.concurrent_safe()) shared = &serialized.emplace(provider);

  auto worker = [&] {
    for (std::size_t i = next++; i < examples.size(); i = next++) {
      results[i] = evaluate_one(examples[i], *shared, config, options.prompt_template);
      const std::size_t finished = ++done;
      if (options.progress) {
        std::lock_guard lock(progress_mu);
        options.progress(finished, examples.size());
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(jobs, examples.size()); ++t) pool.emplace_back(worker);
  }

  std::stable_sort(results.begin(), results.end(),
                   [](const ExampleResult& a, const ExampleResult& b) { return a.id < b.id; });
  Report report;
  report.provider = provider.name();
  report.config = config;
  report.prompt_template = options.prompt_template;
  double em = 0.0, rouge = 0.0;
  for (const auto& r : results) {
    em += r.em;
    rouge += r.rouge_l;
    if (r.failed) ++report.failures;
  }
  const auto n = static_cast<double>(results.size());
  report.mean_em = em / n;
  report.mean_rouge_l = rouge / n;
  report.per_example = std::move(results);
  return report;
}

SweepReport sweep(const std::vector<EvalExample>& examples, const LogitProvider& provider,
                  const std::vector<double>& alphas, const GenerationConfig& config,
                  const EvalOptions& options) {
  if (alphas.empty()) throw Error(ErrorCode::kInvalidConfig, "no alpha values to sweep");
  for (double a : alphas) {
    if (!(a >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "alpha values must be >= 0");
  }
  SweepReport out;
  for (double a : alphas) {
    GenerationConfig c = config;
    c.alpha = a;
    out.entries.emplace_back(a, run_eval(examples, provider, c, options));
  }
  return out;
}

std::vector<EvalExample> parse_dataset(std::string_view text) {
  std::vector<EvalExample> out;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      EvalExample e;
      e.id = j.at("id").get<std::string>();
      e.context = j.at("context").get<std::string>();
      e.query = j.at("query").get<std::string>();
      e.answers = j.at("answers").get<std::vector<std::string>>();
      if (e.answers.empty()) throw Error(ErrorCode::kFormat, "empty answer list");
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kFormat, "dataset line " + std::to_string(line_no) + ": " + ex.what());
    } catch (const Error& ex) {
      throw Error(ErrorCode::kFormat, "dataset line " + std::to_string(line_no) + ": " + ex.detail());
    }
  }
  return out;
}

std::vector<EvalExample> read_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_text(path));
}

std::string format_dataset(const std::vector<EvalExample>& examples) {
  std::string out;
  for (const auto& e : examples) {
    json j = {{"id", e.id}, {"context", e.context}, {"query", e.query}, {"answers", e.answers}};
    out += j.dump() + "\n";
  }
  return out;
}

std::string report_to_json(const Report& report, std::string_view timestamp) {
  json doc = report_body(report);
  doc["format"] = kReportFormat;
  doc["created_at"] = timestamp;
  return doc.dump(2) + "\n";
}

std::string sweep_to_json(const SweepReport& sweep, std::string_view timestamp) {
  json doc;
  doc["format"] = kSweepFormat;
  doc["created_at"] = timestamp;
  json entries = json::array();
  for (const auto& [alpha, report] : sweep.entries) {
    entries.push_back({{"alpha", alpha}, {"report", report_body(report)}});
  }
  doc["entries"] = entries;
  return doc.dump(2) + "\n";
}

std::string format_double(double value) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string sweep_to_csv(const SweepReport& sweep) {
  std::string out = "alpha,em,rouge_l\n";
  for (const auto& [alpha, report] : sweep.entries) {
    out += format_double(alpha) + "," + format_double(report.mean_em) + "," +
           format_double(report.mean_rouge_l) + "\n";
  }
  return out;
}

}  // namespace cad
