#include "cad/cli.h"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cad/cad_engine.h"
#include "cad/eval.h"
#include "cad/toy_models.h"
#include "cad/wire.h"
#include "json.hpp"

namespace cad::cli {
namespace {

using json = nlohmann::json;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string unescape_template(std::string s) {
  // Lets "--template '{context}\n\n{query}'" be typed on a shell line.
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      if (s[i + 1] == 'n') { out.push_back('\n'); ++i; continue; }
      if (s[i + 1] == 't') { out.push_back('\t'); ++i; continue; }
      if (s[i + 1] == '\\') { out.push_back('\\'); ++i; continue; }
    }
    out.push_back(s[i]);
  }
  return out;
}

// Decoding flags shared by generate, eval and sweep.
struct DecodeFlags {
  std::string provider;
  double alpha = 0.5;
  std::string strategy = "top_p";
  double p = 0.9;
  int max_tokens = 64;
  std::uint64_t seed = 0;
  std::string prompt_template{kDefaultTemplate};
  std::string format = "text";
  std::string out;

  CLI::Option* alpha_opt = nullptr;
  CLI::Option* strategy_opt = nullptr;
  CLI::Option* p_opt = nullptr;
  CLI::Option* max_tokens_opt = nullptr;

  void attach(CLI::App& app) {
    app.add_option("--provider", provider, "toy-ngram:FILE | toy-copy:FILE | cmd:COMMAND | http:URL")
        ->required();
    alpha_opt = app.add_option("--alpha", alpha, "Context adjustment level (>= 0)");
    strategy_opt = app.add_option("--strategy", strategy, "greedy | top_p")
                       ->check(CLI::IsMember({"greedy", "top_p", "top-p"}));
    p_opt = app.add_option("--p", p, "Nucleus mass for top_p");
    max_tokens_opt = app.add_option("--max-tokens", max_tokens, "Generation length limit");
    app.add_option("--seed", seed, "Sampling seed");
    app.add_option("--template", prompt_template, "Prompt template with {context} and {query}");
    app.add_option("--format", format, "Standard output format")->check(CLI::IsMember({"text", "json"}));
    app.add_option("--out", out, "Output artifact path");
  }

  // Fills in the preset values for options the user did not give.
  void apply_preset(const std::string& preset) {
    const bool conflict = preset == "conflict";
    if (alpha_opt->count() == 0) alpha = conflict ? 1.0 : 0.5;
    if (strategy_opt->count() == 0) strategy = conflict ? "greedy" : "top_p";
    if (p_opt->count() == 0) p = 0.9;
    if (max_tokens_opt->count() == 0) max_tokens = conflict ? 16 : 64;
  }

  GenerationConfig config() const {
    GenerationConfig c;
    c.alpha = alpha;
    c.strategy = parse_strategy(strategy);
    c.p = p;
    c.max_tokens = max_tokens;
    c.seed = seed;
    c.validate();
    return c;
  }
};

json config_json(const GenerationConfig& c) {
  return {{"alpha", c.alpha}, {"strategy", strategy_name(c.strategy)}, {"p", c.p},
          {"max_tokens", c.max_tokens}, {"seed", c.seed}};
}

std::vector<double> parse_alphas(const std::string& text) {
  std::vector<double> alphas;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t used = 0;
    double a = 0.0;
    try {
      a = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw Error(ErrorCode::kInvalidConfig, "bad alpha value '" + item + "'");
    }
    alphas.push_back(a);
  }
  if (alphas.empty()) throw Error(ErrorCode::kInvalidConfig, "--alphas is empty");
  return alphas;
}

std::string aggregates_text(const Report& r) {
  std::ostringstream os;
  os << "alpha=" << format_double(r.config.alpha) << " em=" << format_double(r.mean_em)
     << " rouge_l=" << format_double(r.mean_rouge_l) << " n=" << r.per_example.size()
     << " failures=" << r.failures << "\n";
  return os.str();
}

int cmd_generate(DecodeFlags& f, const std::string& context, const std::string& context_file,
                 const std::string& query, std::ostream& out, std::ostream& err) {
  const GenerationConfig config = f.config();
  std::string ctx = context;
  if (!context_file.empty()) ctx = read_text(context_file);
  auto provider = open_provider(ProviderSpec::parse(f.provider), wire_timeout_from_env());
  const std::string tmpl = unescape_template(f.prompt_template);
  const Prompt prompt = build_prompt(*provider, tmpl, ctx, query);
  err << "generating with " << provider->name() << " (alpha=" << format_double(config.alpha)
      << ", " << strategy_name(config.strategy) << ")\n";
  const GenerationResult result = generate(*provider, prompt, config);

  json transcript;
  transcript["format"] = "cad-transcript-v1";
  transcript["created_at"] = utc_timestamp();
  transcript["provider"] = provider->name();
  transcript["config"] = config_json(config);
  transcript["template"] = tmpl;
  transcript["context"] = ctx;
  transcript["query"] = query;
  transcript["tokens"] = result.tokens;
  transcript["text"] = result.text;
  transcript["stop_reason"] = stop_reason_name(result.stop_reason);
  json steps = json::array();
  for (const auto& s : result.steps) {
    steps.push_back({{"context_logits", s.context_digest}, {"bare_logits", s.bare_digest},
                     {"token", s.token}, {"probability", s.probability}});
  }
  transcript["steps"] = steps;
  if (!f.out.empty()) save_text(f.out, transcript.dump(2) + "\n");
  if (f.format == "json") {
    out << transcript.dump(2) << "\n";
  } else {
    out << result.text << "\n";
  }
  return kExitOk;
}

EvalOptions eval_options(const std::string& tmpl, int jobs, std::ostream& err) {
  EvalOptions options;
  options.prompt_template = unescape_template(tmpl);
  options.jobs = jobs;
  options.progress = [&err](std::size_t done, std::size_t total) {
    if (done == total || done % 10 == 0) err << "  " << done << "/" << total << " examples\n";
  };
  return options;
}

int cmd_eval(DecodeFlags& f, const std::string& dataset, int jobs, std::ostream& out,
             std::ostream& err) {
  const GenerationConfig config = f.config();
  const auto examples = read_dataset(dataset);
  auto provider = open_provider(ProviderSpec::parse(f.provider), wire_timeout_from_env());
  err << "evaluating " << examples.size() << " examples with " << provider->name() << "\n";
  const Report report = run_eval(examples, *provider, config, eval_options(f.prompt_template, jobs, err));
  const std::string doc = report_to_json(report, utc_timestamp());
  if (!f.out.empty()) save_text(f.out, doc);
  if (f.format == "json") {
    out << doc;
  } else {
    out << aggregates_text(report);
  }
  return kExitOk;
}

int cmd_sweep(DecodeFlags& f, const std::string& dataset, const std::string& alphas_text,
              const std::string& csv_path, int jobs, std::ostream& out, std::ostream& err) {
  const GenerationConfig config = f.config();
  const auto alphas = parse_alphas(alphas_text);
  const auto examples = read_dataset(dataset);
  auto provider = open_provider(ProviderSpec::parse(f.provider), wire_timeout_from_env());
  EvalOptions options = eval_options(f.prompt_template, jobs, err);
  SweepReport result;
  for (double a : alphas) {
    err << "alpha=" << format_double(a) << "\n";
    auto one = sweep(examples, *provider, {a}, config, options);
    result.entries.push_back(std::move(one.entries.front()));
  }
  const std::string csv = sweep_to_csv(result);
  if (!f.out.empty()) {
    save_text(f.out, sweep_to_json(result, utc_timestamp()));
    std::filesystem::path csv_file = csv_path.empty()
                                         ? std::filesystem::path(f.out).replace_extension(".csv")
                                         : std::filesystem::path(csv_path);
    save_text(csv_file, csv);
  } else if (!csv_path.empty()) {
    save_text(csv_path, csv);
  }
  if (f.format == "json") {
    out << sweep_to_json(result, utc_timestamp());
  } else {
    out << csv;
  }
  return kExitOk;
}

int cmd_train(const std::string& corpus_path, int order, double k, const std::string& out_path,
              std::ostream& err) {
  std::istringstream corpus_text(read_text(corpus_path));
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> words;
  for (std::string line; std::getline(corpus_text, line);) {
    std::istringstream ws(line);
    std::vector<std::string> tokens;
    for (std::string w; ws >> w;) tokens.push_back(w);
    if (tokens.empty()) continue;
    words.insert(words.end(), tokens.begin(), tokens.end());
    lines.push_back(std::move(tokens));
  }
  if (lines.empty()) throw Error(ErrorCode::kInvalidConfig, "corpus has no text");
  std::vector<std::string> sorted = words;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  Vocabulary vocab = Vocabulary::with_specials(sorted);
  std::vector<TokenSeq> corpus;
  for (const auto& line : lines) {
    TokenSeq seq;
    for (const auto& w : line) seq.push_back(*vocab.find(w));
    seq.push_back(vocab.eos());
    corpus.push_back(std::move(seq));
  }
  const NGramModel model = NGramModel::train(corpus, order, k, std::move(vocab));
  save_text(out_path, model.serialize());
  err << "trained order-" << order << " model on " << corpus.size() << " lines, vocabulary "
      << model.vocab_size() << "\n";
  return kExitOk;
}

}  // namespace

ProviderSpec ProviderSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || colon + 1 >= text.size()) {
    throw Error(ErrorCode::kInvalidConfig, "provider must look like scheme:locator, got '" +
                                               std::string(text) + "'");
  }
  ProviderSpec spec{std::string(text.substr(0, colon)), std::string(text.substr(colon + 1))};
  if (spec.scheme != "toy-ngram" && spec.scheme != "toy-copy" && spec.scheme != "cmd" &&
      spec.scheme != "http") {
    throw Error(ErrorCode::kInvalidConfig, "unknown provider scheme '" + spec.scheme + "'");
  }
  return spec;
}

std::unique_ptr<LogitProvider> open_provider(const ProviderSpec& spec,
                                             std::chrono::milliseconds wire_timeout) {
  if (spec.scheme == "toy-ngram") {
    return std::make_unique<NGramModel>(NGramModel::deserialize(read_text(spec.locator)));
  }
  if (spec.scheme == "toy-copy") {
    return std::make_unique<CopyPriorModel>(CopyPriorModel::deserialize(read_text(spec.locator)));
  }
  return std::make_unique<RemoteProvider>(make_transport(spec.scheme, spec.locator, wire_timeout));
}

std::chrono::milliseconds wire_timeout_from_env() {
  if (const char* env = std::getenv("CAD_WIRE_TIMEOUT_MS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return std::chrono::milliseconds(v);
  }
  return std::chrono::milliseconds(kDefaultWireTimeoutMs);
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-aware decoding: generation, evaluation and alpha sweeps", "cad"};
  app.require_subcommand(1);

  DecodeFlags gen_flags;
  std::string context, context_file, query;
  auto* gen = app.add_subcommand("generate", "Decode one prompt");
  gen_flags.attach(*gen);
  gen->add_option("--context", context, "Context text");
  gen->add_option("--context-file", context_file, "Read the context from a file");
  gen->add_option("--query", query, "Query text")->required();

  DecodeFlags eval_flags;
  std::string eval_dataset, eval_preset = "conflict";
  int eval_jobs = 1;
  auto* ev = app.add_subcommand("eval", "Score a dataset (EM and ROUGE-L)");
  eval_flags.attach(*ev);
  ev->add_option("--dataset", eval_dataset, "JSONL dataset")->required();
  ev->add_option("--preset", eval_preset, "conflict (alpha 1, greedy) | summarization (alpha 0.5, top_p 0.9)")
      ->check(CLI::IsMember({"conflict", "summarization"}));
  ev->add_option("--jobs", eval_jobs, "Examples decoded in parallel")->check(CLI::PositiveNumber);

  DecodeFlags sweep_flags;
  std::string sweep_dataset, sweep_preset = "conflict", alphas = "0,0.25,0.5,1,2", csv_path;
  int sweep_jobs = 1;
  auto* sw = app.add_subcommand("sweep", "Evaluate a dataset over several alpha values");
  sweep_flags.attach(*sw);
  sw->add_option("--dataset", sweep_dataset, "JSONL dataset")->required();
  sw->add_option("--alphas", alphas, "Comma-separated alpha values");
  sw->add_option("--preset", sweep_preset, "conflict | summarization")
      ->check(CLI::IsMember({"conflict", "summarization"}));
  sw->add_option("--csv", csv_path, "CSV output path");
  sw->add_option("--jobs", sweep_jobs, "Examples decoded in parallel")->check(CLI::PositiveNumber);

  std::string corpus, model_out;
  int order = 3;
  double k = 1.0;
  auto* train = app.add_subcommand("train-ngram", "Train a toy n-gram model from a text corpus");
  train->add_option("--corpus", corpus, "Text file, one sequence per line")->required();
  train->add_option("--order", order, "n-gram order");
  train->add_option("--k", k, "Add-k smoothing constant");
  train->add_option("--out", model_out, "Model file to write")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      if (!context.empty() && !context_file.empty()) {
        throw Error(ErrorCode::kInvalidConfig, "--context and --context-file are exclusive");
      }
      return cmd_generate(gen_flags, context, context_file, query, out, err);
    }
    if (*ev) {
      eval_flags.apply_preset(eval_preset);
      return cmd_eval(eval_flags, eval_dataset, eval_jobs, out, err);
    }
    if (*sw) {
      sweep_flags.apply_preset(sweep_preset);
      return cmd_sweep(sweep_flags, sweep_dataset, alphas, csv_path, sweep_jobs, out, err);
    }
    if (*train) return cmd_train(corpus, order, k, model_out, err);
  } catch (const Error& e) {
    err << "cad: " << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidConfig ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "cad: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace cad::cli
