#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cad/cad_engine.h"
#include "cad/cli.h"
#include "cad/eval.h"
#include "cad/fixtures.h"
#include "cad/metrics.h"
#include "cad/sampling.h"
#include "cad/toy_models.h"
#include "cad/wire.h"

namespace py = pybind11;
using namespace cad;

namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

LogitVector lv(const std::vector<double>& v) { return LogitVector(v); }

py::dict step_dict(const StepRecord& s) {
  py::dict d;
  d["context_digest"] = s.context_digest;
  d["bare_digest"] = s.bare_digest;
  d["token"] = s.token;
  d["probability"] = s.probability;
  return d;
}

py::dict result_dict(const GenerationResult& r) {
  py::dict d;
  d["tokens"] = r.tokens;
  d["text"] = r.text;
  py::list steps;
  for (const auto& s : r.steps) steps.append(step_dict(s));
  d["steps"] = steps;
  d["stop_reason"] = std::string(stop_reason_name(r.stop_reason));
  return d;
}

}  // namespace

PYBIND11_MODULE(_pycad, m) {
  m.doc() = "Context-aware decoding engine";

  static py::exception<Error> cad_error(m, "CadError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(cad_error)(e.what());
      err.attr("code") = std::string(error_code_name(e.code()));
      err.attr("detail") = e.detail();
      PyErr_SetObject(cad_error.ptr(), err.ptr());
    }
  });

  // --- core / engine ---------------------------------------------------------
  m.def("softmax", [](const std::vector<double>& l) { return to_vec(softmax(lv(l)).values()); }, py::arg("logits"));
  m.def("argmax", [](const std::vector<double>& v) { return argmax(lv(v)); }, py::arg("values"));
  m.def("cad_combine",
        [](const std::vector<double>& c, const std::vector<double>& b, double alpha) {
          return to_vec(cad_combine(lv(c), lv(b), alpha).values());
        },
        py::arg("l_ctx"), py::arg("l_bare"), py::arg("alpha"));
  m.def("cad_distribution",
        [](const std::vector<double>& c, const std::vector<double>& b, double alpha) {
          return to_vec(cad_distribution(lv(c), lv(b), alpha).values());
        },
        py::arg("l_ctx"), py::arg("l_bare"), py::arg("alpha"));

  // --- sampling --------------------------------------------------------------
  py::class_<RandomSource>(m, "RandomSource")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next", &RandomSource::next)
      .def("uniform", &RandomSource::uniform);
  m.def("top_p_nucleus",
        [](const std::vector<double>& probs, double p) {
          const auto n = top_p_nucleus(ProbVector(probs), p);
          return py::make_tuple(n.members, to_vec(n.renormalized.values()));
        },
        py::arg("probs"), py::arg("p"));
  m.def("sample_at", [](const std::vector<double>& probs, double u) { return sample_at(ProbVector(probs), u); },
        py::arg("probs"), py::arg("u"));
  m.def("select",
        [](const std::vector<double>& probs, const std::string& strategy, double p, RandomSource& rng) {
          return select(ProbVector(probs), {parse_strategy(strategy), p}, rng);
        },
        py::arg("probs"), py::arg("strategy"), py::arg("p"), py::arg("rng"));

  // --- providers -------------------------------------------------------------
  py::class_<LogitProvider, std::shared_ptr<LogitProvider>>(m, "LogitProvider")
      .def_property_readonly("name", &LogitProvider::name)
      .def_property_readonly("vocab_size", &LogitProvider::vocab_size)
      .def_property_readonly("eos", &LogitProvider::eos)
      .def("logits",
           [](const LogitProvider& p, const TokenSeq& seq) {
             py::gil_scoped_release release;
             return to_vec(p.logits(seq).values());
           },
           py::arg("seq"))
      .def("tokenize", [](const LogitProvider& p, const std::string& t) { return p.tokenize(t); })
      .def("detokenize", [](const LogitProvider& p, const TokenSeq& ids) { return p.detokenize(ids); });

  py::class_<NGramModel, LogitProvider, std::shared_ptr<NGramModel>>(m, "NGramModel")
      .def_static(
          "train",
          [](const std::vector<std::string>& lines, int order, double k) {
            std::vector<std::string> words;
            for (const auto& line : lines) {
              std::istringstream in(line);
              for (std::string w; in >> w;) words.push_back(w);
            }
            std::sort(words.begin(), words.end());
            const auto vocab = Vocabulary::with_specials(words);
            std::vector<TokenSeq> corpus;
            for (const auto& line : lines) {
              auto seq = vocab.tokenize(line);
              seq.push_back(vocab.eos());
              corpus.push_back(std::move(seq));
            }
            return std::make_shared<NGramModel>(NGramModel::train(corpus, order, k, vocab));
          },
          py::arg("lines"), py::arg("order") = 3, py::arg("k") = 1.0)
      .def_property_readonly("order", &NGramModel::order)
      .def_property_readonly("k", &NGramModel::k)
      .def("distribution",
           [](const NGramModel& m, const TokenSeq& seq) { return to_vec(m.distribution(seq).values()); })
      .def("serialize", &NGramModel::serialize)
      .def_static("deserialize",
                  [](const std::string& s) { return std::make_shared<NGramModel>(NGramModel::deserialize(s)); });

  py::class_<CopyPriorModel, LogitProvider, std::shared_ptr<CopyPriorModel>>(m, "CopyPriorModel")
      .def_property_readonly("lambda_", &CopyPriorModel::lambda)
      .def("copyprior_logits",
           [](const CopyPriorModel& m, const TokenSeq& seq, const TokenSeq& span) {
             return to_vec(m.copyprior_logits(seq, span).values());
           },
           py::arg("seq"), py::arg("context_span"))
      .def("context_span", [](const CopyPriorModel& m, const TokenSeq& seq) { return m.context_span(seq); })
      .def("serialize", &CopyPriorModel::serialize)
      .def_static("deserialize", [](const std::string& s) {
        return std::make_shared<CopyPriorModel>(CopyPriorModel::deserialize(s));
      });

  py::class_<RemoteProvider, LogitProvider, std::shared_ptr<RemoteProvider>>(m, "RemoteProvider")
      .def("handshake", [](RemoteProvider& r) {
        py::gil_scoped_release release;
        r.handshake();
      })
      .def_property_readonly("usable", &RemoteProvider::usable)
      .def("remote_logits", [](const RemoteProvider& r, const std::vector<TokenSeq>& seqs) {
        std::vector<LogitVector> rows;
        {
          py::gil_scoped_release release;
          rows = r.remote_logits(seqs);
        }
        std::vector<std::vector<double>> out;
        for (const auto& row : rows) out.push_back(to_vec(row.values()));
        return out;
      });

  m.def("load_toy_model",
        [](const std::string& path) { return std::shared_ptr<LogitProvider>(load_toy_model(path)); },
        py::arg("path"));
  m.def("open_provider",
        [](const std::string& spec, int timeout_ms) -> std::shared_ptr<LogitProvider> {
          const auto parsed = cli::ProviderSpec::parse(spec);
          const auto timeout = timeout_ms > 0 ? std::chrono::milliseconds(timeout_ms) : cli::wire_timeout_from_env();
          py::gil_scoped_release release;
          return cli::open_provider(parsed, timeout);
        },
        py::arg("spec"), py::arg("timeout_ms") = 0);

  // --- generation --------------------------------------------------------------
  py::class_<GenerationConfig>(m, "GenerationConfig")
      .def(py::init([](double alpha, const std::string& strategy, double p, int max_tokens, std::uint64_t seed,
                       std::set<TokenId> stop_tokens) {
             GenerationConfig c;
             c.alpha = alpha;
             c.strategy = parse_strategy(strategy);
             c.p = p;
             c.max_tokens = max_tokens;
             c.seed = seed;
             c.stop_tokens = std::move(stop_tokens);
             c.validate();
             return c;
           }),
           py::arg("alpha") = 0.5, py::arg("strategy") = "top_p", py::arg("p") = 0.9, py::arg("max_tokens") = 64,
           py::arg("seed") = 0, py::arg("stop_tokens") = std::set<TokenId>{})
      .def_readwrite("alpha", &GenerationConfig::alpha)
      .def_property(
          "strategy", [](const GenerationConfig& c) { return std::string(strategy_name(c.strategy)); },
          [](GenerationConfig& c, const std::string& s) { c.strategy = parse_strategy(s); })
      .def_readwrite("p", &GenerationConfig::p)
      .def_readwrite("max_tokens", &GenerationConfig::max_tokens)
      .def_readwrite("seed", &GenerationConfig::seed)
      .def_readwrite("stop_tokens", &GenerationConfig::stop_tokens);

  m.attr("DEFAULT_TEMPLATE") = std::string(kDefaultTemplate);
  m.def("generate",
        [](const LogitProvider& provider, const std::string& context, const std::string& query,
           const GenerationConfig& config, const std::string& tmpl) {
          GenerationResult r;
          {
            py::gil_scoped_release release;
            r = generate(provider, build_prompt(provider, tmpl, context, query), config);
          }
          return result_dict(r);
        },
        py::arg("provider"), py::arg("context"), py::arg("query"), py::arg("config") = GenerationConfig{},
        py::arg("template") = std::string(kDefaultTemplate));

  // --- metrics / evaluation ----------------------------------------------------
  m.def("normalize_answer", &normalize_answer, py::arg("s"));
  m.def("exact_match", &exact_match, py::arg("prediction"), py::arg("answers"));
  m.def("rouge_l",
        [](const std::string& c, const std::string& r) {
          const auto s = rouge_l(c, r);
          return py::make_tuple(s.precision, s.recall, s.f1);
        },
        py::arg("candidate"), py::arg("reference"));

  py::class_<EvalExample>(m, "EvalExample")
      .def(py::init([](std::string id, std::string context, std::string query, std::vector<std::string> answers) {
             return EvalExample{std::move(id), std::move(context), std::move(query), std::move(answers)};
           }),
           py::arg("id"), py::arg("context"), py::arg("query"), py::arg("answers"))
      .def_readwrite("id", &EvalExample::id)
      .def_readwrite("context", &EvalExample::context)
      .def_readwrite("query", &EvalExample::query)
      .def_readwrite("answers", &EvalExample::answers)
      .def("__eq__", [](const EvalExample& a, const EvalExample& b) { return a == b; })
      .def("__repr__", [](const EvalExample& e) { return "EvalExample(id='" + e.id + "')"; });
  m.def("make_swap", &make_swap, py::arg("example"), py::arg("replacement"));
  m.def("read_dataset", [](const std::string& path) { return read_dataset(path); }, py::arg("path"));
  m.def("parse_dataset", &parse_dataset, py::arg("text"));
  m.def("format_dataset", &format_dataset, py::arg("examples"));

  // Reports cross into Python as their JSON documents.
  m.def("run_eval",
        [](const std::vector<EvalExample>& examples, const LogitProvider& provider, const GenerationConfig& config,
           const std::string& tmpl, int jobs) {
          EvalOptions opts;
          opts.prompt_template = tmpl;
          opts.jobs = jobs;
          py::gil_scoped_release release;
          return report_to_json(run_eval(examples, provider, config, opts), "");
        },
        py::arg("examples"), py::arg("provider"), py::arg("config") = GenerationConfig{},
        py::arg("template") = std::string(kDefaultTemplate), py::arg("jobs") = 1);
  m.def("sweep",
        [](const std::vector<EvalExample>& examples, const LogitProvider& provider, const std::vector<double>& alphas,
           const GenerationConfig& config, const std::string& tmpl) {
          EvalOptions opts;
          opts.prompt_template = tmpl;
          std::string doc, csv;
          {
            py::gil_scoped_release release;
            const auto s = sweep(examples, provider, alphas, config, opts);
            doc = sweep_to_json(s, "");
            csv = sweep_to_csv(s);
          }
          return py::make_tuple(doc, csv);
        },
        py::arg("examples"), py::arg("provider"), py::arg("alphas"), py::arg("config") = GenerationConfig{},
        py::arg("template") = std::string(kDefaultTemplate));

  m.def("conflict_fixture", [] {
    auto fx = fixtures::build_conflict_fixture();
    return py::make_tuple(std::make_shared<CopyPriorModel>(std::move(fx.model)), fx.original, fx.swapped);
  });

  m.def("run_command",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          int code;
          {
            py::gil_scoped_release release;
            code = cli::run_command(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
