#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "ceilkit/config.hpp"
#include "ceilkit/corpus.hpp"
#include "ceilkit/error.hpp"
#include "ceilkit/eval.hpp"
#include "ceilkit/pipeline.hpp"
#include "ceilkit/report.hpp"

namespace py = pybind11;
using namespace ceilkit;

namespace {

Corpus to_corpus(const std::vector<std::string>& texts, const std::optional<std::vector<std::string>>& labels) {
  std::vector<std::optional<std::string>> l;
  if (labels) l.assign(labels->begin(), labels->end());
  return make_corpus(texts, l);
}

CeilConfig to_config(const py::dict& settings) {
  CeilConfig config;
  for (const auto& [key, value] : settings) {
    config.set(py::str(key).cast<std::string>(), py::str(value).cast<std::string>());
  }
  return config;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["acc"] = m.acc;
  d["nmi"] = m.nmi;
  d["n"] = m.n;
  d["k_pred"] = m.k_pred;
  d["k_gold"] = m.k_gold;
  return d;
}

py::object as_python(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_ceilkit, m) {
  m.doc() = "Short-text clustering with iterative pseudo-label classification";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());

  m.def("tokenize", [](const std::string& text) { return tokenize(text); }, py::arg("text"));

  m.def(
      "synth",
      [](int k, int n, int tokens_per_cluster, int doc_len, double noise, int vocab_size, std::uint64_t seed) {
        SynthParams p;
        p.k = k;
        p.n_per_cluster = n;
        p.tokens_per_cluster = tokens_per_cluster;
        p.doc_len = doc_len;
        p.noise = noise;
        p.vocab_size = vocab_size;
        p.seed = seed;
        const Corpus c = synth_corpus(p);
        std::vector<std::string> texts, labels;
        for (const auto& d : c.documents) {
          texts.push_back(d.text);
          labels.push_back(c.label_names[static_cast<std::size_t>(*d.gold_label)]);
        }
        return py::make_tuple(texts, labels);
      },
      py::arg("k"), py::arg("n"), py::arg("tokens_per_cluster") = 20, py::arg("doc_len") = 8,
      py::arg("noise") = 0.0, py::arg("vocab_size") = 0, py::arg("seed") = 0,
      "Synthetic topic corpus; returns (texts, labels).");

  m.def("config_keys", [] { return CeilConfig::keys(); });

  m.def(
      "cluster",
      [](const std::vector<std::string>& texts, const py::dict& config) {
        const CeilConfig c = to_config(config);
        py::gil_scoped_release release;
        return cluster_once(to_corpus(texts, std::nullopt), c).assignments;
      },
      py::arg("texts"), py::arg("config"), "Single backend pass; returns one cluster index per text.");

  m.def(
      "run_ceil",
      [](const std::vector<std::string>& texts, const py::dict& config,
         const std::optional<std::vector<std::string>>& labels) {
        const CeilConfig c = to_config(config);
        const Corpus corpus = to_corpus(texts, labels);
        CeilRun run;
        {
          py::gil_scoped_release release;
          run = run_ceil(corpus, c);
        }
        py::dict out;
        out["assignments"] = run.result.assignments;
        py::list records;
        for (const auto& r : run.records) records.append(as_python(to_json(r)));
        out["records"] = records;
        py::list metrics;
        for (const auto& mt : run.metrics) metrics.append(metrics_dict(mt));
        out["metrics"] = metrics;
        return out;
      },
      py::arg("texts"), py::arg("config"), py::arg("labels") = std::nullopt,
      "Full clustering/classification loop. Labels, when given, are used for metrics only.");

  m.def(
      "evaluate", [](const std::vector<int>& pred, const std::vector<int>& gold) { return metrics_dict(evaluate(pred, gold)); },
      py::arg("pred"), py::arg("gold"));
  m.def("accuracy", [](const std::vector<int>& pred, const std::vector<int>& gold) { return accuracy(pred, gold); },
        py::arg("pred"), py::arg("gold"));
  m.def("nmi", [](const std::vector<int>& pred, const std::vector<int>& gold) { return nmi(pred, gold); },
        py::arg("pred"), py::arg("gold"));
}
