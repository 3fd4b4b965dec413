#include "ceilkit/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ceilkit/checkpoint.hpp"
#include "ceilkit/config.hpp"
#include "ceilkit/error.hpp"
#include "ceilkit/eval.hpp"
#include "ceilkit/pipeline.hpp"
#include "ceilkit/report.hpp"

namespace ceilkit {

namespace fs = std::filesystem;

namespace {

struct RunOptions {
  std::string config;
  std::string corpus;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  std::string resume;
};

struct EvalOptions {
  std::string pred;
  std::string gold;
};

struct SynthOptions {
  SynthParams params;
  std::string out;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config, "Flat key=value config file");
  cmd->add_option("--corpus", o.corpus, "JSONL corpus (overrides the config's corpus key)");
  cmd->add_option("--seed", o.seed, "Run seed (overrides the config)");
  cmd->add_option("--out-dir", o.out_dir, "Directory for output files")->capture_default_str();
  cmd->add_option("--set", o.overrides, "Config override key=value (repeatable)");
}

CeilConfig resolve_config(const RunOptions& o, const CeilConfig* base) {
  CeilConfig config = base ? *base : (o.config.empty() ? CeilConfig{} : CeilConfig::load(o.config));
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got \"" + kv + "\"");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) config.seed = *o.seed;
  return config;
}

Corpus resolve_corpus(const RunOptions& o, const CeilConfig& config, std::ostream& err) {
  const std::string path = o.corpus.empty() ? config.corpus : o.corpus;
  if (path.empty()) throw ConfigError("no corpus given (use --corpus or the corpus config key)");
  std::vector<std::string> warnings;
  Corpus corpus = load_jsonl(path, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  if (corpus.empty()) throw DataError("corpus " + path + " holds no usable documents");
  return corpus;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("failed writing " + path.string());
}

template <typename Writer>
void write_with(const fs::path& path, Writer&& writer) {
  std::ostringstream os;
  writer(os);
  write_file(path, os.str());
}

void print_warnings(const CeilConfig& config, std::ostream& err) {
  std::vector<std::string> warnings;
  config.validate(&warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

int run_cluster(const RunOptions& o, std::ostream& err) {
  const CeilConfig config = resolve_config(o, nullptr);
  print_warnings(config, err);
  const Corpus corpus = resolve_corpus(o, config, err);
  const RunInputs inputs = load_run_inputs(config);
  const ClusterResult result = cluster_once(corpus, config, inputs);

  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  write_with(dir / "assignments.tsv", [&](std::ostream& os) { write_assignments(os, result.assignments); });
  write_with(dir / "history.jsonl", [&](std::ostream& os) { write_history(os, result.history, 0); });
  if (corpus.has_gold_labels()) {
    const Metrics m = evaluate(result.assignments, corpus.gold_labels());
    write_file(dir / "metrics.json", to_json(m).dump(2) + "\n");
  }
  return kExitOk;
}

int run_ceil_command(const RunOptions& o, std::ostream& err) {
  std::optional<Checkpoint> checkpoint;
  if (!o.resume.empty()) {
    if (!o.config.empty()) throw ConfigError("--resume takes its config from the checkpoint; drop --config");
    checkpoint = load_checkpoint(o.resume);
  }
  const CeilConfig config = resolve_config(o, checkpoint ? &checkpoint->config : nullptr);
  print_warnings(config, err);
  const Corpus corpus = resolve_corpus(o, config, err);
  const RunInputs inputs = load_run_inputs(config);

  const fs::path dir = o.out_dir;
  fs::create_directories(dir);

  RunHooks hooks;
  if (checkpoint) hooks.resume = std::move(checkpoint->state);
  // Persist progress after every iteration so a failed stage leaves the
  // completed records behind.
  hooks.on_iteration = [&](const CeilState& state) {
    save_checkpoint(Checkpoint{config, state}, dir / "checkpoint.bin");
    write_with(dir / "iterations.jsonl", [&](std::ostream& os) { write_iterations(os, state.records); });
  };
  const CeilRun run = run_ceil(corpus, config, inputs, hooks);

  write_with(dir / "assignments.tsv", [&](std::ostream& os) { write_assignments(os, run.result.assignments); });
  write_with(dir / "history.jsonl", [&](std::ostream& os) { write_history(os, run.records); });
  write_with(dir / "iterations.jsonl", [&](std::ostream& os) { write_iterations(os, run.records); });
  if (!run.records.empty()) write_file(dir / "keywords.json", keywords_json(run.records.back()).dump(2) + "\n");
  if (!run.metrics.empty()) write_file(dir / "metrics.json", metrics_json(run).dump(2) + "\n");
  return kExitOk;
}

int run_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  std::ifstream pred_in(o.pred);
  if (!pred_in) throw DataError("cannot open predictions " + o.pred);
  const std::vector<int> pred = read_assignments(pred_in);
  std::vector<std::string> warnings;
  const Corpus gold_corpus = load_jsonl(o.gold, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  const std::vector<int> gold = gold_corpus.gold_labels();
  out << to_json(evaluate(pred, gold)).dump(2) << '\n';
  return kExitOk;
}

int run_synth(const SynthOptions& o, std::ostream& out) {
  const Corpus corpus = synth_corpus(o.params);
  if (o.out.empty()) {
    write_jsonl(corpus, out);
  } else {
    write_with(o.out, [&](std::ostream& os) { write_jsonl(corpus, os); });
  }
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ceilkit: iterative short-text clustering with pseudo-label classification"};
  app.name("ceilkit");
  app.require_subcommand(1);

  RunOptions cluster_opts;
  auto* cluster = app.add_subcommand("cluster", "Single-shot clustering with one backend");
  add_run_options(cluster, cluster_opts);

  RunOptions ceil_opts;
  auto* ceil = app.add_subcommand("ceil", "Full iterative clustering/classification loop");
  add_run_options(ceil, ceil_opts);
  ceil->add_option("--resume", ceil_opts.resume, "Continue from a checkpoint.bin");

  EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "Score an assignments TSV against gold labels");
  eval->add_option("--pred", eval_opts.pred, "assignments.tsv")->required();
  eval->add_option("--gold", eval_opts.gold, "JSONL corpus with labels")->required();

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
  synth->add_option("--k", synth_opts.params.k, "Cluster count")->required();
  synth->add_option("--n", synth_opts.params.n_per_cluster, "Documents per cluster")->required();
  synth->add_option("--tokens-per-cluster", synth_opts.params.tokens_per_cluster)->capture_default_str();
  synth->add_option("--doc-len", synth_opts.params.doc_len)->capture_default_str();
  synth->add_option("--noise", synth_opts.params.noise)->capture_default_str();
  synth->add_option("--vocab-size", synth_opts.params.vocab_size, "0 = automatic")->capture_default_str();
  synth->add_option("--seed", synth_opts.params.seed)->capture_default_str();
  synth->add_option("--out", synth_opts.out, "Output file (standard output when omitted)");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("ceilkit");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*cluster) return run_cluster(cluster_opts, err);
    if (*ceil) return run_ceil_command(ceil_opts, err);
    if (*eval) return run_eval(eval_opts, out, err);
    if (*synth) return run_synth(synth_opts, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ceilkit::Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace ceilkit
