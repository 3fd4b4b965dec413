#include "ceilkit/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include "ceilkit/error.hpp"

namespace ceilkit {

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::Cdcc: return "cdcc";
    case Backend::Gmm: return "gmm";
    case Backend::KMeans: return "kmeans";
  }
  return "cdcc";
}

std::string_view to_string(DenominatorRule rule) {
  return rule == DenominatorRule::PairCount ? "pair_count" : "verbatim";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value \"" + std::string(value) + "\" for key \"" + std::string(key) + "\"");
}

double parse_double(std::string_view key, std::string_view value) {
  const std::string s(value);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (used != s.size()) bad_value(key, value);
  return out;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& CeilConfig::keys() {
  static const std::vector<std::string> all = {
      "k",           "iterations",    "backend",       "template",          "lambda",
      "tau",         "alpha",         "theta",         "beta",              "delta",
      "n_keywords",  "denominator_rule", "lr",         "bs_cluster",        "cluster_epochs",
      "deletion_prob", "swap_count",  "classifier_lr", "bs_classifier",     "classifier_epochs", "mask_bias_lr_scale",
      "seed",        "embed_dim",     "rep_dim",       "min_df",            "corpus",
      "base_vectors", "stopwords",
  };
  return all;
}

void CeilConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  if (key == "k") {
    k = parse_int<int>(key, value);
  } else if (key == "iterations") {
    iterations = parse_int<int>(key, value);
  } else if (key == "backend") {
    if (value == "cdcc") backend = Backend::Cdcc;
    else if (value == "gmm") backend = Backend::Gmm;
    else if (value == "kmeans") backend = Backend::KMeans;
    else bad_value(key, value);
  } else if (key == "template") {
    prompt = PromptTemplate::parse(value);
  } else if (key == "lambda") {
    train.weights.lambda = parse_double(key, value);
  } else if (key == "tau") {
    train.weights.tau = parse_double(key, value);
  } else if (key == "alpha") {
    train.weights.alpha = parse_double(key, value);
  } else if (key == "theta") {
    train.weights.theta = parse_double(key, value);
  } else if (key == "beta") {
    beta = parse_double(key, value);
  } else if (key == "delta") {
    delta = parse_double(key, value);
  } else if (key == "n_keywords") {
    n_keywords = parse_int<int>(key, value);
  } else if (key == "denominator_rule") {
    if (value == "pair_count") train.denominator_rule = DenominatorRule::PairCount;
    else if (value == "verbatim") train.denominator_rule = DenominatorRule::Verbatim;
    else bad_value(key, value);
  } else if (key == "lr") {
    train.learning_rate = parse_double(key, value);
  } else if (key == "bs_cluster") {
    train.batch_size = parse_int<int>(key, value);
  } else if (key == "cluster_epochs") {
    train.epochs = parse_int<int>(key, value);
  } else if (key == "deletion_prob") {
    train.augment.deletion_prob = parse_double(key, value);
  } else if (key == "swap_count") {
    train.augment.swap_count = parse_int<int>(key, value);
  } else if (key == "classifier_lr") {
    classifier.learning_rate = parse_double(key, value);
  } else if (key == "bs_classifier") {
    classifier.batch_size = parse_int<int>(key, value);
  } else if (key == "classifier_epochs") {
    classifier.epochs = parse_int<int>(key, value);
  } else if (key == "mask_bias_lr_scale") {
    classifier.bias_lr_scale = parse_double(key, value);
    train.bias_lr_scale = classifier.bias_lr_scale;
  } else if (key == "seed") {
    seed = parse_int<std::uint64_t>(key, value);
  } else if (key == "embed_dim") {
    embed_dim = parse_int<int>(key, value);
  } else if (key == "rep_dim") {
    rep_dim = parse_int<int>(key, value);
  } else if (key == "min_df") {
    min_df = parse_int<int>(key, value);
  } else if (key == "corpus") {
    corpus = std::string(value);
  } else if (key == "base_vectors") {
    base_vectors = std::string(value);
  } else if (key == "stopwords") {
    stopwords = std::string(value);
  } else {
    throw ConfigError("unknown config key \"" + std::string(key) + "\"");
  }
}

std::string CeilConfig::get(std::string_view key) const {
  if (key == "k") return std::to_string(k);
  if (key == "iterations") return std::to_string(iterations);
  if (key == "backend") return std::string(to_string(backend));
  if (key == "template") return prompt.str();
  if (key == "lambda") return format_double(train.weights.lambda);
  if (key == "tau") return format_double(train.weights.tau);
  if (key == "alpha") return format_double(train.weights.alpha);
  if (key == "theta") return format_double(train.weights.theta);
  if (key == "beta") return format_double(beta);
  if (key == "delta") return format_double(delta);
  if (key == "n_keywords") return std::to_string(n_keywords);
  if (key == "denominator_rule") return std::string(to_string(train.denominator_rule));
  if (key == "lr") return format_double(train.learning_rate);
  if (key == "bs_cluster") return std::to_string(train.batch_size);
  if (key == "cluster_epochs") return std::to_string(train.epochs);
  if (key == "deletion_prob") return format_double(train.augment.deletion_prob);
  if (key == "swap_count") return std::to_string(train.augment.swap_count);
  if (key == "classifier_lr") return format_double(classifier.learning_rate);
  if (key == "bs_classifier") return std::to_string(classifier.batch_size);
  if (key == "classifier_epochs") return std::to_string(classifier.epochs);
  if (key == "mask_bias_lr_scale") return format_double(classifier.bias_lr_scale);
  if (key == "seed") return std::to_string(seed);
  if (key == "embed_dim") return std::to_string(embed_dim);
  if (key == "rep_dim") return std::to_string(rep_dim);
  if (key == "min_df") return std::to_string(min_df);
  if (key == "corpus") return corpus;
  if (key == "base_vectors") return base_vectors;
  if (key == "stopwords") return stopwords;
  throw ConfigError("unknown config key \"" + std::string(key) + "\"");
}

void CeilConfig::validate(std::vector<std::string>* warnings) const {
  if (k < 1) throw ConfigError("k must be set to a cluster count >= 1");
  if (backend == Backend::Cdcc && k < 2) throw ConfigError("the cdcc backend needs k >= 2");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!(beta >= -1.0 && beta <= 1.0)) throw ConfigError("beta must lie in [-1, 1]");
  if (!(delta >= -1.0 && delta <= 1.0)) throw ConfigError("delta must lie in [-1, 1]");
  if (n_keywords < 1) throw ConfigError("n_keywords must be >= 1");
  if (embed_dim < 1 || rep_dim < 1) throw ConfigError("embed_dim and rep_dim must be >= 1");
  if (min_df < 1) throw ConfigError("min_df must be >= 1");
  train.validate();
  classifier.validate();
  if (warnings) {
    if (beta < 0.6 || beta > 1.0) warnings->push_back("beta outside the usual search range [0.6, 1.0]");
    if (delta < 0.95 || delta > 1.0) warnings->push_back("delta outside the usual search range [0.95, 1.0]");
  }
}

CeilConfig CeilConfig::parse(std::istream& in) {
  CeilConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    config.set(trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  return config;
}

CeilConfig CeilConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in);
}

std::string CeilConfig::to_text() const {
  std::ostringstream os;
  for (const auto& key : keys()) os << key << '=' << get(key) << '\n';
  return os.str();
}

}  // namespace ceilkit
