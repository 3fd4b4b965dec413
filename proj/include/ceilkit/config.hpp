#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ceilkit/clustering.hpp"
#include "ceilkit/encoder.hpp"
#include "ceilkit/supervise.hpp"

namespace ceilkit {

enum class Backend { Cdcc, Gmm, KMeans };

std::string_view to_string(Backend backend);
std::string_view to_string(DenominatorRule rule);

// Every knob of a run. Read from flat "key = value" files; see
// CeilConfig::keys() for the full list.
struct CeilConfig {
  int k = 0;
  int iterations = 5;
  Backend backend = Backend::Cdcc;
  PromptTemplate prompt = PromptTemplate::parse("[MASK] [X] .");
  double beta = 0.6;   // filter edge threshold
  double delta = 1.0;  // aggregation threshold
  int n_keywords = 10;
  TrainConfig train;             // CDCC optimizer, loss weights, augmentation
  ClassifierConfig classifier;
  std::uint64_t seed = 0;
  int embed_dim = 64;
  int rep_dim = 64;
  int min_df = 1;
  std::string corpus;        // JSONL path, optional when the corpus is given directly
  std::string base_vectors;  // precomputed vectors file, optional
  std::string stopwords;     // one word per line, optional

  /// Throws ConfigError on invalid values; appends a warning for thresholds
  /// outside the usual search ranges (beta in [0.6, 1], delta in [0.95, 1]).
  void validate(std::vector<std::string>* warnings = nullptr) const;

  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static const std::vector<std::string>& keys();

  static CeilConfig parse(std::istream& in);
  static CeilConfig load(const std::filesystem::path& path);
  /// One "key=value" line per key, in keys() order; parse() inverts it exactly.
  std::string to_text() const;

  bool operator==(const CeilConfig& other) const { return to_text() == other.to_text(); }
};

}  // namespace ceilkit
