#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ceilkit/clustering.hpp"
#include "ceilkit/config.hpp"
#include "ceilkit/corpus.hpp"
#include "ceilkit/encoder.hpp"
#include "ceilkit/eval.hpp"
#include "ceilkit/refine.hpp"
#include "ceilkit/supervise.hpp"

namespace ceilkit {

// Summary of one completed clustering/classification round. Holds nothing
// derived from gold labels.
struct IterationRecord {
  int iteration = 0;
  EncoderMode mode = EncoderMode::MeanPool;
  std::size_t clusters_raw = 0;         // nonempty clusters from the backend
  std::size_t clusters_filtered = 0;
  std::size_t clusters_aggregated = 0;
  std::size_t documents_supervised = 0;  // documents kept as pseudo-labelled data
  std::vector<int> assignments;          // backend output for every document
  std::vector<EpochLoss> loss_history;   // empty for the gmm/kmeans backends
  // Verbalizer output per aggregated cluster: (token, tf-idf score), best first.
  std::vector<std::vector<std::pair<std::string, double>>> keywords;

  bool operator==(const IterationRecord&) const;
};

// Everything needed to continue a run after a completed iteration.
struct CeilState {
  int next_iteration = 0;
  EncoderParams encoder;
  ClusterResult last;
  std::vector<IterationRecord> records;
};

// Optional inputs resolved from the config's file paths.
struct RunInputs {
  std::shared_ptr<const PrecomputedBase> base;
  std::vector<std::string> stopwords;
};

RunInputs load_run_inputs(const CeilConfig& config);

struct RunHooks {
  // Continue from a checkpointed state instead of a fresh encoder.
  std::optional<CeilState> resume;
  // Called after every completed iteration.
  std::function<void(const CeilState&)> on_iteration;
};

struct CeilRun {
  ClusterResult result;  // clustering output of the last iteration
  std::vector<IterationRecord> records;
  // Per-iteration metrics; empty unless every document has a gold label.
  std::vector<Metrics> metrics;
  Vocabulary vocabulary;
  EncoderParams encoder;
};

/// Prepared corpus, vocabulary and template for a config.
struct Workspace {
  Corpus corpus;
  Vocabulary vocabulary;
  BoundTemplate tmpl;
  std::vector<TokenId> excluded_keywords;
};

Workspace prepare_workspace(const Corpus& corpus, const CeilConfig& config, const RunInputs& inputs = {});
EncoderParams initial_encoder(const Workspace& ws, const CeilConfig& config, const RunInputs& inputs = {});

/// One backend pass in the encoder's current mode. The cdcc backend trains
/// the encoder; gmm and kmeans only read it. `reps` receives the
/// representations the clusters were formed on.
ClusterResult run_backend(const Workspace& ws, EncoderParams& encoder, const CeilConfig& config,
                          std::uint64_t seed, Matrix* reps = nullptr);

/// Single-shot clustering with a fresh mean-pool encoder.
ClusterResult cluster_once(const Corpus& corpus, const CeilConfig& config, const RunInputs& inputs = {});

/// Alternating clustering and pseudo-label classification. Iteration 0 uses
/// the mean-pool encoder, later iterations the mask-slot encoder.
CeilRun run_ceil(const Corpus& corpus, const CeilConfig& config, const RunInputs& inputs = {},
                 const RunHooks& hooks = {});

}  // namespace ceilkit
