#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ceilkit/types.hpp"

namespace ceilkit {

enum class ClusterStage { Raw, Filtered, Aggregated };

// Hard clusters as sorted document-id lists.
struct ClusterSet {
  std::vector<std::vector<int>> clusters;
  ClusterStage stage = ClusterStage::Raw;

  /// One (possibly empty) cluster per index in [0, k).
  static ClusterSet from_assignments(std::span<const int> assignments, int k);
  std::size_t nonempty_count() const;
  std::size_t document_count() const;
};

// Neighbourhood graph of one cluster and the arrows of the two-hop search
// rooted at its best-connected member. Node values are document ids.
struct FilterGraph {
  std::vector<int> nodes;
  std::vector<std::vector<int>> neighbours;  // parallel to nodes, as node indices
  std::vector<std::pair<int, int>> arrows;   // (from, to) document ids, multiset
  int center = -1;
  std::vector<int> candidates;               // sorted document ids
};

/// Undirected edges join members whose cosine similarity is >= beta. Ties
/// for the center go to the lowest document id.
FilterGraph build_filter_graph(std::span<const int> doc_ids, const Matrix& member_reps, double beta);

/// Keeps the candidates whose in-degree exceeds the modal in-degree (mode
/// ties resolve to the smaller value); falls back to the center when none
/// qualify. Clusters of at most three members pass through unchanged.
std::vector<int> filter_cluster(std::span<const int> doc_ids, const Matrix& member_reps, double beta);

/// `reps` holds one row per corpus document.
ClusterSet filter_all(const ClusterSet& raw, const Matrix& reps, double beta);

/// Greedy merging: while the most similar pair of cluster means has cosine
/// similarity above delta, replace the pair with its union.
ClusterSet aggregate(const ClusterSet& filtered, const Matrix& reps, double delta);

}  // namespace ceilkit
