#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "ceilkit/types.hpp"

namespace ceilkit {

struct ContingencyTable {
  std::vector<std::vector<long long>> counts;  // k_pred x k_gold
  long long n = 0;

  static ContingencyTable build(std::span<const int> pred, std::span<const int> gold);
  std::size_t pred_clusters() const { return counts.size(); }
  std::size_t gold_clusters() const { return counts.empty() ? 0 : counts.front().size(); }
};

struct Assignment {
  std::vector<int> column_of_row;  // row i is matched to column column_of_row[i]
  double cost = 0.0;
};

/// Minimum-cost one-to-one assignment (Hungarian method with potentials).
/// Rectangular inputs are padded with zero-cost rows or columns; padded
/// matches are dropped, so unmatched rows map to -1.
Assignment optimal_assignment(const Matrix& cost);

/// Best one-to-one cluster->label matching accuracy.
double accuracy(std::span<const int> pred, std::span<const int> gold);

/// I(pred; gold) / sqrt(H(pred) H(gold)), natural logs.
double nmi(std::span<const int> pred, std::span<const int> gold);

struct Metrics {
  double acc = 0.0;
  double nmi = 0.0;
  std::size_t n = 0;
  std::size_t k_pred = 0;
  std::size_t k_gold = 0;
};

Metrics evaluate(std::span<const int> pred, std::span<const int> gold);
nlohmann::ordered_json to_json(const Metrics& m);

}  // namespace ceilkit
