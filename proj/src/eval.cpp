#include "ceilkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "ceilkit/error.hpp"

namespace ceilkit {

namespace {

std::map<int, std::size_t> dense_labels(std::span<const int> labels) {
  std::map<int, std::size_t> index;
  for (int l : labels) index.emplace(l, 0);
  std::size_t next = 0;
  for (auto& [label, id] : index) id = next++;
  return index;
}

void check_lengths(std::span<const int> pred, std::span<const int> gold) {
  if (pred.size() != gold.size()) {
    throw DataError("prediction and gold label counts differ (" + std::to_string(pred.size()) + " vs " +
                    std::to_string(gold.size()) + ")");
  }
}

}  // namespace

ContingencyTable ContingencyTable::build(std::span<const int> pred, std::span<const int> gold) {
  check_lengths(pred, gold);
  const auto pred_index = dense_labels(pred);
  const auto gold_index = dense_labels(gold);
  ContingencyTable table;
  table.counts.assign(pred_index.size(), std::vector<long long>(gold_index.size(), 0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++table.counts[pred_index.at(pred[i])][gold_index.at(gold[i])];
  }
  table.n = static_cast<long long>(pred.size());
  return table;
}

Assignment optimal_assignment(const Matrix& cost) {
  if (!cost.allFinite()) throw DataError("optimal_assignment: cost matrix has non-finite entries");
  const auto rows = static_cast<std::size_t>(cost.rows());
  const auto cols = static_cast<std::size_t>(cost.cols());
  const std::size_t n = std::max(rows, cols);
  Assignment out;
  out.column_of_row.assign(rows, -1);
  if (n == 0) return out;

  auto c = [&](std::size_t i, std::size_t j) {
    return (i < rows && j < cols) ? cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) : 0.0;
  };

  // 1-based potentials formulation; row 0 / column 0 are sentinels.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = match[j] - 1;
    if (i < rows && j - 1 < cols) {
      out.column_of_row[i] = static_cast<int>(j - 1);
      out.cost += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1));
    }
  }
  return out;
}

double accuracy(std::span<const int> pred, std::span<const int> gold) {
  check_lengths(pred, gold);
  if (pred.empty()) throw DataError("accuracy: no documents to evaluate");
  const auto table = ContingencyTable::build(pred, gold);
  Matrix cost(static_cast<Eigen::Index>(table.pred_clusters()), static_cast<Eigen::Index>(table.gold_clusters()));
  for (std::size_t i = 0; i < table.pred_clusters(); ++i) {
    for (std::size_t j = 0; j < table.gold_clusters(); ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -static_cast<double>(table.counts[i][j]);
    }
  }
  const Assignment best = optimal_assignment(cost);
  long long correct = 0;
  for (std::size_t i = 0; i < best.column_of_row.size(); ++i) {
    if (best.column_of_row[i] >= 0) correct += table.counts[i][static_cast<std::size_t>(best.column_of_row[i])];
  }
  return static_cast<double>(correct) / static_cast<double>(table.n);
}

double nmi(std::span<const int> pred, std::span<const int> gold) {
  check_lengths(pred, gold);
  if (pred.empty()) throw DataError("nmi: no documents to evaluate");
  const auto table = ContingencyTable::build(pred, gold);
  const double n = static_cast<double>(table.n);
  std::vector<double> row_sum(table.pred_clusters(), 0.0);
  std::vector<double> col_sum(table.gold_clusters(), 0.0);
  for (std::size_t i = 0; i < table.pred_clusters(); ++i) {
    for (std::size_t j = 0; j < table.gold_clusters(); ++j) {
      row_sum[i] += static_cast<double>(table.counts[i][j]);
      col_sum[j] += static_cast<double>(table.counts[i][j]);
    }
  }
  auto entropy = [n](const std::vector<double>& sums) {
    double h = 0.0;
    for (double s : sums) {
      if (s > 0.0) h -= (s / n) * std::log(s / n);
    }
    return h;
  };
  const double h_pred = entropy(row_sum);
  const double h_gold = entropy(col_sum);
  if (table.pred_clusters() == 1 && table.gold_clusters() == 1) return 1.0;
  if (h_pred <= 0.0 || h_gold <= 0.0) return 0.0;

  double mi = 0.0;
  for (std::size_t i = 0; i < table.pred_clusters(); ++i) {
    for (std::size_t j = 0; j < table.gold_clusters(); ++j) {
      const double nij = static_cast<double>(table.counts[i][j]);
      if (nij > 0.0) mi += (nij / n) * std::log(n * nij / (row_sum[i] * col_sum[j]));
    }
  }
  return std::clamp(mi / std::sqrt(h_pred * h_gold), 0.0, 1.0);
}

Metrics evaluate(std::span<const int> pred, std::span<const int> gold) {
  Metrics m;
  m.acc = accuracy(pred, gold);
  m.nmi = nmi(pred, gold);
  m.n = pred.size();
  m.k_pred = dense_labels(pred).size();
  m.k_gold = dense_labels(gold).size();
  return m;
}

nlohmann::ordered_json to_json(const Metrics& m) {
  nlohmann::ordered_json out;
  out["acc"] = m.acc;
  out["nmi"] = m.nmi;
  out["n"] = m.n;
  out["k_pred"] = m.k_pred;
  out["k_gold"] = m.k_gold;
  return out;
}

}  // namespace ceilkit
