#include "ceilkit/refine.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "ceilkit/error.hpp"
#include "ceilkit/objective.hpp"

namespace ceilkit {

ClusterSet ClusterSet::from_assignments(std::span<const int> assignments, int k) {
  if (k < 0) throw ContractError("cluster count must be non-negative");
  ClusterSet set;
  set.clusters.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const int c = assignments[i];
    if (c < 0 || c >= k) throw ContractError("assignment " + std::to_string(c) + " outside [0, k)");
    set.clusters[static_cast<std::size_t>(c)].push_back(static_cast<int>(i));
  }
  return set;
}

std::size_t ClusterSet::nonempty_count() const {
  return static_cast<std::size_t>(
      std::count_if(clusters.begin(), clusters.end(), [](const auto& c) { return !c.empty(); }));
}

std::size_t ClusterSet::document_count() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.size();
  return n;
}

FilterGraph build_filter_graph(std::span<const int> doc_ids, const Matrix& member_reps, double beta) {
  const auto m = doc_ids.size();
  if (m == 0) throw ContractError("filter: empty cluster");
  if (member_reps.rows() != static_cast<Eigen::Index>(m)) {
    throw ContractError("filter: member ids and representations differ in count");
  }

  // Work in ascending doc-id order so every tie rule is order independent.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return doc_ids[a] < doc_ids[b]; });

  FilterGraph g;
  g.nodes.reserve(m);
  for (auto i : order) g.nodes.push_back(doc_ids[i]);
  g.neighbours.assign(m, {});
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      const double c = cosine(member_reps.row(static_cast<Eigen::Index>(order[a])).transpose(),
                              member_reps.row(static_cast<Eigen::Index>(order[b])).transpose());
      if (c >= beta) {
        g.neighbours[a].push_back(static_cast<int>(b));
        g.neighbours[b].push_back(static_cast<int>(a));
      }
    }
  }

  std::size_t center = 0;
  for (std::size_t a = 1; a < m; ++a) {
    if (g.neighbours[a].size() > g.neighbours[center].size()) center = a;
  }
  g.center = g.nodes[center];

  std::vector<char> is_candidate(m, 0);
  is_candidate[center] = 1;
  g.arrows.emplace_back(g.nodes[center], g.nodes[center]);
  for (int f : g.neighbours[center]) {
    g.arrows.emplace_back(g.nodes[center], g.nodes[static_cast<std::size_t>(f)]);
    is_candidate[static_cast<std::size_t>(f)] = 1;
  }
  // First-order nodes point at all of their neighbours, including the center
  // and each other; the ones reached here for the first time are second order.
  for (int f : g.neighbours[center]) {
    for (int s : g.neighbours[static_cast<std::size_t>(f)]) {
      g.arrows.emplace_back(g.nodes[static_cast<std::size_t>(f)], g.nodes[static_cast<std::size_t>(s)]);
      is_candidate[static_cast<std::size_t>(s)] = 1;
    }
  }
  for (std::size_t a = 0; a < m; ++a) {
    if (is_candidate[a]) g.candidates.push_back(g.nodes[a]);
  }
  return g;
}

std::vector<int> filter_cluster(std::span<const int> doc_ids, const Matrix& member_reps, double beta) {
  if (doc_ids.empty()) throw ContractError("filter: empty cluster");
  if (!(beta >= -1.0 && beta <= 1.0)) throw ConfigError("beta must lie in [-1, 1]");
  if (doc_ids.size() <= 3) {
    std::vector<int> all(doc_ids.begin(), doc_ids.end());
    std::sort(all.begin(), all.end());
    return all;
  }

  const FilterGraph g = build_filter_graph(doc_ids, member_reps, beta);
  std::map<int, int> in_degree;
  for (int c : g.candidates) in_degree[c] = 0;
  for (const auto& [from, to] : g.arrows) ++in_degree[to];

  std::map<int, int> frequency;  // in-degree value -> how many candidates have it
  for (const auto& [doc, deg] : in_degree) ++frequency[deg];
  int mode = 0;
  int best = -1;
  for (const auto& [deg, count] : frequency) {  // ascending, so ties keep the smaller value
    if (count > best) {
      best = count;
      mode = deg;
    }
  }

  std::vector<int> kept;
  for (const auto& [doc, deg] : in_degree) {
    if (deg > mode) kept.push_back(doc);
  }
  if (kept.empty()) kept.push_back(g.center);
  return kept;
}

namespace {

Matrix gather(const Matrix& reps, const std::vector<int>& ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), reps.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= reps.rows()) {
      throw ContractError("document " + std::to_string(ids[i]) + " has no representation row");
    }
    out.row(static_cast<Eigen::Index>(i)) = reps.row(ids[i]);
  }
  return out;
}

Vector mean_of(const Matrix& reps, const std::vector<int>& ids) {
  Vector mean = Vector::Zero(reps.cols());
  for (int id : ids) mean += reps.row(id).transpose();
  return mean / static_cast<double>(ids.size());
}

}  // namespace

ClusterSet filter_all(const ClusterSet& raw, const Matrix& reps, double beta) {
  ClusterSet out;
  out.stage = ClusterStage::Filtered;
  for (const auto& members : raw.clusters) {
    if (members.empty()) continue;
    auto kept = filter_cluster(members, gather(reps, members), beta);
    if (!kept.empty()) out.clusters.push_back(std::move(kept));
  }
  return out;
}

ClusterSet aggregate(const ClusterSet& filtered, const Matrix& reps, double delta) {
  if (!(delta >= -1.0 && delta <= 1.0)) throw ConfigError("delta must lie in [-1, 1]");
  ClusterSet out;
  out.stage = ClusterStage::Aggregated;
  for (const auto& c : filtered.clusters) {
    if (!c.empty()) out.clusters.push_back(c);
  }
  std::vector<Vector> means;
  for (const auto& c : out.clusters) means.push_back(mean_of(reps, c));

  while (out.clusters.size() >= 2) {
    std::size_t bi = 0;
    std::size_t bj = 1;
    double best = cosine(means[0], means[1]);
    for (std::size_t i = 0; i < out.clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < out.clusters.size(); ++j) {
        const double s = cosine(means[i], means[j]);
        if (s > best) {
          best = s;
          bi = i;
          bj = j;
        }
      }
    }
    if (!(best > delta)) break;
    auto& merged = out.clusters[bi];
    merged.insert(merged.end(), out.clusters[bj].begin(), out.clusters[bj].end());
    std::sort(merged.begin(), merged.end());
    means[bi] = mean_of(reps, merged);
    out.clusters.erase(out.clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    means.erase(means.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return out;
}

}  // namespace ceilkit
