#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "ceilkit/error.hpp"
#include "ceilkit/refine.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ceilkit;
using testutil::random_matrix;

namespace {

Matrix at_angles(const std::vector<double>& degrees) {
  Matrix m(static_cast<Eigen::Index>(degrees.size()), 2);
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    const double r = degrees[i] * M_PI / 180.0;
    m(static_cast<Eigen::Index>(i), 0) = std::cos(r);
    m(static_cast<Eigen::Index>(i), 1) = std::sin(r);
  }
  return m;
}

std::vector<int> iota_ids(int n, int offset = 0) {
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), offset);
  return ids;
}

bool disjoint(const ClusterSet& s) {
  std::set<int> seen;
  for (const auto& c : s.clusters) {
    for (int d : c) {
      if (!seen.insert(d).second) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("filter keeps tiny clusters whole") {
  std::mt19937_64 rng(1);
  for (double beta : {-1.0, 0.0, 0.99}) {
    CHECK(filter_cluster(std::vector<int>{4, 9}, random_matrix(rng, 2, 3), beta) == std::vector<int>{4, 9});
    CHECK(filter_cluster(std::vector<int>{7, 2, 5}, random_matrix(rng, 3, 3), beta) == std::vector<int>{2, 5, 7});
  }
}

TEST_CASE("filter on a complete graph matches the oracle") {
  std::mt19937_64 rng(2);
  for (int m = 4; m <= 9; ++m) {
    const Matrix reps = random_matrix(rng, m, 3);
    const auto ids = iota_ids(m, 10);
    CHECK(filter_cluster(ids, reps, -1.0) == oracle::filter(ids, oracle::to_rows(reps), -1.0));
  }
}

TEST_CASE("filter on a star graph never keeps the isolated node") {
  // A=0, B=30, C=10, D=-45, E=180 degrees; edges where the angle is below 50.
  const Matrix reps = at_angles({0, 30, 10, -45, 180});
  const std::vector<int> ids = {0, 1, 2, 3, 4};
  const double beta = std::cos(50 * M_PI / 180.0);
  const FilterGraph g = build_filter_graph(ids, reps, beta);
  CHECK(g.center == 0);
  CHECK(g.candidates == std::vector<int>{0, 1, 2, 3});
  CHECK(std::count(g.arrows.begin(), g.arrows.end(), std::pair<int, int>{0, 0}) == 1);
  for (const auto& [from, to] : g.arrows) {
    CHECK(std::find(g.nodes.begin(), g.nodes.end(), from) != g.nodes.end());
    CHECK(std::find(g.nodes.begin(), g.nodes.end(), to) != g.nodes.end());
  }
  const auto kept = filter_cluster(ids, reps, beta);
  CHECK(kept == oracle::filter(ids, oracle::to_rows(reps), beta));
  CHECK(std::find(kept.begin(), kept.end(), 4) == kept.end());
}

TEST_CASE("filter falls back to the center when nothing is connected") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix reps(8, 200);
    for (Eigen::Index i = 0; i < reps.rows(); ++i) {
      for (Eigen::Index j = 0; j < reps.cols(); ++j) reps(i, j) = n(rng);
    }
    const auto ids = iota_ids(8, 3);
    const auto kept = filter_cluster(ids, reps, 0.99);
    CHECK(kept == std::vector<int>{3});
    CHECK(kept == oracle::filter(ids, oracle::to_rows(reps), 0.99));
  }
}

TEST_CASE("filter matches the oracle, is a subset and ignores member order") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> size(1, 14);
  std::uniform_real_distribution<double> beta_d(-0.5, 0.95);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = size(rng);
    // Low dimension makes edges plentiful.
    const Matrix reps = random_matrix(rng, m, 2 + trial % 3);
    std::vector<int> ids = iota_ids(m);
    std::shuffle(ids.begin(), ids.end(), rng);
    const double beta = beta_d(rng);
    const auto kept = filter_cluster(ids, reps, beta);
    CHECK(kept == oracle::filter(ids, oracle::to_rows(reps), beta));
    CHECK(std::is_sorted(kept.begin(), kept.end()));
    for (int d : kept) CHECK(std::find(ids.begin(), ids.end(), d) != ids.end());

    std::vector<std::size_t> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> ids2;
    Matrix reps2(m, reps.cols());
    for (std::size_t i = 0; i < order.size(); ++i) {
      ids2.push_back(ids[order[i]]);
      reps2.row(static_cast<Eigen::Index>(i)) = reps.row(static_cast<Eigen::Index>(order[i]));
    }
    CHECK(filter_cluster(ids2, reps2, beta) == kept);
  }
}

TEST_CASE("filter_all keeps subsets, drops empties and marks the stage") {
  std::mt19937_64 rng(5);
  const Matrix reps = random_matrix(rng, 30, 3);
  const auto labels = testutil::random_labels(rng, 30, 5);
  const ClusterSet raw = ClusterSet::from_assignments(labels, 6);  // cluster 5 is empty
  CHECK(raw.document_count() == 30);
  const ClusterSet f = filter_all(raw, reps, 0.6);
  CHECK(f.stage == ClusterStage::Filtered);
  CHECK(f.clusters.size() == raw.nonempty_count());
  CHECK(disjoint(f));
  for (const auto& c : f.clusters) {
    CHECK_FALSE(c.empty());
    const int label = labels[c.front()];
    for (int d : c) CHECK(labels[d] == label);
  }

  const std::vector<int> small = {0, 0, 1, 2, 2, 2};
  const ClusterSet tiny = ClusterSet::from_assignments(small, 3);
  const ClusterSet same = filter_all(tiny, reps.topRows(6), 0.99);
  CHECK(same.clusters == tiny.clusters);
  CHECK(same.stage == ClusterStage::Filtered);
  CHECK_THROWS_AS(filter_all(tiny, reps, 1.5), ConfigError);
}

TEST_CASE("aggregate examples") {
  ClusterSet s;
  s.stage = ClusterStage::Filtered;
  s.clusters = {{0, 1}, {2, 3}};
  const Matrix same{{1, 0}, {1, 0}, {2, 0}, {3, 0}};
  const ClusterSet merged = aggregate(s, same, 0.95);
  CHECK(merged.clusters == std::vector<std::vector<int>>{{0, 1, 2, 3}});
  CHECK(merged.stage == ClusterStage::Aggregated);

  const Matrix orth{{1, 0}, {1, 0}, {0, 1}, {0, 1}};
  CHECK(aggregate(s, orth, 0.95).clusters == s.clusters);

  // Pairwise mean similarities 0.99, 0.97 and 0.96.
  ClusterSet three;
  three.clusters = {{0}, {1}, {2}};
  const Matrix chain = at_angles({0, std::acos(0.99) * 180 / M_PI, -std::acos(0.97) * 180 / M_PI});
  const ClusterSet one = aggregate(three, chain, 0.95);
  CHECK(one.clusters == oracle::aggregate(three.clusters, oracle::to_rows(chain), 0.95));
  CHECK(one.clusters.size() == 1);

  CHECK_THROWS_AS(aggregate(s, same, 1.5), ConfigError);
}

TEST_CASE("aggregate matches the oracle and only ever merges") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> delta_d(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix reps = random_matrix(rng, 24, 2 + trial % 3);
    ClusterSet s = ClusterSet::from_assignments(testutil::random_labels(rng, 24, 6), 6);
    s.clusters.erase(std::remove_if(s.clusters.begin(), s.clusters.end(), [](const auto& c) { return c.empty(); }),
                     s.clusters.end());
    s.stage = ClusterStage::Filtered;
    const double delta = delta_d(rng);
    const ClusterSet out = aggregate(s, reps, delta);
    CHECK(out.clusters == oracle::aggregate(s.clusters, oracle::to_rows(reps), delta));
    CHECK(out.clusters.size() <= s.clusters.size());
    CHECK(disjoint(out));
    CHECK(out.document_count() == s.document_count());
    for (const auto& c : out.clusters) {
      std::set<int> members(c.begin(), c.end());
      for (const auto& in : s.clusters) {
        const auto hits = std::count_if(in.begin(), in.end(), [&](int d) { return members.count(d) > 0; });
        CHECK((hits == 0 || hits == static_cast<long>(in.size())));
      }
    }
    CHECK(aggregate(s, reps, 1.0).clusters == s.clusters);
  }
}
