#include <doctest.h>

#include <random>
#include <set>

#include "ceilkit/clustering.hpp"
#include "ceilkit/error.hpp"
#include "ceilkit/eval.hpp"
#include "ceilkit/pipeline.hpp"
#include "test_util.hpp"

using namespace ceilkit;
using testutil::random_matrix;

namespace {

double inertia_of(const Matrix& x, const std::vector<int>& labels, int k) {
  Matrix mu = Matrix::Zero(k, x.cols());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    mu.row(labels[i]) += x.row(i);
    ++counts[labels[i]];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[c] > 0) mu.row(c) /= counts[c];
  }
  double total = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) total += (x.row(i) - mu.row(labels[i])).squaredNorm();
  return total;
}

struct CdccSetup {
  Workspace ws;
  EncoderParams encoder;
  TrainConfig train;
};

CdccSetup cdcc_setup(const Corpus& corpus, std::uint64_t seed) {
  CeilConfig config;
  config.k = 4;
  config.seed = seed;
  CdccSetup s{prepare_workspace(corpus, config), {}, config.train};
  s.encoder = initial_encoder(s.ws, config);
  s.train.seed = seed;
  return s;
}

Corpus four_topics(double noise, std::uint64_t seed = 3) {
  SynthParams sp;
  sp.k = 4;
  sp.n_per_cluster = 50;
  sp.noise = noise;
  sp.seed = seed;
  return synth_corpus(sp);
}

}  // namespace

TEST_CASE("hard_assign takes the first maximum and follows column permutations") {
  CHECK(hard_assign(Matrix{{0.9, 0.1}}) == std::vector<int>{0});
  CHECK(hard_assign(Matrix{{0.5, 0.5}}) == std::vector<int>{0});
  const Matrix q{{0.1, 0.7, 0.2}, {0.3, 0.3, 0.4}, {0.6, 0.2, 0.2}};
  const std::vector<int> perm = {2, 0, 1};  // new column c holds old column perm[c]
  Matrix permuted(3, 3);
  for (int c = 0; c < 3; ++c) permuted.col(c) = q.col(perm[c]);
  const auto a = hard_assign(q);
  const auto b = hard_assign(permuted);
  for (int i = 0; i < 3; ++i) CHECK(perm[b[i]] == a[i]);
}

TEST_CASE("kmeans examples") {
  const Matrix distinct{{0, 0}, {5, 1}, {-3, 7}};
  const KMeansResult own = kmeans(distinct, 3, 1);
  CHECK(own.inertia == doctest::Approx(0.0));
  CHECK(std::set<int>(own.assignments.begin(), own.assignments.end()).size() == 3);

  const Matrix pairs{{0, 0}, {0, 1}, {10, 10}, {10, 11}};
  const KMeansResult two = kmeans(pairs, 2, 4);
  CHECK(two.assignments[0] == two.assignments[1]);
  CHECK(two.assignments[2] == two.assignments[3]);
  const Eigen::RowVectorXd m0 = two.centroids.row(two.assignments[0]);
  const Eigen::RowVectorXd m1 = two.centroids.row(two.assignments[2]);
  CHECK((m0 - Eigen::RowVectorXd{{0, 0.5}}).norm() < 1e-12);
  CHECK((m1 - Eigen::RowVectorXd{{10, 10.5}}).norm() < 1e-12);

  CHECK_THROWS_AS(kmeans(pairs, 5, 1), ConfigError);
}

TEST_CASE("kmeans beats random assignments and inertia never increases") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = random_matrix(rng, 50, 4);
    const KMeansResult r = kmeans(x, 3, static_cast<std::uint64_t>(trial));
    CHECK(r.inertia == doctest::Approx(inertia_of(x, r.assignments, 3)).epsilon(1e-9));
    for (int b = 0; b < 10; ++b) CHECK(r.inertia <= inertia_of(x, testutil::random_labels(rng, 50, 3), 3));
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
      CHECK(r.inertia_history[i] <= r.inertia_history[i - 1] + 1e-12);
    }
    const KMeansResult again = kmeans(x, 3, static_cast<std::uint64_t>(trial));
    CHECK(again.assignments == r.assignments);
    CHECK(again.centroids == r.centroids);
  }
}

TEST_CASE("gmm on one blob recovers the sample mean") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(200, 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = 2.0 + n(rng);
  }
  const GmmResult g = gmm_fit(x, 1, 7);
  CHECK((g.means.row(0) - x.colwise().mean()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(gmm_fit(x.topRows(2), 3, 1), ConfigError);
}

TEST_CASE("gmm separates two Gaussians and its log-likelihood never decreases") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix x(200, 2);
    std::vector<int> gold(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
      const int label = i < 100 ? 0 : 1;
      gold[i] = label;
      x(i, 0) = (label == 0 ? -5.0 : 5.0) + n(rng);
      x(i, 1) = n(rng);
    }
    const GmmResult g = gmm_fit(x, 2, seed);
    CHECK(accuracy(g.assignments, gold) == 1.0);
    for (std::size_t i = 1; i < g.log_likelihood_history.size(); ++i) {
      CHECK(g.log_likelihood_history[i] >= g.log_likelihood_history[i - 1] - 1e-9);
    }
    CHECK(hard_assign(g.responsibilities) == g.assignments);
    const GmmResult again = gmm_fit(x, 2, seed);
    CHECK(again.assignments == g.assignments);
  }
}

TEST_CASE("cdcc with zero epochs returns the k-means soft assignment") {
  CdccSetup s = cdcc_setup(four_topics(0.0), 5);
  s.train.epochs = 0;
  const EncoderParams before = s.encoder;
  const ClusterResult r = cdcc_train(s.ws.corpus, s.encoder, s.ws.tmpl, s.train, 4);
  CHECK(s.encoder.embed == before.embed);
  CHECK(s.encoder.proj == before.proj);
  CHECK(r.history.empty());
  const Matrix reps = encode_corpus(before, s.ws.corpus, s.ws.tmpl);
  const SoftAssignment q = soft_assign(reps, r.centroids, s.train.weights.alpha);
  CHECK((q.q - r.q.q).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.assignments == hard_assign(r.q));
}

TEST_CASE("cdcc clusters a noiseless synthetic corpus") {
  CdccSetup s = cdcc_setup(four_topics(0.0, 0), 0);
  const ClusterResult r = cdcc_train(s.ws.corpus, s.encoder, s.ws.tmpl, s.train, 4);
  CHECK(accuracy(r.assignments, s.ws.corpus.gold_labels()) >= 0.95);
  CHECK(r.history.size() == static_cast<std::size_t>(s.train.epochs));
  CHECK(r.assignments == hard_assign(r.q));
  CHECK(s.encoder.all_finite());
}

TEST_CASE("cdcc is deterministic and never reads gold labels") {
  const Corpus corpus = four_topics(0.1);
  CdccSetup a = cdcc_setup(corpus, 9);
  CdccSetup b = cdcc_setup(corpus, 9);
  CdccSetup stripped = cdcc_setup(corpus.without_labels(), 9);
  a.train.epochs = b.train.epochs = stripped.train.epochs = 3;
  const ClusterResult ra = cdcc_train(a.ws.corpus, a.encoder, a.ws.tmpl, a.train, 4);
  const ClusterResult rb = cdcc_train(b.ws.corpus, b.encoder, b.ws.tmpl, b.train, 4);
  const ClusterResult rs = cdcc_train(stripped.ws.corpus, stripped.encoder, stripped.ws.tmpl, stripped.train, 4);
  CHECK(ra.assignments == rb.assignments);
  CHECK(ra.q.q == rb.q.q);
  CHECK(ra.assignments == rs.assignments);
  CHECK(ra.q.q == rs.q.q);
  REQUIRE(ra.history.size() == rs.history.size());
  for (std::size_t e = 0; e < ra.history.size(); ++e) {
    CHECK(ra.history[e].contrast == rs.history[e].contrast);
    CHECK(ra.history[e].cluster == rs.history[e].cluster);
    CHECK(ra.history[e].category == rs.history[e].category);
  }
}

TEST_CASE("cdcc preconditions") {
  CdccSetup s = cdcc_setup(four_topics(0.0), 1);
  CHECK_THROWS_AS(cdcc_train(s.ws.corpus, s.encoder, s.ws.tmpl, s.train, 1), ConfigError);
  s.train.batch_size = 1000;
  CHECK_THROWS_AS(cdcc_train(s.ws.corpus, s.encoder, s.ws.tmpl, s.train, 4), ConfigError);
  TrainConfig bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.batch_size = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("cdcc aborts on divergence") {
  CdccSetup s = cdcc_setup(four_topics(0.0), 1);
  s.train.learning_rate = 1e300;
  CHECK_THROWS_AS(cdcc_train(s.ws.corpus, s.encoder, s.ws.tmpl, s.train, 4), NumericalError);
}
