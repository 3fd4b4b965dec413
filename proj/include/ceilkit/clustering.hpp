#pragma once

#include <cstdint>
#include <vector>

#include "ceilkit/corpus.hpp"
#include "ceilkit/encoder.hpp"
#include "ceilkit/objective.hpp"
#include "ceilkit/types.hpp"

namespace ceilkit {

/// Row-wise argmax; ties go to the lowest column.
std::vector<int> hard_assign(const SoftAssignment& q);
std::vector<int> hard_assign(const Matrix& probabilities);

struct KMeansOptions {
  int max_iterations = 300;
  double tolerance = 1e-6;  // stop once no centroid moves farther than this
};

struct KMeansResult {
  std::vector<int> assignments;
  Matrix centroids;  // k x r
  double inertia = 0.0;
  int iterations = 0;
  // Inertia after every assignment step; non-increasing.
  std::vector<double> inertia_history;
};

/// k-means++ seeding followed by Lloyd iterations. A cluster left empty is
/// reseeded at the point farthest from its current centroid.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

struct GmmOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;        // log-likelihood gain threshold
  double variance_floor = 1e-6;
};

struct GmmResult {
  std::vector<int> assignments;
  Matrix responsibilities;  // N x k
  Matrix means;             // k x r
  Matrix variances;         // k x r, diagonal covariances
  Vector weights;           // k
  // Total log-likelihood of the data after each EM iteration (and at init).
  std::vector<double> log_likelihood_history;
};

/// Diagonal-covariance Gaussian mixture fitted by EM from a k-means start.
GmmResult gmm_fit(const Matrix& points, int k, std::uint64_t seed, const GmmOptions& options = {});

struct EpochLoss {
  int epoch = 0;
  double contrast = 0.0;
  double cluster = 0.0;
  double category = 0.0;
};

struct ClusterResult {
  std::vector<int> assignments;
  SoftAssignment q;
  Centroids centroids;
  std::vector<EpochLoss> history;
};

struct TrainConfig {
  double learning_rate = 1e-2;
  int batch_size = 100;
  int epochs = 20;
  std::uint64_t seed = 0;
  LossWeights weights;
  DenominatorRule denominator_rule = DenominatorRule::PairCount;
  AugmentParams augment;
  // Step multiplier for mask_bias (see ClassifierConfig::bias_lr_scale).
  double bias_lr_scale = 0.0;

  void validate() const;
};

/// Mini-batch SGD on the joint contrastive + clustering + category objective.
/// Centroids start from k-means on the initial representations. Updates
/// `encoder` in place; never reads gold labels.
ClusterResult cdcc_train(const Corpus& corpus, EncoderParams& encoder, const BoundTemplate& tmpl,
                         const TrainConfig& config, int k);

}  // namespace ceilkit
