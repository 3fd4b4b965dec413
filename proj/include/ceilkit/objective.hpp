#pragma once

#include <cstddef>

#include "ceilkit/types.hpp"

namespace ceilkit {

// q_ij: Student's-t probability that sample i belongs to cluster j.
struct SoftAssignment {
  Matrix q;  // M x K, rows sum to 1
};

// p_ij: sharpened, frequency-normalized target for the KL clustering loss.
struct TargetDistribution {
  Matrix p;  // M x K, rows sum to 1
};

struct Centroids {
  Matrix mu;  // K x r
};

struct LossWeights {
  double lambda = 1.0;  // clustering-loss coefficient
  double tau = 0.5;     // contrastive temperature
  double alpha = 1.0;   // Student's-t degrees of freedom
  double theta = 0.7;   // cosine threshold for the category-loss member filter

  void validate() const;
};

// Denominator of the category loss. PairCount divides the summed cosines by
// the number of centroid pairs K(K-1)/2. Verbatim uses (K-1)(K-2)/2, which is
// undefined for K = 2.
enum class DenominatorRule { PairCount, Verbatim };

/// Cosine similarity; 0 when either vector is zero.
double cosine(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

/// -log softmax over k != i of cos(h_i, h_k) / tau, evaluated at k = j.
double contrastive_pair_loss(std::size_t i, std::size_t j, const Matrix& aug_reps, double tau);

/// Mean pair loss over the 2M rows of an augmented batch, where rows 2k and
/// 2k+1 (0-based) are the two views of sample k.
double contrastive_loss(const Matrix& aug_reps, double tau);
double contrastive_loss(const Matrix& aug_reps, double tau, Matrix* grad);

SoftAssignment soft_assign(const Matrix& reps, const Centroids& centroids, double alpha);
TargetDistribution target_distribution(const SoftAssignment& q);

/// KL(p || q) summed over rows, with 0 log 0 = 0.
double clustering_loss(const TargetDistribution& p, const SoftAssignment& q);

/// Gradient of clustering_loss(p, soft_assign(reps, centroids)) with p held
/// fixed.
void clustering_loss_grad(const Matrix& reps, const Centroids& centroids, const TargetDistribution& p,
                          double alpha, Matrix& grad_reps, Matrix& grad_centroids);

struct CategoryLoss {
  double value = 1.0;
  int effective_clusters = 0;  // clusters with at least one member
  bool degenerate = false;     // fewer than two nonempty clusters
};

/// exp(mean pairwise cosine between theta-filtered cluster means). Hard
/// assignment and filter membership are constants for the gradient.
CategoryLoss category_loss(const Matrix& reps, const SoftAssignment& q, double theta, DenominatorRule rule,
                           Matrix* grad = nullptr);

struct LossBreakdown {
  double contrast = 0.0;
  double cluster = 0.0;
  double category = 0.0;
  double total = 0.0;
  bool category_degenerate = false;
};

struct LossGradients {
  Matrix aug_reps;
  Matrix reps;
  Matrix centroids;
};

/// L = L_contrast + lambda * L_cluster + L_category.
LossBreakdown total_loss(const Matrix& aug_reps, const Matrix& reps, const SoftAssignment& q,
                         const TargetDistribution& p, const Centroids& centroids, const LossWeights& weights,
                         DenominatorRule rule, LossGradients* grads = nullptr);

}  // namespace ceilkit
