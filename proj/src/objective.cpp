#include "ceilkit/objective.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ceilkit/clustering.hpp"
#include "ceilkit/error.hpp"

namespace ceilkit {

void LossWeights::validate() const {
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (!(theta >= -1.0 && theta <= 1.0)) throw ConfigError("theta must lie in [-1, 1]");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
}

double cosine(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

namespace {

struct Normalized {
  Matrix rows;        // unit rows, zero rows stay zero
  Vector inv_norms;   // 0 for zero rows
};

Normalized normalize_rows(const Matrix& m) {
  Normalized n{m, Vector::Zero(m.rows())};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm > 0.0) {
      n.inv_norms(i) = 1.0 / norm;
      n.rows.row(i) *= n.inv_norms(i);
    } else {
      n.rows.row(i).setZero();
    }
  }
  return n;
}

void check_augmented(const Matrix& aug_reps) {
  if (aug_reps.rows() < 2) throw ContractError("contrastive loss needs at least one positive pair (M >= 1)");
  if (aug_reps.rows() % 2 != 0) throw ContractError("contrastive loss needs an even number of rows");
}

// Row i's positive partner: rows (2k, 2k+1) form a pair.
Eigen::Index partner(Eigen::Index i) { return (i % 2 == 0) ? i + 1 : i - 1; }

}  // namespace

double contrastive_pair_loss(std::size_t i, std::size_t j, const Matrix& aug_reps, double tau) {
  check_augmented(aug_reps);
  const auto n = static_cast<std::size_t>(aug_reps.rows());
  if (i >= n || j >= n || i == j) throw ContractError("contrastive_pair_loss: need 0 <= i, j < 2M and i != j");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");

  const Normalized unit = normalize_rows(aug_reps);
  const auto ii = static_cast<Eigen::Index>(i);
  std::vector<double> logits;
  double target = 0.0;
  double max_logit = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < aug_reps.rows(); ++k) {
    if (k == ii) continue;
    const double s = unit.rows.row(ii).dot(unit.rows.row(k)) / tau;
    if (k == static_cast<Eigen::Index>(j)) target = s;
    logits.push_back(s);
    max_logit = std::max(max_logit, s);
  }
  double sum = 0.0;
  for (double s : logits) sum += std::exp(s - max_logit);
  return -(target - max_logit - std::log(sum));
}

double contrastive_loss(const Matrix& aug_reps, double tau) { return contrastive_loss(aug_reps, tau, nullptr); }

double contrastive_loss(const Matrix& aug_reps, double tau, Matrix* grad) {
  check_augmented(aug_reps);
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  const Eigen::Index n = aug_reps.rows();
  const Normalized unit = normalize_rows(aug_reps);
  const Matrix sims = (unit.rows * unit.rows.transpose()) / tau;

  // softmax over k != i, row by row
  Matrix prob = Matrix::Zero(n, n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i) max_logit = std::max(max_logit, sims(i, k));
    }
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == i) continue;
      prob(i, k) = std::exp(sims(i, k) - max_logit);
      sum += prob(i, k);
    }
    prob.row(i) /= sum;
    loss += -(sims(i, partner(i)) - max_logit - std::log(sum));
  }
  loss /= static_cast<double>(n);

  if (grad) {
    // d loss / d cos(h_i, h_k)
    Matrix g = prob;
    for (Eigen::Index i = 0; i < n; ++i) g(i, partner(i)) -= 1.0;
    g /= (static_cast<double>(n) * tau);
    const Matrix grad_unit = g * unit.rows + g.transpose() * unit.rows;
    grad->resize(n, aug_reps.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double radial = unit.rows.row(i).dot(grad_unit.row(i));
      grad->row(i) = (grad_unit.row(i) - radial * unit.rows.row(i)) * unit.inv_norms(i);
    }
  }
  return loss;
}

namespace {

Matrix squared_distances(const Matrix& reps, const Matrix& mu) {
  Matrix d(reps.rows(), mu.rows());
  for (Eigen::Index i = 0; i < reps.rows(); ++i) {
    for (Eigen::Index j = 0; j < mu.rows(); ++j) d(i, j) = (reps.row(i) - mu.row(j)).squaredNorm();
  }
  return d;
}

}  // namespace

SoftAssignment soft_assign(const Matrix& reps, const Centroids& centroids, double alpha) {
  if (centroids.mu.rows() == 0) throw ContractError("soft_assign: no centroids (K = 0)");
  if (centroids.mu.cols() != reps.cols()) throw ContractError("soft_assign: centroid width mismatch");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");

  const Matrix dist = squared_distances(reps, centroids.mu);
  const double exponent = -(alpha + 1.0) / 2.0;
  SoftAssignment out{Matrix(reps.rows(), centroids.mu.rows())};
  for (Eigen::Index i = 0; i < reps.rows(); ++i) {
    // Normalize in the log domain; the kernel underflows for far samples.
    Eigen::RowVectorXd logw = exponent * (dist.row(i).array() / alpha).log1p().matrix();
    logw.array() -= logw.maxCoeff();
    Eigen::RowVectorXd w = logw.array().exp().matrix();
    w /= w.sum();
    out.q.row(i) = w.array().max(std::numeric_limits<double>::min()).matrix();
  }
  return out;
}

TargetDistribution target_distribution(const SoftAssignment& q) {
  const Eigen::RowVectorXd freq = q.q.colwise().sum();
  TargetDistribution out{Matrix(q.q.rows(), q.q.cols())};
  for (Eigen::Index i = 0; i < q.q.rows(); ++i) {
    Eigen::RowVectorXd w = q.q.row(i).array().square() / freq.array();
    out.p.row(i) = w / w.sum();
  }
  return out;
}

double clustering_loss(const TargetDistribution& p, const SoftAssignment& q) {
  if (p.p.rows() != q.q.rows() || p.p.cols() != q.q.cols()) {
    throw ContractError("clustering_loss: p and q shapes differ");
  }
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.p.cols(); ++j) {
      const double pij = p.p(i, j);
      if (pij > 0.0) kl += pij * std::log(pij / q.q(i, j));
    }
  }
  if (kl < -1e-9 * static_cast<double>(std::max<Eigen::Index>(1, p.p.rows()))) {
    throw NumericalError("clustering_loss: negative KL divergence " + std::to_string(kl));
  }
  return std::max(kl, 0.0);
}

void clustering_loss_grad(const Matrix& reps, const Centroids& centroids, const TargetDistribution& p,
                          double alpha, Matrix& grad_reps, Matrix& grad_centroids) {
  const SoftAssignment q = soft_assign(reps, centroids, alpha);
  if (p.p.rows() != q.q.rows() || p.p.cols() != q.q.cols()) {
    throw ContractError("clustering_loss_grad: p shape does not match the batch");
  }
  const Matrix dist = squared_distances(reps, centroids.mu);
  grad_reps = Matrix::Zero(reps.rows(), reps.cols());
  grad_centroids = Matrix::Zero(centroids.mu.rows(), centroids.mu.cols());
  for (Eigen::Index i = 0; i < reps.rows(); ++i) {
    for (Eigen::Index j = 0; j < centroids.mu.rows(); ++j) {
      // d loss / d log w_ij = q_ij - p_ij; d log w / d dist = -(alpha+1) / (2 (alpha + dist))
      const double coeff = (q.q(i, j) - p.p(i, j)) * -(alpha + 1.0) / (alpha + dist(i, j));
      const Eigen::RowVectorXd diff = reps.row(i) - centroids.mu.row(j);
      grad_reps.row(i) += coeff * diff;
      grad_centroids.row(j) -= coeff * diff;
    }
  }
}

CategoryLoss category_loss(const Matrix& reps, const SoftAssignment& q, double theta, DenominatorRule rule,
                           Matrix* grad) {
  const Eigen::Index k = q.q.cols();
  if (k < 2) throw ContractError("category_loss needs K >= 2");
  if (q.q.rows() != reps.rows()) throw ContractError("category_loss: q and representations differ in rows");
  if (grad) *grad = Matrix::Zero(reps.rows(), reps.cols());

  const std::vector<int> assignment = hard_assign(q);
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < reps.rows(); ++i) members[static_cast<std::size_t>(assignment[i])].push_back(i);

  std::vector<Vector> means;
  std::vector<std::vector<Eigen::Index>> filtered;
  for (const auto& m : members) {
    if (m.empty()) continue;
    Vector centre = Vector::Zero(reps.cols());
    for (auto i : m) centre += reps.row(i).transpose();
    centre /= static_cast<double>(m.size());
    std::vector<Eigen::Index> kept;
    for (auto i : m) {
      if (cosine(reps.row(i).transpose(), centre) >= theta) kept.push_back(i);
    }
    if (kept.empty()) kept = m;
    Vector mean = Vector::Zero(reps.cols());
    for (auto i : kept) mean += reps.row(i).transpose();
    mean /= static_cast<double>(kept.size());
    means.push_back(std::move(mean));
    filtered.push_back(std::move(kept));
  }

  CategoryLoss out;
  out.effective_clusters = static_cast<int>(means.size());
  const double ke = static_cast<double>(out.effective_clusters);
  if (out.effective_clusters < 2) {
    out.value = 1.0;
    out.degenerate = true;
    return out;
  }
  double denom = 0.0;
  if (rule == DenominatorRule::PairCount) {
    denom = ke * (ke - 1.0) / 2.0;
  } else {
    if (out.effective_clusters == 2) {
      throw ConfigError("category loss: the verbatim (K-1)(K-2)/2 denominator is zero for two clusters");
    }
    denom = (ke - 1.0) * (ke - 2.0) / 2.0;
  }

  double sum = 0.0;
  for (std::size_t a = 0; a < means.size(); ++a) {
    for (std::size_t b = a + 1; b < means.size(); ++b) sum += cosine(means[a], means[b]);
  }
  out.value = std::exp(sum / denom);

  if (grad) {
    for (std::size_t a = 0; a < means.size(); ++a) {
      const double na = means[a].norm();
      if (na == 0.0) continue;
      Vector g = Vector::Zero(reps.cols());
      for (std::size_t b = 0; b < means.size(); ++b) {
        if (b == a) continue;
        const double nb = means[b].norm();
        if (nb == 0.0) continue;
        const double c = means[a].dot(means[b]) / (na * nb);
        g += means[b] / (na * nb) - c * means[a] / (na * na);
      }
      g *= out.value / denom / static_cast<double>(filtered[a].size());
      for (auto i : filtered[a]) grad->row(i) += g.transpose();
    }
  }
  return out;
}

LossBreakdown total_loss(const Matrix& aug_reps, const Matrix& reps, const SoftAssignment& q,
                         const TargetDistribution& p, const Centroids& centroids, const LossWeights& weights,
                         DenominatorRule rule, LossGradients* grads) {
  LossBreakdown out;
  out.contrast = contrastive_loss(aug_reps, weights.tau, grads ? &grads->aug_reps : nullptr);
  out.cluster = clustering_loss(p, q);
  Matrix category_grad;
  const CategoryLoss category = category_loss(reps, q, weights.theta, rule, grads ? &category_grad : nullptr);
  out.category = category.value;
  out.category_degenerate = category.degenerate;
  out.total = out.contrast + weights.lambda * out.cluster + out.category;

  if (grads) {
    Matrix cluster_reps;
    clustering_loss_grad(reps, centroids, p, weights.alpha, cluster_reps, grads->centroids);
    grads->reps = weights.lambda * cluster_reps + category_grad;
    grads->centroids *= weights.lambda;
  }
  return out;
}

}  // namespace ceilkit
