#include "ceilkit/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "ceilkit/error.hpp"
#include "ceilkit/random.hpp"

namespace ceilkit {

std::vector<int> hard_assign(const Matrix& probabilities) {
  std::vector<int> out(static_cast<std::size_t>(probabilities.rows()), 0);
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < probabilities.cols(); ++j) {
      if (probabilities(i, j) > probabilities(i, best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> hard_assign(const SoftAssignment& q) { return hard_assign(q.q); }

namespace {

double nearest(const Matrix& points, Eigen::Index i, const Matrix& centroids, int& which) {
  double best = std::numeric_limits<double>::infinity();
  which = 0;
  for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
    const double d = (points.row(i) - centroids.row(j)).squaredNorm();
    if (d < best) {
      best = d;
      which = static_cast<int>(j);
    }
  }
  return best;
}

Matrix kmeans_plus_plus(const Matrix& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Matrix centroids(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = points.row(first(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double r = unit(rng) * total;
      double cumulative = 0.0;
      pick = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cumulative += d2[i];
        if (cumulative > r) {
          pick = i;
          break;
        }
      }
      // Rounding can leave r at the very top of the range.
      if (pick < 0) {
        pick = n - 1;
        while (d2[pick] == 0.0) --pick;
      }
    } else {
      pick = first(rng);
    }
    centroids.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (k > n) throw ConfigError("kmeans: k = " + std::to_string(k) + " exceeds the number of points " + std::to_string(n));

  Rng rng = make_rng({seed, 0x6b6d65616e73ULL});
  KMeansResult result;
  result.centroids = kmeans_plus_plus(points, k, rng);
  result.assignments.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> dist(static_cast<std::size_t>(n));

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    double inertia = 0.0;
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      dist[i] = nearest(points, i, result.centroids, result.assignments[i]);
      inertia += dist[i];
      ++counts[result.assignments[i]];
    }
    // Reseed empty clusters at the farthest point; each move can only lower
    // the inertia because that point's cost drops to zero.
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (counts[result.assignments[i]] > 1 && (far < 0 || dist[i] > dist[far])) far = i;
      }
      if (far < 0) continue;
      inertia -= dist[far];
      --counts[result.assignments[far]];
      result.assignments[far] = c;
      counts[c] = 1;
      dist[far] = 0.0;
      result.centroids.row(c) = points.row(far);
    }
    result.inertia_history.push_back(inertia);
    result.inertia = inertia;
    result.iterations = iter + 1;

    Matrix updated = Matrix::Zero(k, points.cols());
    for (Eigen::Index i = 0; i < n; ++i) updated.row(result.assignments[i]) += points.row(i);
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        updated.row(c) = result.centroids.row(c);
        continue;
      }
      updated.row(c) /= static_cast<double>(counts[c]);
      shift = std::max(shift, (updated.row(c) - result.centroids.row(c)).norm());
    }
    result.centroids = std::move(updated);
    if (shift < options.tolerance) break;
  }

  // Final assignment against the final centroids.
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) inertia += nearest(points, i, result.centroids, result.assignments[i]);
  result.inertia = inertia;
  result.inertia_history.push_back(inertia);
  return result;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// E-step. Returns the total log-likelihood and fills responsibilities.
double expectation(const Matrix& points, const Matrix& means, const Matrix& variances, const Vector& weights,
                   Matrix& resp) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = means.rows();
  const Eigen::Index r = points.cols();
  resp.resize(n, k);
  Vector log_norm(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    log_norm(j) = std::log(weights(j)) - 0.5 * (static_cast<double>(r) * kLog2Pi + variances.row(j).array().log().sum());
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double maha = ((points.row(i) - means.row(j)).array().square() / variances.row(j).array()).sum();
      resp(i, j) = log_norm(j) - 0.5 * maha;
    }
    const double m = resp.row(i).maxCoeff();
    const double lse = m + std::log((resp.row(i).array() - m).exp().sum());
    resp.row(i) = (resp.row(i).array() - lse).exp().matrix();
    total += lse;
  }
  return total;
}

}  // namespace

GmmResult gmm_fit(const Matrix& points, int k, std::uint64_t seed, const GmmOptions& options) {
  const Eigen::Index n = points.rows();
  const Eigen::Index r = points.cols();
  if (k < 1) throw ConfigError("gmm: k must be >= 1");
  if (k > n) throw ConfigError("gmm: k = " + std::to_string(k) + " exceeds the number of points " + std::to_string(n));

  const KMeansResult init = kmeans(points, k, seed);
  GmmResult g;
  g.means = init.centroids;
  g.variances = Matrix::Zero(k, r);
  g.weights = Vector::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = init.assignments[i];
    g.variances.row(c) += (points.row(i) - g.means.row(c)).array().square().matrix();
    g.weights(c) += 1.0;
  }
  for (int c = 0; c < k; ++c) {
    if (g.weights(c) > 0.0) g.variances.row(c) /= g.weights(c);
  }
  g.variances = g.variances.array().max(options.variance_floor).matrix();
  g.weights /= static_cast<double>(n);

  double ll = expectation(points, g.means, g.variances, g.weights, g.responsibilities);
  g.log_likelihood_history.push_back(ll);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // M-step; the clamp at the floor is the constrained maximizer per
    // coordinate, so the likelihood still cannot decrease.
    const Vector mass = g.responsibilities.colwise().sum().transpose();
    for (int c = 0; c < k; ++c) {
      if (mass(c) <= 0.0) continue;
      const Eigen::RowVectorXd mean = (g.responsibilities.col(c).transpose() * points) / mass(c);
      Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(r);
      for (Eigen::Index i = 0; i < n; ++i) {
        var += g.responsibilities(i, c) * (points.row(i) - mean).array().square().matrix();
      }
      var /= mass(c);
      g.means.row(c) = mean;
      g.variances.row(c) = var.array().max(options.variance_floor).matrix();
    }
    g.weights = mass / static_cast<double>(n);

    const double next = expectation(points, g.means, g.variances, g.weights, g.responsibilities);
    g.log_likelihood_history.push_back(next);
    const double gain = next - ll;
    ll = next;
    if (gain < options.tolerance) break;
  }
  g.assignments = hard_assign(g.responsibilities);
  return g;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (batch_size < 2) throw ConfigError("cluster batch size must be >= 2");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(bias_lr_scale >= 0.0) || !std::isfinite(bias_lr_scale)) {
    throw ConfigError("bias learning-rate scale must be finite and >= 0");
  }
  weights.validate();
  augment.validate();
}

namespace {

std::string describe(const LossBreakdown& b) {
  std::ostringstream os;
  os << "contrast=" << b.contrast << " cluster=" << b.cluster << " category=" << b.category;
  return os.str();
}

}  // namespace

ClusterResult cdcc_train(const Corpus& corpus, EncoderParams& encoder, const BoundTemplate& tmpl,
                         const TrainConfig& config, int k) {
  config.validate();
  if (k < 2) throw ConfigError("cdcc: k must be >= 2");
  const auto n = static_cast<int>(corpus.size());
  if (n < config.batch_size) {
    throw ConfigError("cdcc: corpus size " + std::to_string(n) + " is below the cluster batch size " +
                      std::to_string(config.batch_size));
  }

  std::vector<int> all_ids(static_cast<std::size_t>(n));
  std::iota(all_ids.begin(), all_ids.end(), 0);

  const Matrix initial = encode_batch(encoder, corpus, all_ids, tmpl);
  Centroids centroids{kmeans(initial, k, mix_seed({config.seed, 1})).centroids};
  const double alpha = config.weights.alpha;

  ClusterResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng = make_rng({config.seed, 2, static_cast<std::uint64_t>(epoch)});
    std::vector<int> order = all_ids;
    std::shuffle(order.begin(), order.end(), rng);

    AugmentParams augment = config.augment;
    augment.seed = mix_seed({config.augment.seed, config.seed, 3, static_cast<std::uint64_t>(epoch)});

    EpochLoss sums{epoch, 0.0, 0.0, 0.0};
    int batches = 0;
    for (int start = 0; start < n; start += config.batch_size) {
      const int stop = std::min(n, start + config.batch_size);
      if (stop - start < 2) break;
      const std::span<const int> ids(order.data() + start, static_cast<std::size_t>(stop - start));

      const EncodedBatch plain = forward_batch(encoder, make_inputs(corpus, ids, tmpl));
      const EncodedBatch views = forward_batch(encoder, make_inputs(corpus, ids, tmpl, &augment));
      const SoftAssignment q = soft_assign(plain.reps, centroids, alpha);
      const TargetDistribution p = target_distribution(q);

      LossGradients grads;
      const LossBreakdown loss = total_loss(views.reps, plain.reps, q, p, centroids, config.weights,
                                            config.denominator_rule, &grads);
      if (!std::isfinite(loss.total) || !grads.reps.allFinite() || !grads.aug_reps.allFinite() ||
          !grads.centroids.allFinite()) {
        throw NumericalError("cdcc: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batches) + " (" + describe(loss) + ")");
      }

      EncoderGrad grad = EncoderGrad::zeros_like(encoder);
      backward_batch(encoder, plain, grads.reps, grad);
      backward_batch(encoder, views, grads.aug_reps, grad);
      grad.mask_bias *= config.bias_lr_scale;
      sgd_step(encoder, grad, config.learning_rate);
      centroids.mu -= config.learning_rate * grads.centroids;

      sums.contrast += loss.contrast;
      sums.cluster += loss.cluster;
      sums.category += loss.category;
      ++batches;
    }
    if (!encoder.all_finite() || !centroids.mu.allFinite()) {
      throw NumericalError("cdcc: parameters diverged during epoch " + std::to_string(epoch));
    }
    if (batches > 0) {
      sums.contrast /= batches;
      sums.cluster /= batches;
      sums.category /= batches;
    }
    result.history.push_back(sums);
  }

  const Matrix final_reps = encode_batch(encoder, corpus, all_ids, tmpl);
  result.q = soft_assign(final_reps, centroids, alpha);
  result.assignments = hard_assign(result.q);
  result.centroids = std::move(centroids);
  return result;
}

}  // namespace ceilkit
