#include "ceilkit/supervise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "ceilkit/error.hpp"
#include "ceilkit/random.hpp"

namespace ceilkit {

std::vector<TokenId> VerbalizerMap::ids(std::size_t cluster) const {
  std::vector<TokenId> out;
  for (const auto& kw : keywords.at(cluster)) out.push_back(kw.token);
  return out;
}

VerbalizerMap verbalize(const ClusterSet& clusters, const Corpus& corpus, const Vocabulary& vocab, int n,
                        std::span<const TokenId> excluded) {
  if (n < 1) throw ConfigError("verbalizer keyword count n must be >= 1");
  const std::set<TokenId> banned(excluded.begin(), excluded.end());
  auto eligible = [&](TokenId t) { return !vocab.is_special(t) && !banned.contains(t); };

  const std::size_t num_clusters = clusters.clusters.size();
  std::vector<std::map<TokenId, int>> counts(num_clusters);
  std::vector<double> totals(num_clusters, 0.0);
  std::map<TokenId, int> cluster_freq;
  for (std::size_t c = 0; c < num_clusters; ++c) {
    for (int doc : clusters.clusters[c]) {
      if (doc < 0 || static_cast<std::size_t>(doc) >= corpus.size()) {
        throw ContractError("verbalize: document " + std::to_string(doc) + " outside the corpus");
      }
      for (TokenId t : corpus.documents[static_cast<std::size_t>(doc)].tokens) {
        ++counts[c][t];
        totals[c] += 1.0;
      }
    }
    for (const auto& [t, count] : counts[c]) ++cluster_freq[t];
  }

  const double num = static_cast<double>(num_clusters);
  VerbalizerMap map;
  map.keywords.resize(num_clusters);
  for (std::size_t c = 0; c < num_clusters; ++c) {
    std::vector<Keyword> scored;
    for (const auto& [t, count] : counts[c]) {
      if (!eligible(t)) continue;
      const double tf = count / totals[c];
      const double idf = std::log((1.0 + num) / (1.0 + cluster_freq[t])) + 1.0;
      scored.push_back({t, tf * idf});
    }
    if (scored.empty()) {
      throw DataError("verbalize: cluster " + std::to_string(c) + " has no eligible keyword tokens");
    }
    std::sort(scored.begin(), scored.end(), [](const Keyword& a, const Keyword& b) {
      return a.score != b.score ? a.score > b.score : a.token < b.token;
    });
    if (scored.size() > static_cast<std::size_t>(n)) scored.resize(static_cast<std::size_t>(n));
    map.keywords[c] = std::move(scored);
  }
  return map;
}

nlohmann::ordered_json to_json(const VerbalizerMap& map, const Vocabulary& vocab) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < map.keywords.size(); ++c) {
    auto list = nlohmann::ordered_json::array();
    for (const auto& kw : map.keywords[c]) list.push_back({vocab.token(kw.token), kw.score});
    out[std::to_string(c)] = std::move(list);
  }
  return out;
}

namespace {

// Loss through the tied vocabulary head for one representation. Adds
// weight * d/d(embed, proj) of the head into grad and returns d/dh.
double head_loss(const EncoderParams& params, const Vector& h, std::span<const TokenId> keywords,
                 EncoderGrad* grad, double weight, Vector* grad_h) {
  if (keywords.empty()) throw ContractError("classification_loss: empty keyword set");
  const Vector u = params.proj.transpose() * h;
  const Vector z = params.embed * u;
  const auto vocab_size = static_cast<TokenId>(z.size());
  for (TokenId t : keywords) {
    if (t < 0 || t >= vocab_size) throw ContractError("classification_loss: keyword id outside the vocabulary");
  }

  const double zmax = z.maxCoeff();
  const double log_all = zmax + std::log((z.array() - zmax).exp().sum());
  double kw_max = -std::numeric_limits<double>::infinity();
  for (TokenId t : keywords) kw_max = std::max(kw_max, z(t));
  double kw_sum = 0.0;
  for (TokenId t : keywords) kw_sum += std::exp(z(t) - kw_max);
  const double log_kw = kw_max + std::log(kw_sum);
  const double loss = log_all - log_kw + std::log(static_cast<double>(keywords.size()));

  if (grad) {
    Vector dz = (z.array() - log_all).exp().matrix();
    for (TokenId t : keywords) dz(t) -= std::exp(z(t) - log_kw);
    dz *= weight;
    grad->embed += dz * u.transpose();
    const Vector du = params.embed.transpose() * dz;
    grad->proj += h * du.transpose();
    *grad_h = params.proj * du;
  }
  return loss;
}

}  // namespace

double classification_loss(const EncoderParams& params, const EncoderInput& input,
                           std::span<const TokenId> keywords, EncoderGrad* grad, double weight) {
  if (params.mode != EncoderMode::MaskSlot) {
    throw ContractError("classification_loss requires the encoder in mask-slot mode");
  }
  const EncodedBatch batch = forward_batch(params, {input});
  const Vector h = batch.reps.row(0).transpose();
  Vector grad_h;
  const double loss = head_loss(params, h, keywords, grad, weight, &grad_h);
  if (grad) {
    Matrix grad_reps = grad_h.transpose();
    backward_batch(params, batch, grad_reps, *grad);
  }
  return loss;
}

void ClassifierConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("classifier learning rate must be > 0");
  if (batch_size < 1) throw ConfigError("classifier batch size must be >= 1");
  if (epochs < 0) throw ConfigError("classifier epochs must be >= 0");
  if (!(bias_lr_scale >= 0.0) || !std::isfinite(bias_lr_scale)) {
    throw ConfigError("classifier bias learning-rate scale must be finite and >= 0");
  }
}

void train_classifier(EncoderParams& params, const Corpus& corpus, const ClusterSet& clusters,
                      const VerbalizerMap& verbalizer, const BoundTemplate& tmpl, const ClassifierConfig& config) {
  config.validate();
  if (clusters.document_count() == 0) throw DataError("train_classifier: no pseudo-labelled documents");
  if (verbalizer.keywords.size() != clusters.clusters.size()) {
    throw ContractError("train_classifier: verbalizer and cluster set differ in size");
  }
  params.mode = EncoderMode::MaskSlot;

  struct Example {
    int doc;
    std::size_t cluster;
  };
  std::vector<Example> examples;
  for (std::size_t c = 0; c < clusters.clusters.size(); ++c) {
    for (int doc : clusters.clusters[c]) examples.push_back({doc, c});
  }
  std::vector<std::vector<TokenId>> keyword_ids;
  for (std::size_t c = 0; c < clusters.clusters.size(); ++c) keyword_ids.push_back(verbalizer.ids(c));

  const auto n = examples.size();
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng = make_rng({config.seed, 7, static_cast<std::uint64_t>(epoch)});
    std::shuffle(examples.begin(), examples.end(), rng);
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t stop = std::min(n, start + batch_size);
      std::vector<int> ids;
      for (std::size_t i = start; i < stop; ++i) ids.push_back(examples[i].doc);
      const EncodedBatch batch = forward_batch(params, make_inputs(corpus, ids, tmpl));

      const double weight = 1.0 / static_cast<double>(stop - start);
      EncoderGrad grad = EncoderGrad::zeros_like(params);
      Matrix grad_reps(batch.reps.rows(), batch.reps.cols());
      for (std::size_t i = start; i < stop; ++i) {
        const auto row = static_cast<Eigen::Index>(i - start);
        Vector grad_h;
        const double loss = head_loss(params, batch.reps.row(row).transpose(), keyword_ids[examples[i].cluster],
                                      &grad, weight, &grad_h);
        if (!std::isfinite(loss)) {
          throw NumericalError("train_classifier: non-finite loss at epoch " + std::to_string(epoch));
        }
        grad_reps.row(row) = grad_h.transpose();
      }
      backward_batch(params, batch, grad_reps, grad);
      grad.mask_bias *= config.bias_lr_scale;
      sgd_step(params, grad, config.learning_rate);
    }
    if (!params.all_finite()) {
      throw NumericalError("train_classifier: parameters diverged during epoch " + std::to_string(epoch));
    }
  }
}

}  // namespace ceilkit
