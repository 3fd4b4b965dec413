#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "ceilkit/corpus.hpp"
#include "ceilkit/encoder.hpp"
#include "ceilkit/refine.hpp"

namespace ceilkit {

struct Keyword {
  TokenId token = 0;
  double score = 0.0;
};

// Representative tokens per cluster, best first.
struct VerbalizerMap {
  std::vector<std::vector<Keyword>> keywords;

  std::vector<TokenId> ids(std::size_t cluster) const;
};

/// Cluster-level TF-IDF: each cluster is one pseudo-document,
///   tf(t, c) = count(t in c) / tokens(c)
///   idf(t)   = ln((1 + C) / (1 + cdf(t))) + 1
/// Special tokens and `excluded` (template literals, stopwords) never qualify.
/// Ties in score go to the lower token id.
VerbalizerMap verbalize(const ClusterSet& clusters, const Corpus& corpus, const Vocabulary& vocab, int n,
                        std::span<const TokenId> excluded = {});

nlohmann::ordered_json to_json(const VerbalizerMap& map, const Vocabulary& vocab);

/// -log of the mean mask-slot probability of the keywords. When `grad` is
/// given, weight * d(loss)/d(params) is added to it.
double classification_loss(const EncoderParams& params, const EncoderInput& input,
                           std::span<const TokenId> keywords, EncoderGrad* grad = nullptr, double weight = 1.0);

struct ClassifierConfig {
  double learning_rate = 0.5;
  int batch_size = 64;
  int epochs = 20;
  // Step multiplier for mask_bias. At the initial scale the shared bias gets
  // far larger gradients than the input path and saturates tanh.
  double bias_lr_scale = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Mini-batch SGD on the mean classification loss over every document of the
/// aggregated clusters, each labelled with its cluster's keywords. Leaves the
/// encoder in mask-slot mode.
void train_classifier(EncoderParams& params, const Corpus& corpus, const ClusterSet& clusters,
                      const VerbalizerMap& verbalizer, const BoundTemplate& tmpl, const ClassifierConfig& config);

}  // namespace ceilkit
