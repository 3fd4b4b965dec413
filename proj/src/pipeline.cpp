#include "ceilkit/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <string>

#include "ceilkit/error.hpp"
#include "ceilkit/random.hpp"

namespace ceilkit {

bool IterationRecord::operator==(const IterationRecord& o) const {
  auto same_history = [&] {
    if (loss_history.size() != o.loss_history.size()) return false;
    for (std::size_t i = 0; i < loss_history.size(); ++i) {
      const auto& a = loss_history[i];
      const auto& b = o.loss_history[i];
      if (a.epoch != b.epoch || a.contrast != b.contrast || a.cluster != b.cluster || a.category != b.category) {
        return false;
      }
    }
    return true;
  };
  return iteration == o.iteration && mode == o.mode && clusters_raw == o.clusters_raw &&
         clusters_filtered == o.clusters_filtered && clusters_aggregated == o.clusters_aggregated &&
         documents_supervised == o.documents_supervised && assignments == o.assignments && same_history() &&
         keywords == o.keywords;
}

RunInputs load_run_inputs(const CeilConfig& config) {
  RunInputs inputs;
  if (!config.base_vectors.empty()) {
    inputs.base = std::make_shared<const PrecomputedBase>(PrecomputedBase::load(config.base_vectors));
  }
  if (!config.stopwords.empty()) {
    std::ifstream in(config.stopwords);
    if (!in) throw DataError("cannot open stopword file " + config.stopwords);
    std::string word;
    while (in >> word) {
      for (auto& w : tokenize(word)) inputs.stopwords.push_back(std::move(w));
    }
  }
  return inputs;
}

Workspace prepare_workspace(const Corpus& corpus, const CeilConfig& config, const RunInputs& inputs) {
  if (corpus.empty()) throw DataError("corpus is empty");
  Workspace ws;
  ws.corpus = corpus;
  ws.vocabulary = Vocabulary::build(ws.corpus, config.min_df, config.prompt.literals());
  assign_token_ids(ws.corpus, ws.vocabulary);
  ws.tmpl = BoundTemplate(config.prompt, ws.vocabulary);
  ws.excluded_keywords = ws.tmpl.literal_ids();
  for (const auto& w : inputs.stopwords) {
    if (auto id = ws.vocabulary.find(w)) ws.excluded_keywords.push_back(*id);
  }
  std::sort(ws.excluded_keywords.begin(), ws.excluded_keywords.end());
  ws.excluded_keywords.erase(std::unique(ws.excluded_keywords.begin(), ws.excluded_keywords.end()),
                             ws.excluded_keywords.end());
  if (inputs.base && inputs.base->vectors.rows() != static_cast<Eigen::Index>(ws.corpus.size())) {
    throw DataError("precomputed vectors hold " + std::to_string(inputs.base->vectors.rows()) +
                    " rows but the corpus has " + std::to_string(ws.corpus.size()) + " documents");
  }
  return ws;
}

EncoderParams initial_encoder(const Workspace& ws, const CeilConfig& config, const RunInputs& inputs) {
  EncoderDims dims;
  dims.vocab_size = ws.vocabulary.size();
  dims.embed_dim = inputs.base ? static_cast<int>(inputs.base->vectors.cols()) : config.embed_dim;
  dims.rep_dim = config.rep_dim;
  EncoderParams params = init_params(mix_seed({config.seed, 0xe0}), dims, EncoderMode::MeanPool);
  params.base = inputs.base;
  return params;
}

namespace {

SoftAssignment as_soft_assignment(Matrix probabilities) {
  probabilities = probabilities.array().max(std::numeric_limits<double>::min()).matrix();
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) probabilities.row(i) /= probabilities.row(i).sum();
  return {std::move(probabilities)};
}

// Column-centred, unit-length rows.
Matrix standardized(const Matrix& m) {
  Matrix out = m.rowwise() - m.colwise().mean();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0) out.row(i) /= norm;
  }
  return out;
}

}  // namespace

ClusterResult run_backend(const Workspace& ws, EncoderParams& encoder, const CeilConfig& config, std::uint64_t seed,
                          Matrix* reps) {
  ClusterResult result;
  Matrix local;
  Matrix& out = reps ? *reps : local;
  switch (config.backend) {
    case Backend::Cdcc: {
      TrainConfig train = config.train;
      train.seed = seed;
      result = cdcc_train(ws.corpus, encoder, ws.tmpl, train, config.k);
      out = encode_corpus(encoder, ws.corpus, ws.tmpl);
      break;
    }
    case Backend::Gmm: {
      // Raw representations share a large common offset and sit far below
      // the variance floor.
      out = standardized(encode_corpus(encoder, ws.corpus, ws.tmpl));
      GmmResult g = gmm_fit(out, config.k, seed);
      result.q = as_soft_assignment(std::move(g.responsibilities));
      result.centroids = Centroids{std::move(g.means)};
      break;
    }
    case Backend::KMeans: {
      out = encode_corpus(encoder, ws.corpus, ws.tmpl);
      KMeansResult km = kmeans(out, config.k, seed);
      result.centroids = Centroids{std::move(km.centroids)};
      result.q = soft_assign(out, result.centroids, config.train.weights.alpha);
      break;
    }
  }
  result.assignments = hard_assign(result.q);
  return result;
}

ClusterResult cluster_once(const Corpus& corpus, const CeilConfig& config, const RunInputs& inputs) {
  config.validate();
  const Workspace ws = prepare_workspace(corpus, config, inputs);
  EncoderParams encoder = initial_encoder(ws, config, inputs);
  return run_backend(ws, encoder, config, mix_seed({config.seed, 0}));
}

CeilRun run_ceil(const Corpus& corpus, const CeilConfig& config, const RunInputs& inputs, const RunHooks& hooks) {
  config.validate();
  const Workspace ws = prepare_workspace(corpus, config, inputs);

  CeilState state;
  if (hooks.resume) {
    state = *hooks.resume;
    if (state.encoder.vocab_size() != ws.vocabulary.size()) {
      throw DataError("checkpoint vocabulary size does not match the corpus");
    }
    if (state.next_iteration < 0 || state.next_iteration > config.iterations ||
        state.records.size() != static_cast<std::size_t>(state.next_iteration)) {
      throw DataError("checkpoint iteration count is inconsistent with the config");
    }
    state.encoder.base = inputs.base;
  } else {
    state.encoder = initial_encoder(ws, config, inputs);
  }

  for (int t = state.next_iteration; t < config.iterations; ++t) {
    EncoderParams& encoder = state.encoder;
    encoder.mode = t == 0 ? EncoderMode::MeanPool : EncoderMode::MaskSlot;
    const std::uint64_t seed = mix_seed({config.seed, static_cast<std::uint64_t>(t) + 1});

    IterationRecord record;
    record.iteration = t;
    record.mode = encoder.mode;

    Matrix reps;
    ClusterResult result = run_backend(ws, encoder, config, seed, &reps);
    const ClusterSet raw = ClusterSet::from_assignments(result.assignments, config.k);
    const Matrix space = standardized(reps);
    const ClusterSet filtered = filter_all(raw, space, config.beta);
    const ClusterSet aggregated = aggregate(filtered, space, config.delta);
    const VerbalizerMap verbalizer =
        verbalize(aggregated, ws.corpus, ws.vocabulary, config.n_keywords, ws.excluded_keywords);

    ClassifierConfig classifier = config.classifier;
    classifier.seed = mix_seed({seed, 0xc1});
    train_classifier(encoder, ws.corpus, aggregated, verbalizer, ws.tmpl, classifier);

    record.clusters_raw = raw.nonempty_count();
    record.clusters_filtered = filtered.clusters.size();
    record.clusters_aggregated = aggregated.clusters.size();
    record.documents_supervised = aggregated.document_count();
    record.assignments = result.assignments;
    record.loss_history = result.history;
    for (const auto& list : verbalizer.keywords) {
      auto& out = record.keywords.emplace_back();
      for (const auto& kw : list) out.emplace_back(ws.vocabulary.token(kw.token), kw.score);
    }

    state.last = std::move(result);
    state.records.push_back(std::move(record));
    state.next_iteration = t + 1;
    if (hooks.on_iteration) hooks.on_iteration(state);
  }

  CeilRun run;
  run.result = state.last;
  run.records = state.records;
  run.vocabulary = ws.vocabulary;
  run.encoder = state.encoder;
  if (ws.corpus.has_gold_labels()) {
    const std::vector<int> gold = ws.corpus.gold_labels();
    for (const auto& record : run.records) run.metrics.push_back(evaluate(record.assignments, gold));
  }
  return run;
}

}  // namespace ceilkit
