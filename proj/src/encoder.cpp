#include "ceilkit/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "binary_io.hpp"
#include "ceilkit/error.hpp"
#include "ceilkit/random.hpp"

namespace ceilkit {

namespace {

constexpr std::string_view kInputMarker = "[X]";
constexpr std::string_view kMaskMarker = "[MASK]";
constexpr std::uint32_t kEncoderTag = 0x454e4331;  // "ENC1"

std::string lowercase(std::string s) {
  for (auto& c : s) {
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

TokenId clamp_token(TokenId t, std::size_t vocab_size) {
  return (t < 0 || static_cast<std::size_t>(t) >= vocab_size) ? Vocabulary::kUnk : t;
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string_view text) {
  PromptTemplate tmpl;
  std::istringstream in{std::string(text)};
  std::string word;
  int inputs = 0;
  int masks = 0;
  while (in >> word) {
    if (word == kInputMarker) {
      tmpl.segments_.push_back({SlotKind::Input, {}});
      ++inputs;
    } else if (word == kMaskMarker) {
      tmpl.segments_.push_back({SlotKind::Mask, {}});
      ++masks;
    } else {
      tmpl.segments_.push_back({SlotKind::Literal, lowercase(word)});
    }
  }
  if (inputs != 1 || masks != 1) {
    throw ConfigError("prompt template \"" + std::string(text) +
                      "\" must contain exactly one [X] and exactly one [MASK]");
  }
  return tmpl;
}

std::string PromptTemplate::str() const {
  std::string out;
  for (const auto& seg : segments_) {
    if (!out.empty()) out.push_back(' ');
    switch (seg.kind) {
      case SlotKind::Input: out += kInputMarker; break;
      case SlotKind::Mask: out += kMaskMarker; break;
      case SlotKind::Literal: out += seg.literal; break;
    }
  }
  return out;
}

std::vector<std::string> PromptTemplate::literals() const {
  std::vector<std::string> out;
  for (const auto& seg : segments_) {
    if (seg.kind == SlotKind::Literal) out.push_back(seg.literal);
  }
  return out;
}

BoundTemplate::BoundTemplate(const PromptTemplate& tmpl, const Vocabulary& vocab) {
  for (const auto& seg : tmpl.segments()) {
    switch (seg.kind) {
      case PromptTemplate::SlotKind::Input: pattern_.push_back(kInputSlot); break;
      case PromptTemplate::SlotKind::Mask: pattern_.push_back(Vocabulary::kMask); break;
      case PromptTemplate::SlotKind::Literal: {
        const TokenId id = vocab.id(seg.literal);
        pattern_.push_back(id);
        if (!vocab.is_special(id)) literal_ids_.push_back(id);
        break;
      }
    }
  }
  std::sort(literal_ids_.begin(), literal_ids_.end());
  literal_ids_.erase(std::unique(literal_ids_.begin(), literal_ids_.end()), literal_ids_.end());
}

PromptedTokens BoundTemplate::apply(std::span<const TokenId> tokens) const {
  PromptedTokens out;
  out.ids.reserve(pattern_.size() + tokens.size());
  for (TokenId p : pattern_) {
    if (p == kInputSlot) {
      out.ids.insert(out.ids.end(), tokens.begin(), tokens.end());
    } else {
      if (p == Vocabulary::kMask) out.mask_position = out.ids.size();
      out.ids.push_back(p);
    }
  }
  return out;
}

PromptedTokens apply_template(const PromptTemplate& tmpl, const Vocabulary& vocab,
                              std::span<const TokenId> tokens) {
  return BoundTemplate(tmpl, vocab).apply(tokens);
}

std::string_view to_string(EncoderMode mode) {
  return mode == EncoderMode::MeanPool ? "mean_pool" : "mask_slot";
}

PrecomputedBase PrecomputedBase::read(std::istream& in) {
  long long n = 0;
  long long d = 0;
  if (!(in >> n >> d) || n < 1 || d < 1) {
    throw DataError("precomputed vectors: expected header \"N d\" with N, d >= 1");
  }
  PrecomputedBase base;
  base.vectors.resize(n, d);
  for (long long i = 0; i < n; ++i) {
    for (long long j = 0; j < d; ++j) {
      double v = 0.0;
      if (!(in >> v)) {
        throw DataError("precomputed vectors: row " + std::to_string(i) + " is short or malformed");
      }
      if (!std::isfinite(v)) {
        throw DataError("precomputed vectors: non-finite value in row " + std::to_string(i));
      }
      base.vectors(i, j) = v;
    }
  }
  return base;
}

PrecomputedBase PrecomputedBase::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open precomputed vectors file " + path.string());
  return read(in);
}

void PrecomputedBase::write(std::ostream& out) const {
  out << vectors.rows() << ' ' << vectors.cols() << '\n';
  const auto old_precision = out.precision(17);
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
      if (j) out << ' ';
      out << vectors(i, j);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

bool EncoderParams::all_finite() const {
  return embed.allFinite() && proj.allFinite() && mask_bias.allFinite();
}

EncoderParams init_params(std::uint64_t seed, const EncoderDims& dims, EncoderMode mode) {
  if (dims.embed_dim < 1 || dims.rep_dim < 1) {
    throw ConfigError("encoder dimensions must be >= 1");
  }
  if (dims.vocab_size < 2) throw ConfigError("encoder vocabulary must hold at least the special tokens");
  Rng rng = make_rng({seed, 0xe1c0deULL});
  const double bound = 0.5 / dims.embed_dim;
  std::uniform_real_distribution<double> uniform(-bound, bound);

  EncoderParams params;
  params.embed.resize(static_cast<Eigen::Index>(dims.vocab_size), dims.embed_dim);
  params.proj.resize(dims.rep_dim, dims.embed_dim);
  for (Eigen::Index i = 0; i < params.embed.size(); ++i) params.embed.data()[i] = uniform(rng);
  for (Eigen::Index i = 0; i < params.proj.size(); ++i) params.proj.data()[i] = uniform(rng);
  params.mask_bias = Vector::Zero(dims.rep_dim);
  params.mode = mode;
  return params;
}

EncoderGrad EncoderGrad::zeros_like(const EncoderParams& params) {
  return {Matrix::Zero(params.embed.rows(), params.embed.cols()),
          Matrix::Zero(params.proj.rows(), params.proj.cols()),
          Vector::Zero(params.mask_bias.size())};
}

void EncoderGrad::scale(double factor) {
  embed *= factor;
  proj *= factor;
  mask_bias *= factor;
}

void sgd_step(EncoderParams& params, const EncoderGrad& grad, double learning_rate) {
  params.embed -= learning_rate * grad.embed;
  params.proj -= learning_rate * grad.proj;
  params.mask_bias -= learning_rate * grad.mask_bias;
}

namespace {

void fill_context(const EncoderParams& params, const EncoderInput& input, Eigen::Ref<Eigen::RowVectorXd> out) {
  if (params.base) {
    const auto& vectors = params.base->vectors;
    if (input.doc_id < 0 || input.doc_id >= vectors.rows()) {
      throw DataError("no precomputed vector for document " + std::to_string(input.doc_id));
    }
    if (vectors.cols() != params.embed.cols()) {
      throw ContractError("precomputed vector width differs from the encoder embedding width");
    }
    out = vectors.row(input.doc_id);
    return;
  }
  if (input.prompted.empty()) throw ContractError("encode: empty prompted input");
  // Summed in id order so the result is bitwise independent of token order.
  std::vector<TokenId> ids(input.prompted);
  const std::size_t v = params.vocab_size();
  for (auto& t : ids) t = clamp_token(t, v);
  std::sort(ids.begin(), ids.end());
  out.setZero();
  for (TokenId t : ids) out += params.embed.row(t);
  out /= static_cast<double>(input.prompted.size());
}

void apply_head(const EncoderParams& params, const Matrix& contexts, Matrix& reps) {
  reps = contexts * params.proj.transpose();
  if (params.mode == EncoderMode::MaskSlot) {
    reps.rowwise() += params.mask_bias.transpose();
    reps = reps.array().tanh().matrix();
  }
}

}  // namespace

Vector encode(const EncoderParams& params, const EncoderInput& input) {
  Matrix context(1, params.embed.cols());
  fill_context(params, input, context.row(0));
  Matrix rep;
  apply_head(params, context, rep);
  return rep.row(0).transpose();
}

Vector encode(const EncoderParams& params, std::span<const TokenId> prompted) {
  if (params.base) throw ContractError("encode: token input given to an encoder with a precomputed base");
  return encode(params, EncoderInput{std::vector<TokenId>(prompted.begin(), prompted.end()), 0});
}

EncodedBatch forward_batch(const EncoderParams& params, std::vector<EncoderInput> inputs) {
  EncodedBatch batch;
  batch.inputs = std::move(inputs);
  batch.contexts.resize(static_cast<Eigen::Index>(batch.inputs.size()), params.embed.cols());
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    fill_context(params, batch.inputs[i], batch.contexts.row(static_cast<Eigen::Index>(i)));
  }
  apply_head(params, batch.contexts, batch.reps);
  return batch;
}

void backward_batch(const EncoderParams& params, const EncodedBatch& batch, const Matrix& grad_reps,
                    EncoderGrad& grad) {
  Matrix g = grad_reps;
  if (params.mode == EncoderMode::MaskSlot) {
    g.array() *= (1.0 - batch.reps.array().square());
    grad.mask_bias += g.colwise().sum().transpose();
  }
  grad.proj += g.transpose() * batch.contexts;
  if (params.base) return;

  const Matrix grad_context = g * params.proj;
  const std::size_t v = params.vocab_size();
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    const auto& prompted = batch.inputs[i].prompted;
    const double w = 1.0 / static_cast<double>(prompted.size());
    for (TokenId t : prompted) {
      grad.embed.row(clamp_token(t, v)) += w * grad_context.row(static_cast<Eigen::Index>(i));
    }
  }
}

std::vector<EncoderInput> make_inputs(const Corpus& corpus, std::span<const int> doc_ids,
                                      const BoundTemplate& tmpl, const AugmentParams* augment) {
  std::vector<EncoderInput> inputs;
  inputs.reserve(doc_ids.size() * (augment ? 2 : 1));
  for (int id : doc_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= corpus.size()) {
      throw ContractError("document id " + std::to_string(id) + " outside the corpus");
    }
    const auto& tokens = corpus.documents[static_cast<std::size_t>(id)].tokens;
    if (augment) {
      for (int draw = 0; draw < 2; ++draw) {
        inputs.push_back({tmpl.apply(ceilkit::augment(tokens, *augment, id, draw)).ids, id});
      }
    } else {
      inputs.push_back({tmpl.apply(tokens).ids, id});
    }
  }
  return inputs;
}

Matrix encode_batch(const EncoderParams& params, const Corpus& corpus, std::span<const int> doc_ids,
                    const BoundTemplate& tmpl, const AugmentParams* augment) {
  return forward_batch(params, make_inputs(corpus, doc_ids, tmpl, augment)).reps;
}

Matrix encode_corpus(const EncoderParams& params, const Corpus& corpus, const BoundTemplate& tmpl) {
  std::vector<int> ids(corpus.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  return encode_batch(params, corpus, ids, tmpl);
}

Vector vocab_logits(const EncoderParams& params, const Vector& h) {
  if (params.mode != EncoderMode::MaskSlot) {
    throw ContractError("vocab_logits requires the encoder in mask-slot mode");
  }
  if (h.size() != params.proj.rows()) throw ContractError("vocab_logits: representation width mismatch");
  const Vector u = params.proj.transpose() * h;
  return params.embed * u;
}

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

void write_encoder(std::ostream& out, const EncoderParams& params) {
  detail::write_pod<std::uint32_t>(out, kEncoderTag);
  detail::write_pod<std::uint8_t>(out, params.mode == EncoderMode::MeanPool ? 0 : 1);
  detail::write_matrix(out, params.embed);
  detail::write_matrix(out, params.proj);
  detail::write_vector(out, params.mask_bias);
}

EncoderParams read_encoder(std::istream& in) {
  if (detail::read_pod<std::uint32_t>(in) != kEncoderTag) {
    throw DataError("checkpoint corrupt: encoder block tag mismatch");
  }
  EncoderParams params;
  const auto mode = detail::read_pod<std::uint8_t>(in);
  if (mode > 1) throw DataError("checkpoint corrupt: unknown encoder mode");
  params.mode = mode == 0 ? EncoderMode::MeanPool : EncoderMode::MaskSlot;
  params.embed = detail::read_matrix(in);
  params.proj = detail::read_matrix(in);
  params.mask_bias = detail::read_vector(in);
  if (params.proj.cols() != params.embed.cols() || params.mask_bias.size() != params.proj.rows()) {
    throw DataError("checkpoint corrupt: inconsistent encoder dimensions");
  }
  return params;
}

}  // namespace ceilkit
