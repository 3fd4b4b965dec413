#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ceilkit/corpus.hpp"
#include "ceilkit/types.hpp"

namespace ceilkit {

// Prompt wrapper with one input slot "[X]" and one mask slot "[MASK]",
// e.g. "[X] This topic is about [MASK] .". Literal words are lowercased and
// kept verbatim otherwise, so punctuation literals such as "." survive.
class PromptTemplate {
 public:
  enum class SlotKind { Literal, Input, Mask };
  struct Segment {
    SlotKind kind = SlotKind::Literal;
    std::string literal;
    bool operator==(const Segment&) const = default;
  };

  static PromptTemplate parse(std::string_view text);

  std::string str() const;
  const std::vector<Segment>& segments() const { return segments_; }
  std::vector<std::string> literals() const;
  bool operator==(const PromptTemplate&) const = default;

 private:
  std::vector<Segment> segments_;
};

struct PromptedTokens {
  std::vector<TokenId> ids;
  std::size_t mask_position = 0;
};

// A template with its literal words resolved against one vocabulary.
class BoundTemplate {
 public:
  BoundTemplate() = default;
  BoundTemplate(const PromptTemplate& tmpl, const Vocabulary& vocab);

  PromptedTokens apply(std::span<const TokenId> tokens) const;
  // Token ids of the literal words; the verbalizer never emits these.
  const std::vector<TokenId>& literal_ids() const { return literal_ids_; }

 private:
  static constexpr TokenId kInputSlot = -1;
  std::vector<TokenId> pattern_;
  std::vector<TokenId> literal_ids_;
};

PromptedTokens apply_template(const PromptTemplate& tmpl, const Vocabulary& vocab,
                              std::span<const TokenId> tokens);

enum class EncoderMode { MeanPool, MaskSlot };

std::string_view to_string(EncoderMode mode);

// Fixed per-document vectors produced outside this library. When attached to
// EncoderParams they replace the mean token embedding as the encoder context.
struct PrecomputedBase {
  Matrix vectors;  // N x d, row i belongs to document i

  /// Text format: header "N d" followed by N rows of d numbers.
  static PrecomputedBase load(const std::filesystem::path& path);
  static PrecomputedBase read(std::istream& in);
  void write(std::ostream& out) const;
};

struct EncoderDims {
  std::size_t vocab_size = 0;
  int embed_dim = 64;
  int rep_dim = 64;
};

// Trainable encoder. With c the context vector of an input,
//   MeanPool: h = proj * c
//   MaskSlot: h = tanh(proj * c + mask_bias)
// where c is the mean embedding of the prompted tokens, or the document's row
// of `base` when one is attached. The vocabulary head is tied to `embed`.
struct EncoderParams {
  Matrix embed;       // |V| x d
  Matrix proj;        // r x d
  Vector mask_bias;   // r
  EncoderMode mode = EncoderMode::MeanPool;
  std::shared_ptr<const PrecomputedBase> base;

  std::size_t vocab_size() const { return static_cast<std::size_t>(embed.rows()); }
  int embed_dim() const { return static_cast<int>(embed.cols()); }
  int rep_dim() const { return static_cast<int>(proj.rows()); }
  bool all_finite() const;
};

/// embed and proj uniform in [-0.5/d, 0.5/d], mask_bias zero.
EncoderParams init_params(std::uint64_t seed, const EncoderDims& dims, EncoderMode mode);

struct EncoderGrad {
  Matrix embed;
  Matrix proj;
  Vector mask_bias;

  static EncoderGrad zeros_like(const EncoderParams& params);
  void scale(double factor);
};

/// params -= learning_rate * grad
void sgd_step(EncoderParams& params, const EncoderGrad& grad, double learning_rate);

// One encoder input: prompted tokens, plus the document id used to look up a
// precomputed base vector.
struct EncoderInput {
  std::vector<TokenId> prompted;
  int doc_id = 0;
};

Vector encode(const EncoderParams& params, std::span<const TokenId> prompted);
Vector encode(const EncoderParams& params, const EncoderInput& input);

// Forward pass over a batch with the intermediates needed for backprop.
struct EncodedBatch {
  std::vector<EncoderInput> inputs;
  Matrix contexts;  // B x d
  Matrix reps;      // B x r
};

EncodedBatch forward_batch(const EncoderParams& params, std::vector<EncoderInput> inputs);

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(reps).
void backward_batch(const EncoderParams& params, const EncodedBatch& batch, const Matrix& grad_reps,
                    EncoderGrad& grad);

/// Inputs for the given documents. With `augment`, each document yields two
/// consecutive rows (draw 0 and draw 1) as a contrastive positive pair.
std::vector<EncoderInput> make_inputs(const Corpus& corpus, std::span<const int> doc_ids,
                                      const BoundTemplate& tmpl, const AugmentParams* augment = nullptr);

Matrix encode_batch(const EncoderParams& params, const Corpus& corpus, std::span<const int> doc_ids,
                    const BoundTemplate& tmpl, const AugmentParams* augment = nullptr);
Matrix encode_corpus(const EncoderParams& params, const Corpus& corpus, const BoundTemplate& tmpl);

/// logit[t] = embed[t] . (proj^T h). MaskSlot mode only.
Vector vocab_logits(const EncoderParams& params, const Vector& h);
Vector softmax(const Vector& logits);

// Binary checkpoint block; bit-exact round trip.
void write_encoder(std::ostream& out, const EncoderParams& params);
EncoderParams read_encoder(std::istream& in);

}  // namespace ceilkit
