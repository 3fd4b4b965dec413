#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ceilkit/types.hpp"

namespace ceilkit {

struct Document {
  int id = 0;
  std::string text;
  std::vector<std::string> words;
  // Filled by assign_token_ids once a vocabulary exists.
  std::vector<TokenId> tokens;
  // Evaluation only. Nothing on the training or clustering path reads it.
  std::optional<int> gold_label;
};

struct Corpus {
  std::vector<Document> documents;
  // Dense gold label -> label text as it appeared in the source.
  std::vector<std::string> label_names;

  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }
  bool has_gold_labels() const;
  // Throws DataError unless every document carries a label.
  std::vector<int> gold_labels() const;
  Corpus without_labels() const;
};

/// Lowercases ASCII letters and splits on whitespace and ASCII punctuation,
/// dropping the punctuation. Non-ASCII bytes are kept as word characters.
std::vector<std::string> tokenize(std::string_view text);

/// Builds a corpus from raw records. Records that tokenize to nothing are
/// skipped with a warning and ids stay dense. Labels are densified in order of
/// first appearance.
Corpus make_corpus(const std::vector<std::string>& texts,
                   const std::vector<std::optional<std::string>>& labels,
                   std::vector<std::string>* warnings = nullptr);

/// Reads JSON lines with a required "text" field and an optional "label"
/// (string or integer). Throws DataError naming the line on malformed input.
Corpus load_jsonl(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);
Corpus read_jsonl(std::istream& in, std::vector<std::string>* warnings = nullptr);
void write_jsonl(const Corpus& corpus, std::ostream& out);

class Vocabulary {
 public:
  static constexpr TokenId kMask = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr std::string_view kMaskToken = "[MASK]";
  static constexpr std::string_view kUnkToken = "[UNK]";

  /// Corpus tokens with doc_freq >= min_df, sorted, after the two special
  /// slots. `literals` (prompt-template words) are appended with doc_freq 0
  /// when the corpus does not already provide them.
  static Vocabulary build(const Corpus& corpus, int min_df,
                          const std::vector<std::string>& literals = {});

  std::size_t size() const { return id_to_token_.size(); }
  std::optional<TokenId> find(std::string_view token) const;
  TokenId id(std::string_view token) const;  // UNK when absent
  const std::string& token(TokenId id) const;
  int doc_freq(TokenId id) const;
  bool is_special(TokenId id) const { return id == kMask || id == kUnk; }
  std::vector<TokenId> encode(const std::vector<std::string>& words) const;
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::vector<int> doc_freq_;
  std::unordered_map<std::string, TokenId> token_to_id_;

  TokenId push(std::string token, int doc_freq);
};

inline Vocabulary build_vocabulary(const Corpus& corpus, int min_df) {
  return Vocabulary::build(corpus, min_df);
}

/// Fills Document::tokens from Document::words.
void assign_token_ids(Corpus& corpus, const Vocabulary& vocab);

struct AugmentParams {
  double deletion_prob = 0.1;
  int swap_count = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Random deletion (one survivor forced) followed by random adjacent swaps.
/// The output depends only on (params.seed, doc_id, draw).
std::vector<TokenId> augment(std::span<const TokenId> tokens, const AugmentParams& params,
                             int doc_id, int draw);

struct SynthParams {
  int k = 4;
  int n_per_cluster = 50;
  int tokens_per_cluster = 20;
  int doc_len = 8;
  double noise = 0.0;
  std::uint64_t seed = 0;
  // 0 selects exactly k * tokens_per_cluster. Larger values add words that
  // belong to no pool and only appear as noise.
  int vocab_size = 0;
};

/// Topic-pool generator with known gold labels. Documents are emitted
/// cluster-major (all of cluster 0, then cluster 1, ...).
Corpus synth_corpus(const SynthParams& params);

}  // namespace ceilkit
