#include "ceilkit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ceilkit/error.hpp"
#include "ceilkit/random.hpp"

namespace ceilkit {

using json = nlohmann::json;

bool Corpus::has_gold_labels() const {
  return !documents.empty() &&
         std::all_of(documents.begin(), documents.end(),
                     [](const Document& d) { return d.gold_label.has_value(); });
}

std::vector<int> Corpus::gold_labels() const {
  std::vector<int> labels;
  labels.reserve(documents.size());
  for (const auto& doc : documents) {
    if (!doc.gold_label) {
      throw DataError("document " + std::to_string(doc.id) + " has no gold label");
    }
    labels.push_back(*doc.gold_label);
  }
  return labels;
}

Corpus Corpus::without_labels() const {
  Corpus out = *this;
  out.label_names.clear();
  for (auto& doc : out.documents) doc.gold_label.reset();
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && (std::isspace(c) || std::ispunct(c))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else if (c < 0x80 && std::iscntrl(c)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

namespace {

Corpus build_corpus(const std::vector<std::string>& texts,
                    const std::vector<std::optional<std::string>>& labels,
                    const std::vector<std::string>& origins, std::vector<std::string>* warnings) {
  if (!labels.empty() && labels.size() != texts.size()) {
    throw ContractError("make_corpus: labels and texts differ in length");
  }
  Corpus corpus;
  std::map<std::string, int> label_ids;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto words = tokenize(texts[i]);
    if (words.empty()) {
      if (warnings) {
        const std::string where = i < origins.size() ? origins[i] : "record " + std::to_string(i + 1);
        warnings->push_back(where + ": empty text after tokenization, record skipped");
      }
      continue;
    }
    Document doc;
    doc.id = static_cast<int>(corpus.documents.size());
    doc.text = texts[i];
    doc.words = std::move(words);
    if (!labels.empty() && labels[i]) {
      auto [it, inserted] = label_ids.emplace(*labels[i], static_cast<int>(corpus.label_names.size()));
      if (inserted) corpus.label_names.push_back(*labels[i]);
      doc.gold_label = it->second;
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace

Corpus make_corpus(const std::vector<std::string>& texts,
                   const std::vector<std::optional<std::string>>& labels,
                   std::vector<std::string>* warnings) {
  return build_corpus(texts, labels, {}, warnings);
}

Corpus read_jsonl(std::istream& in, std::vector<std::string>* warnings) {
  std::vector<std::string> texts;
  std::vector<std::optional<std::string>> labels;
  std::vector<std::string> origins;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
      throw DataError("line " + std::to_string(line_no) + ": missing string field \"text\"");
    }
    texts.push_back(record["text"].get<std::string>());
    origins.push_back("line " + std::to_string(line_no));
    std::optional<std::string> label;
    if (record.contains("label") && !record["label"].is_null()) {
      const auto& l = record["label"];
      if (l.is_string()) {
        label = l.get<std::string>();
      } else if (l.is_number_integer()) {
        label = std::to_string(l.get<long long>());
      } else {
        throw DataError("line " + std::to_string(line_no) + ": \"label\" must be a string or integer");
      }
    }
    labels.push_back(std::move(label));
  }
  return build_corpus(texts, labels, origins, warnings);
}

Corpus load_jsonl(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return read_jsonl(in, warnings);
}

void write_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.documents) {
    json record;
    record["text"] = doc.text;
    if (doc.gold_label) {
      const auto idx = static_cast<std::size_t>(*doc.gold_label);
      if (idx < corpus.label_names.size()) {
        record["label"] = corpus.label_names[idx];
      } else {
        record["label"] = *doc.gold_label;
      }
    }
    out << record.dump() << '\n';
  }
}

TokenId Vocabulary::push(std::string token, int doc_freq) {
  const auto id = static_cast<TokenId>(id_to_token_.size());
  token_to_id_.emplace(token, id);
  id_to_token_.push_back(std::move(token));
  doc_freq_.push_back(doc_freq);
  return id;
}

Vocabulary Vocabulary::build(const Corpus& corpus, int min_df, const std::vector<std::string>& literals) {
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  if (min_df < 1) throw ConfigError("min_df must be >= 1");

  std::map<std::string, int> df;
  for (const auto& doc : corpus.documents) {
    std::set<std::string_view> seen(doc.words.begin(), doc.words.end());
    for (auto w : seen) ++df[std::string(w)];
  }

  Vocabulary vocab;
  vocab.push(std::string(kMaskToken), 0);
  vocab.push(std::string(kUnkToken), 0);
  for (const auto& [token, count] : df) {
    if (count >= min_df && token != kMaskToken && token != kUnkToken) vocab.push(token, count);
  }
  if (vocab.size() == 2) {
    throw DataError("no token reaches min_df=" + std::to_string(min_df) + "; vocabulary would be empty");
  }
  for (const auto& lit : literals) {
    if (!vocab.find(lit)) vocab.push(lit, 0);
  }
  return vocab;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) return id_to_token_[kUnk];
  return id_to_token_[static_cast<std::size_t>(id)];
}

int Vocabulary::doc_freq(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= doc_freq_.size()) return 0;
  return doc_freq_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& words) const {
  std::vector<TokenId> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(id(w));
  return ids;
}

void assign_token_ids(Corpus& corpus, const Vocabulary& vocab) {
  for (auto& doc : corpus.documents) doc.tokens = vocab.encode(doc.words);
}

void AugmentParams::validate() const {
  if (!(deletion_prob >= 0.0 && deletion_prob < 1.0)) {
    throw ConfigError("deletion_prob must lie in [0, 1)");
  }
  if (swap_count < 0) throw ConfigError("swap_count must be >= 0");
}

std::vector<TokenId> augment(std::span<const TokenId> tokens, const AugmentParams& params, int doc_id,
                             int draw) {
  if (tokens.empty()) throw ContractError("augment: empty token list");
  Rng rng = make_rng({params.seed, static_cast<std::uint64_t>(doc_id), static_cast<std::uint64_t>(draw)});
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<TokenId> out;
  out.reserve(tokens.size());
  if (params.deletion_prob > 0.0) {
    for (TokenId t : tokens) {
      if (unit(rng) >= params.deletion_prob) out.push_back(t);
    }
    if (out.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, tokens.size() - 1);
      out.push_back(tokens[pick(rng)]);
    }
  } else {
    out.assign(tokens.begin(), tokens.end());
  }

  if (out.size() >= 2) {
    std::uniform_int_distribution<std::size_t> pos(0, out.size() - 2);
    for (int s = 0; s < params.swap_count; ++s) {
      const std::size_t i = pos(rng);
      std::swap(out[i], out[i + 1]);
    }
  }
  return out;
}

namespace {

std::string synth_word(int index, int width) {
  std::ostringstream os;
  os << 'w' << std::setw(width) << std::setfill('0') << index;
  return os.str();
}

}  // namespace

Corpus synth_corpus(const SynthParams& params) {
  if (params.k < 1) throw ConfigError("synth: k must be >= 1");
  if (params.n_per_cluster < 1) throw ConfigError("synth: n_per_cluster must be >= 1");
  if (params.tokens_per_cluster < 1) throw ConfigError("synth: tokens_per_cluster must be >= 1");
  if (params.doc_len < 1) throw ConfigError("synth: doc_len must be >= 1");
  if (!(params.noise >= 0.0 && params.noise <= 1.0)) throw ConfigError("synth: noise must lie in [0, 1]");

  const int pooled = params.k * params.tokens_per_cluster;
  const int vocab_size = params.vocab_size > 0 ? params.vocab_size : pooled;
  if (pooled > vocab_size) {
    throw ConfigError("synth: k * tokens_per_cluster (" + std::to_string(pooled) +
                      ") exceeds the requested vocabulary (" + std::to_string(vocab_size) + ")");
  }
  if (params.noise > 0.0 && vocab_size == params.tokens_per_cluster) {
    throw ConfigError("synth: noise > 0 needs at least one out-of-pool token");
  }

  const int width = static_cast<int>(std::to_string(vocab_size - 1).size());
  Rng rng = make_rng({params.seed, 0x5e7a11ULL});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> in_pool(0, params.tokens_per_cluster - 1);
  std::uniform_int_distribution<int> out_pool(0, vocab_size - params.tokens_per_cluster - 1);

  std::vector<std::string> texts;
  std::vector<std::optional<std::string>> labels;
  for (int c = 0; c < params.k; ++c) {
    const int pool_begin = c * params.tokens_per_cluster;
    for (int n = 0; n < params.n_per_cluster; ++n) {
      std::string text;
      for (int w = 0; w < params.doc_len; ++w) {
        int index;
        if (params.noise > 0.0 && unit(rng) < params.noise) {
          // Uniform over every vocabulary slot outside this cluster's pool.
          index = out_pool(rng);
          if (index >= pool_begin) index += params.tokens_per_cluster;
        } else {
          index = pool_begin + in_pool(rng);
        }
        if (!text.empty()) text.push_back(' ');
        text += synth_word(index, width);
      }
      texts.push_back(std::move(text));
      labels.emplace_back(std::to_string(c));
    }
  }
  return make_corpus(texts, labels);
}

}  // namespace ceilkit
