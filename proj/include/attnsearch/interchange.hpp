//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// On-disk formats shared with the model pipeline.
//
//   attention records  JSON lines, one sentence per line:
//     {"doc_id":"d1","sent_id":0,"words":["drop","payload"],
//      "attention":[[0.0,0.2],[0.2,0.0]]}
//   document metadata  JSON lines:
//     {"doc_id":"d1","vendor":"eset","actor":"Lazarus","date":"2021-03-01",
//      "url":"https://..."}
//   embeddings         TSV, `word<TAB>v1 v2 ... vd`
//
// A top-level "version" key is accepted and ignored on JSON lines.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "attnsearch/error.hpp"

namespace attnsearch {

using json = nlohmann::json;

/// Identifies one sentence of the corpus.
struct SentenceKey {
  std::string doc_id;
  std::uint32_t sent_id = 0;

  friend auto operator<=>(const SentenceKey &, const SentenceKey &) = default;
  friend bool operator==(const SentenceKey &, const SentenceKey &) = default;
};

inline std::string to_string(const SentenceKey &key) {
  return key.doc_id + "#" + std::to_string(key.sent_id);
}

/// One sentence with its word-level, head-averaged attention map.
struct AttentionRecord {
  std::string doc_id;
  std::uint32_t sent_id = 0;
  std::vector<std::string> words;
  // Row-major, words.size() x words.size().
  std::vector<double> attention;

  SentenceKey key() const { return {doc_id, sent_id}; }
  std::size_t size() const noexcept { return words.size(); }
  double at(std::size_t row, std::size_t col) const {
    return attention[row * words.size() + col];
  }

  friend bool operator==(const AttentionRecord &,
                         const AttentionRecord &) = default;
};

struct DocMeta {
  std::string doc_id;
  std::optional<std::string> vendor;
  std::optional<std::string> actor;
  std::optional<std::string> date;
  std::optional<std::string> url;

  friend bool operator==(const DocMeta &, const DocMeta &) = default;
};

using DocMetaMap = std::map<std::string, DocMeta>;

namespace detail {

inline std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

inline json parse_json_line(const std::string &line, std::size_t lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
  }
  if (!j.is_object()) throw ParseError("expected a JSON object", lineno);
  return j;
}

inline std::string require_string(const json &j, const char *field,
                                  std::size_t lineno) {
  auto it = j.find(field);
  if (it == j.end()) {
    throw ParseError(std::string("missing field '") + field + "'", lineno);
  }
  if (!it->is_string()) {
    throw ParseError(std::string("field '") + field + "' must be a string",
                     lineno);
  }
  return it->get<std::string>();
}

inline std::optional<std::string> optional_string(const json &j,
                                                  const char *field,
                                                  std::size_t lineno) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ParseError(std::string("field '") + field + "' must be a string",
                     lineno);
  }
  return it->get<std::string>();
}

}  // namespace detail

/// Checks every AttentionRecord invariant except file-level key uniqueness.
inline void validate_record(const AttentionRecord &rec, std::size_t lineno = 0) {
  if (rec.words.empty()) throw StructuralError("record has no words", lineno);
  const auto n = rec.words.size();
  if (rec.attention.size() != n * n) {
    throw StructuralError("attention matrix is not " + std::to_string(n) +
                              "x" + std::to_string(n),
                          lineno);
  }
  for (double a : rec.attention) {
    if (!std::isfinite(a) || a < 0.0 || a > 1.0) {
      throw RangeError("attention value out of [0,1]", lineno);
    }
  }
}

inline AttentionRecord parse_attention_record(const std::string &line,
                                              std::size_t lineno = 0) {
  const json j = detail::parse_json_line(line, lineno);
  AttentionRecord rec;
  rec.doc_id = detail::require_string(j, "doc_id", lineno);

  auto sid = j.find("sent_id");
  if (sid == j.end() || !sid->is_number_integer() ||
      sid->get<std::int64_t>() < 0 ||
      sid->get<std::int64_t>() > std::numeric_limits<std::uint32_t>::max()) {
    throw ParseError("'sent_id' must be a non-negative integer", lineno);
  }
  rec.sent_id = sid->get<std::uint32_t>();

  auto words = j.find("words");
  if (words == j.end() || !words->is_array()) {
    throw ParseError("'words' must be an array of strings", lineno);
  }
  for (const auto &w : *words) {
    if (!w.is_string()) throw ParseError("'words' must be strings", lineno);
    rec.words.push_back(w.get<std::string>());
  }

  auto att = j.find("attention");
  if (att == j.end() || !att->is_array()) {
    throw ParseError("'attention' must be an array of rows", lineno);
  }
  const auto n = rec.words.size();
  if (att->size() != n) {
    throw StructuralError("attention has " + std::to_string(att->size()) +
                              " rows for " + std::to_string(n) + " words",
                          lineno);
  }
  rec.attention.reserve(n * n);
  for (const auto &row : *att) {
    if (!row.is_array()) throw ParseError("attention row is not an array", lineno);
    if (row.size() != n) {
      throw StructuralError("attention row has " + std::to_string(row.size()) +
                                " columns for " + std::to_string(n) + " words",
                            lineno);
    }
    for (const auto &v : row) {
      if (!v.is_number()) throw ParseError("attention value is not a number", lineno);
      rec.attention.push_back(v.get<double>());
    }
  }
  validate_record(rec, lineno);
  return rec;
}

inline json to_json(const AttentionRecord &rec) {
  json rows = json::array();
  const auto n = rec.words.size();
  for (std::size_t i = 0; i < n; ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < n; ++k) row.push_back(rec.at(i, k));
    rows.push_back(std::move(row));
  }
  return json{{"doc_id", rec.doc_id},
              {"sent_id", rec.sent_id},
              {"words", rec.words},
              {"attention", std::move(rows)}};
}

inline void write_attention_record(std::ostream &out, const AttentionRecord &rec) {
  out << to_json(rec).dump() << '\n';
}

/// Streams attention records from a JSON-lines file, one at a time.
class AttentionReader {
public:
  explicit AttentionReader(const std::string &path) : path_(path), in_(path) {
    if (!in_) throw Error("cannot open '" + path + "'");
  }

  /// Next record in file order, or nullopt at end of file.
  std::optional<AttentionRecord> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (detail::is_blank(line)) continue;
      AttentionRecord rec = parse_attention_record(line, lineno_);
      if (!seen_.emplace(rec.doc_id, rec.sent_id).second) {
        throw DuplicateError("duplicate record " + to_string(rec.key()), lineno_);
      }
      return rec;
    }
    return std::nullopt;
  }

  std::size_t line() const noexcept { return lineno_; }
  const std::string &path() const noexcept { return path_; }

private:
  std::string path_;
  std::ifstream in_;
  std::size_t lineno_ = 0;
  std::set<std::pair<std::string, std::uint32_t>> seen_;
};

template <class Fn>
void for_each_attention_record(const std::string &path, Fn &&fn) {
  AttentionReader reader(path);
  while (auto rec = reader.next()) fn(std::move(*rec));
}

inline std::vector<AttentionRecord> read_attention_file(const std::string &path) {
  std::vector<AttentionRecord> out;
  for_each_attention_record(path, [&](AttentionRecord r) { out.push_back(std::move(r)); });
  return out;
}

// ---------------------------------------------------------------------------
// Embeddings

/// Word -> fixed-dimension vector. Vectors are stored row-major; unit-length
/// copies and per-dimension ranges are precomputed for the distance metrics.
class EmbeddingTable {
public:
  EmbeddingTable() = default;

  explicit EmbeddingTable(std::size_t dimension) : dim_(dimension) {
    if (dimension == 0) throw InvariantError("embedding dimension must be positive");
  }

  /// Adds a word. Throws on duplicates, wrong dimension, non-finite or zero
  /// vectors.
  void add(const std::string &word, std::span<const double> vec,
           std::size_t lineno = 0) {
    if (dim_ == 0) {
      if (vec.empty()) throw InvariantError("empty vector for '" + word + "'", lineno);
      dim_ = vec.size();
    }
    if (vec.size() != dim_) {
      throw InvariantError("inconsistent dimension for '" + word + "': expected " +
                               std::to_string(dim_) + ", got " +
                               std::to_string(vec.size()),
                           lineno);
    }
    if (ids_.count(word)) {
      throw DuplicateError("duplicate word '" + word + "'", lineno);
    }
    double sq = 0.0;
    for (double v : vec) {
      if (!std::isfinite(v)) {
        throw InvariantError("non-finite component for '" + word + "'", lineno);
      }
      sq += v * v;
    }
    if (sq == 0.0) throw InvariantError("zero vector for '" + word + "'", lineno);

    const double norm = std::sqrt(sq);
    ids_.emplace(word, words_.size());
    words_.push_back(word);
    norms_.push_back(norm);
    if (mins_.empty()) {
      mins_.assign(vec.begin(), vec.end());
      maxs_.assign(vec.begin(), vec.end());
    }
    for (std::size_t i = 0; i < dim_; ++i) {
      values_.push_back(vec[i]);
      unit_.push_back(vec[i] / norm);
      mins_[i] = std::min(mins_[i], vec[i]);
      maxs_[i] = std::max(maxs_[i], vec[i]);
    }
    digest_valid_ = false;
  }

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }

  std::optional<std::size_t> id(std::string_view word) const {
    auto it = ids_.find(std::string(word));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view word) const { return id(word).has_value(); }

  const std::string &word(std::size_t id) const { return words_[id]; }
  const std::vector<std::string> &words() const noexcept { return words_; }

  std::span<const double> vector(std::size_t id) const {
    return {values_.data() + id * dim_, dim_};
  }
  std::span<const double> unit(std::size_t id) const {
    return {unit_.data() + id * dim_, dim_};
  }
  double norm(std::size_t id) const { return norms_[id]; }
  double dim_min(std::size_t d) const { return mins_[d]; }
  double dim_max(std::size_t d) const { return maxs_[d]; }

  /// FNV-1a over words and vector bit patterns, in insertion order.
  std::uint64_t digest() const {
    if (!digest_valid_) {
      std::uint64_t h = 0xcbf29ce484222325ull;
      auto mix = [&h](const void *p, std::size_t n) {
        const auto *b = static_cast<const unsigned char *>(p);
        for (std::size_t i = 0; i < n; ++i) {
          h ^= b[i];
          h *= 0x100000001b3ull;
        }
      };
      const std::uint64_t d = dim_;
      mix(&d, sizeof d);
      for (std::size_t i = 0; i < words_.size(); ++i) {
        mix(words_[i].data(), words_[i].size());
        mix("\0", 1);
        mix(values_.data() + i * dim_, dim_ * sizeof(double));
      }
      digest_ = h;
      digest_valid_ = true;
    }
    return digest_;
  }

  friend bool operator==(const EmbeddingTable &a, const EmbeddingTable &b) {
    return a.dim_ == b.dim_ && a.words_ == b.words_ && a.values_ == b.values_;
  }

private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> ids_;
  std::vector<double> values_;
  std::vector<double> unit_;
  std::vector<double> norms_;
  std::vector<double> mins_;
  std::vector<double> maxs_;
  mutable std::uint64_t digest_ = 0;
  mutable bool digest_valid_ = false;
};

inline EmbeddingTable parse_embeddings(std::istream &in) {
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> vec;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError("expected 'word<TAB>values'", lineno);
    }
    const std::string word = line.substr(0, tab);
    vec.clear();
    const char *p = line.data() + tab + 1;
    const char *end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || (next < end && *next != ' ')) {
        throw ParseError("non-numeric field for '" + word + "'", lineno);
      }
      vec.push_back(v);
      p = next;
    }
    table.add(word, vec, lineno);
  }
  return table;
}

inline EmbeddingTable read_embeddings(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_embeddings(in);
}

inline void write_embeddings(std::ostream &out, const EmbeddingTable &table) {
  char buf[64];
  for (std::size_t id = 0; id < table.size(); ++id) {
    out << table.word(id) << '\t';
    const auto vec = table.vector(id);
    for (std::size_t i = 0; i < vec.size(); ++i) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, vec[i]);
      if (i) out << ' ';
      out.write(buf, end - buf);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Document metadata

inline DocMeta parse_doc_meta(const std::string &line, std::size_t lineno = 0) {
  static const std::regex iso_date(R"(\d{4}-\d{2}-\d{2}([T ].*)?)");
  const json j = detail::parse_json_line(line, lineno);
  DocMeta meta;
  meta.doc_id = detail::require_string(j, "doc_id", lineno);
  meta.vendor = detail::optional_string(j, "vendor", lineno);
  meta.actor = detail::optional_string(j, "actor", lineno);
  meta.date = detail::optional_string(j, "date", lineno);
  meta.url = detail::optional_string(j, "url", lineno);
  if (meta.date && !std::regex_match(*meta.date, iso_date)) {
    throw ParseError("'date' is not an ISO-8601 date", lineno);
  }
  return meta;
}

inline DocMetaMap parse_doc_meta_stream(std::istream &in) {
  DocMetaMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    DocMeta meta = parse_doc_meta(line, lineno);
    auto id = meta.doc_id;
    if (!out.emplace(id, std::move(meta)).second) {
      throw DuplicateError("duplicate doc_id '" + id + "'", lineno);
    }
  }
  return out;
}

inline DocMetaMap read_doc_meta(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_doc_meta_stream(in);
}

inline json to_json(const DocMeta &meta) {
  json j{{"doc_id", meta.doc_id}};
  if (meta.vendor) j["vendor"] = *meta.vendor;
  if (meta.actor) j["actor"] = *meta.actor;
  if (meta.date) j["date"] = *meta.date;
  if (meta.url) j["url"] = *meta.url;
  return j;
}

inline void write_doc_meta(std::ostream &out, const DocMetaMap &meta) {
  for (const auto &[id, m] : meta) out << to_json(m).dump() << '\n';
}

}  // namespace attnsearch
