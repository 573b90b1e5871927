//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Corpus index: cached sentence graphs, word -> sentence synonym clusters and
// document metadata.
//
// Directory layout written by save_index():
//
//   graphs.jsonl      {"doc_id","sent_id","nodes":[[index,word],...],
//                      "edges":[[a,b,weight],...]}   sorted by (doc_id, sent_id)
//   clusters.jsonl    {"word":w,"sentences":[[doc_id,sent_id],...]}  sorted by word
//   meta.jsonl        document metadata, sorted by doc_id
//   fingerprint.json  build parameters, embedding digest and their hash
//
// clusters[w] lists every sentence holding a word within tau of w. Any
// sentence that can produce a non-empty match with a query therefore lies in
// the union of the clusters of the query's words, which makes candidate
// pruning lossless.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "attnsearch/error.hpp"
#include "attnsearch/graph.hpp"
#include "attnsearch/interchange.hpp"
#include "attnsearch/matcher.hpp"
#include "attnsearch/parallel.hpp"

namespace attnsearch {

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::uint64_t parse_hex64(const std::string &s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error("malformed hex digest '" + s + "'");
  }
  return v;
}

}  // namespace detail

inline json to_json(const GraphParams &p) {
  return json{{"attention_threshold", p.attention_threshold},
              {"stopwords", json(std::vector<std::string>(p.stopwords.begin(), p.stopwords.end()))},
              {"keep_isolated_nodes", p.keep_isolated_nodes},
              {"max_nodes", p.max_nodes}};
}

inline GraphParams graph_params_from_json(const json &j) {
  GraphParams p;
  p.attention_threshold = j.at("attention_threshold").get<double>();
  p.stopwords.clear();
  for (const auto &w : j.at("stopwords")) p.stopwords.insert(w.get<std::string>());
  p.keep_isolated_nodes = j.at("keep_isolated_nodes").get<bool>();
  p.max_nodes = j.at("max_nodes").get<std::size_t>();
  return p;
}

inline json to_json(const MatchParams &p) {
  return json{{"tau", p.tau}, {"kappa", p.kappa}, {"metric", std::string(to_string(p.metric))}};
}

inline MatchParams match_params_from_json(const json &j) {
  MatchParams p;
  p.tau = j.at("tau").get<double>();
  p.kappa = j.at("kappa").get<double>();
  p.metric = parse_metric(j.at("metric").get<std::string>());
  return p;
}

/// Hash of everything the cached graphs and clusters depend on.
inline std::string params_fingerprint(const GraphParams &gp, const MatchParams &mp,
                                      std::uint64_t embedding_digest) {
  const json j{{"graph_params", to_json(gp)},
               {"match_params", to_json(mp)},
               {"embedding_digest", detail::hex64(embedding_digest)}};
  return detail::hex64(detail::fnv1a(j.dump()));
}

struct CorpusIndex {
  GraphParams graph_params;
  MatchParams match_params;
  std::uint64_t embedding_digest = 0;
  std::string fingerprint;

  std::vector<AttentionGraph> graphs;  // ascending by key
  std::unordered_map<std::string, std::vector<std::uint32_t>> clusters;  // word -> graph ordinals
  DocMetaMap meta;

  // Derived on build/load, not persisted.
  std::vector<PreparedGraph> prepared;
  std::map<SentenceKey, std::uint32_t> ordinals;
  GraphBuildStats stats;

  std::size_t size() const noexcept { return graphs.size(); }

  const AttentionGraph *find(const SentenceKey &key) const {
    auto it = ordinals.find(key);
    return it == ordinals.end() ? nullptr : &graphs[it->second];
  }

  std::vector<SentenceKey> cluster(std::string_view word) const {
    std::vector<SentenceKey> out;
    auto it = clusters.find(std::string(word));
    if (it == clusters.end()) return out;
    for (auto ord : it->second) out.push_back(graphs[ord].key());
    return out;
  }

  /// Throws StaleIndexError unless the index was built with exactly these
  /// parameters and embeddings.
  void check_compatible(const GraphParams &gp, const MatchParams &mp,
                        const EmbeddingTable &emb) const {
    if (emb.digest() != embedding_digest) {
      throw StaleIndexError("embedding table differs from the one the index was built with "
                            "(digest " + detail::hex64(emb.digest()) + " vs " +
                            detail::hex64(embedding_digest) + ")");
    }
    const auto fp = params_fingerprint(gp, mp, emb.digest());
    if (fp != fingerprint) {
      throw StaleIndexError("index fingerprint " + fingerprint +
                            " does not match current parameters (" + fp +
                            "); rebuild the index or pass the build-time parameters");
    }
  }

  void check_compatible(const MatchParams &mp, const EmbeddingTable &emb) const {
    check_compatible(graph_params, mp, emb);
  }
};

namespace detail {

/// For every vocabulary word, the corpus words within tau of it.
inline std::vector<std::vector<std::uint32_t>>
synonyms_in_corpus(const EmbeddingTable &emb, const std::vector<std::size_t> &corpus_words,
                   const MatchParams &mp, std::size_t threads) {
  const std::size_t vocab = emb.size();
  std::vector<std::vector<std::uint32_t>> out(vocab);
  if (corpus_words.empty()) return out;

  switch (mp.metric) {
    case DistanceMetric::exact_word: {
      for (std::size_t c = 0; c < corpus_words.size(); ++c) {
        out[corpus_words[c]].push_back(static_cast<std::uint32_t>(c));
      }
      return out;
    }
    case DistanceMetric::half_cosine: {
      // Blocked GEMM of unit vectors as a filter. Anything within a small
      // margin of tau is settled with the exact word_distance so clusters
      // agree with the matcher bit for bit.
      const std::size_t dim = emb.dimension();
      Eigen::MatrixXd corpus(dim, corpus_words.size());
      for (std::size_t c = 0; c < corpus_words.size(); ++c) {
        const auto u = emb.unit(corpus_words[c]);
        for (std::size_t i = 0; i < dim; ++i) corpus(i, c) = u[i];
      }
      constexpr double margin = 1e-9;
      constexpr std::size_t block = 256;
      const std::size_t nblocks = (vocab + block - 1) / block;
      parallel_chunks(nblocks, threads, [&](std::size_t, std::size_t b0, std::size_t b1) {
        Eigen::MatrixXd rows;
        for (std::size_t b = b0; b < b1; ++b) {
          const std::size_t lo = b * block;
          const std::size_t hi = std::min(vocab, lo + block);
          rows.resize(hi - lo, dim);
          for (std::size_t w = lo; w < hi; ++w) {
            const auto u = emb.unit(w);
            for (std::size_t i = 0; i < dim; ++i) rows(w - lo, i) = u[i];
          }
          const Eigen::MatrixXd dots = rows * corpus;
          for (std::size_t w = lo; w < hi; ++w) {
            for (std::size_t c = 0; c < corpus_words.size(); ++c) {
              const double approx = (1.0 - dots(w - lo, c)) / 2.0;
              bool hit = false;
              if (corpus_words[c] == w || approx < mp.tau - margin) {
                hit = true;
              } else if (approx < mp.tau + margin) {
                hit = word_distance(w, corpus_words[c], emb, mp.metric) < mp.tau;
              }
              if (hit) out[w].push_back(static_cast<std::uint32_t>(c));
            }
          }
        }
      });
      return out;
    }
    case DistanceMetric::minmax_euclidean: {
      // |‖x‖ - ‖y‖| <= ‖x - y‖ on the scaled vectors bounds the search to a
      // window of corpus words sorted by scaled norm.
      const std::size_t dim = emb.dimension();
      auto scaled_norm = [&](std::size_t id) {
        const auto v = emb.vector(id);
        double sq = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
          const double range = emb.dim_max(i) - emb.dim_min(i);
          if (range == 0.0) continue;
          const double x = (v[i] - emb.dim_min(i)) / range;
          sq += x * x;
        }
        return std::sqrt(sq);
      };
      std::vector<std::pair<double, std::uint32_t>> by_norm;
      for (std::size_t c = 0; c < corpus_words.size(); ++c) {
        by_norm.emplace_back(scaled_norm(corpus_words[c]), static_cast<std::uint32_t>(c));
      }
      std::sort(by_norm.begin(), by_norm.end());
      const double radius = mp.tau * std::sqrt(static_cast<double>(dim)) * (1.0 + 1e-9) + 1e-12;
      parallel_chunks(vocab, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t w = lo; w < hi; ++w) {
          const double n = scaled_norm(w);
          auto it = std::lower_bound(by_norm.begin(), by_norm.end(),
                                     std::pair{n - radius, std::uint32_t{0}});
          for (; it != by_norm.end() && it->first <= n + radius; ++it) {
            if (word_distance(w, corpus_words[it->second], emb, mp.metric) < mp.tau) {
              out[w].push_back(it->second);
            }
          }
          std::sort(out[w].begin(), out[w].end());
        }
      });
      return out;
    }
  }
  return out;
}

inline void attach_derived(CorpusIndex &index, const EmbeddingTable &emb) {
  index.ordinals.clear();
  index.prepared.clear();
  index.prepared.reserve(index.graphs.size());
  for (std::size_t i = 0; i < index.graphs.size(); ++i) {
    index.ordinals.emplace(index.graphs[i].key(), static_cast<std::uint32_t>(i));
    index.prepared.push_back(prepare(index.graphs[i], emb));
  }
}

}  // namespace detail

/// Accumulates sentence graphs; records are not retained.
class IndexBuilder {
public:
  IndexBuilder(const EmbeddingTable &emb, GraphParams gp, MatchParams mp)
      : emb_(emb), gp_(std::move(gp)), mp_(mp) {
    gp_.validate();
    mp_.validate();
  }

  void add(const AttentionRecord &rec) {
    validate_record(rec);
    if (!keys_.insert(rec.key()).second) {
      throw DuplicateError("duplicate record " + to_string(rec.key()));
    }
    graphs_.push_back(build_graph(rec, emb_, gp_, &stats_));
  }

  CorpusIndex finish(DocMetaMap meta = {}, std::size_t threads = default_threads()) && {
    CorpusIndex index;
    index.graph_params = gp_;
    index.match_params = mp_;
    index.embedding_digest = emb_.digest();
    index.fingerprint = params_fingerprint(gp_, mp_, index.embedding_digest);
    index.meta = std::move(meta);
    index.stats = stats_;
    std::sort(graphs_.begin(), graphs_.end(),
              [](const AttentionGraph &a, const AttentionGraph &b) { return a.key() < b.key(); });
    index.graphs = std::move(graphs_);

    // Postings of the words that occur in the corpus.
    std::unordered_map<std::size_t, std::uint32_t> corpus_slot;
    std::vector<std::size_t> corpus_words;
    std::vector<std::vector<std::uint32_t>> postings;
    for (std::size_t ord = 0; ord < index.graphs.size(); ++ord) {
      for (const auto &n : index.graphs[ord].nodes) {
        const std::size_t id = *emb_.id(n.word);
        auto [it, fresh] = corpus_slot.try_emplace(id, static_cast<std::uint32_t>(corpus_words.size()));
        if (fresh) {
          corpus_words.push_back(id);
          postings.emplace_back();
        }
        auto &list = postings[it->second];
        if (list.empty() || list.back() != ord) list.push_back(static_cast<std::uint32_t>(ord));
      }
    }

    const auto synonyms = detail::synonyms_in_corpus(emb_, corpus_words, mp_, threads);
    for (std::size_t w = 0; w < synonyms.size(); ++w) {
      if (synonyms[w].empty()) continue;
      std::vector<std::uint32_t> merged;
      for (auto c : synonyms[w]) {
        merged.insert(merged.end(), postings[c].begin(), postings[c].end());
      }
      std::sort(merged.begin(), merged.end());
      merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
      index.clusters.emplace(emb_.word(w), std::move(merged));
    }
    detail::attach_derived(index, emb_);
    return index;
  }

  const GraphBuildStats &stats() const noexcept { return stats_; }

private:
  const EmbeddingTable &emb_;
  GraphParams gp_;
  MatchParams mp_;
  std::set<SentenceKey> keys_;
  std::vector<AttentionGraph> graphs_;
  GraphBuildStats stats_;
};

inline CorpusIndex build_index(const std::vector<AttentionRecord> &records,
                               const EmbeddingTable &emb, const GraphParams &gp,
                               const MatchParams &mp, DocMetaMap meta = {},
                               std::size_t threads = default_threads()) {
  IndexBuilder builder(emb, gp, mp);
  for (const auto &r : records) builder.add(r);
  return std::move(builder).finish(std::move(meta), threads);
}

/// Streams records from an attention file.
inline CorpusIndex build_index_from_file(const std::string &attention_path,
                                         const EmbeddingTable &emb, const GraphParams &gp,
                                         const MatchParams &mp, DocMetaMap meta = {},
                                         std::size_t threads = default_threads()) {
  IndexBuilder builder(emb, gp, mp);
  for_each_attention_record(attention_path, [&](const AttentionRecord &r) { builder.add(r); });
  return std::move(builder).finish(std::move(meta), threads);
}

// ---------------------------------------------------------------------------
// Persistence

inline void save_index(const CorpusIndex &index, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char *name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + (dir / name).string() + "'");
    return out;
  };
  {
    auto out = open("graphs.jsonl");
    for (const auto &g : index.graphs) out << to_json(g).dump() << '\n';
  }
  {
    auto out = open("clusters.jsonl");
    std::vector<const std::string *> words;
    for (const auto &[w, ords] : index.clusters) words.push_back(&w);
    std::sort(words.begin(), words.end(), [](auto *a, auto *b) { return *a < *b; });
    for (const auto *w : words) {
      json ids = json::array();
      for (auto ord : index.clusters.at(*w)) {
        ids.push_back(json::array({index.graphs[ord].doc_id, index.graphs[ord].sent_id}));
      }
      out << json{{"word", *w}, {"sentences", std::move(ids)}}.dump() << '\n';
    }
  }
  {
    auto out = open("meta.jsonl");
    write_doc_meta(out, index.meta);
  }
  {
    auto out = open("fingerprint.json");
    const json fp{{"fingerprint", index.fingerprint},
                  {"graph_params", to_json(index.graph_params)},
                  {"match_params", to_json(index.match_params)},
                  {"embedding_digest", detail::hex64(index.embedding_digest)},
                  {"sentences", index.graphs.size()},
                  {"cluster_words", index.clusters.size()}};
    out << fp.dump(2) << '\n';
  }
}

/// Loads an index directory. Throws StaleIndexError when `emb` is not the
/// table the index was built from.
inline CorpusIndex load_index(const std::filesystem::path &dir, const EmbeddingTable &emb) {
  CorpusIndex index;
  auto read_lines = [&](const char *name, auto &&fn) {
    std::ifstream in(dir / name);
    if (!in) throw Error("cannot open '" + (dir / name).string() + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (detail::is_blank(line)) continue;
      try {
        fn(json::parse(line));
      } catch (const json::exception &e) {
        throw ParseError(std::string(name) + ": " + e.what(), lineno);
      }
    }
  };

  {
    std::ifstream in(dir / "fingerprint.json");
    if (!in) throw Error("not an index directory: '" + dir.string() + "'");
    json fp;
    try {
      fp = json::parse(in);
      index.fingerprint = fp.at("fingerprint").get<std::string>();
      index.graph_params = graph_params_from_json(fp.at("graph_params"));
      index.match_params = match_params_from_json(fp.at("match_params"));
      index.embedding_digest = detail::parse_hex64(fp.at("embedding_digest").get<std::string>());
    } catch (const json::exception &e) {
      throw ParseError(std::string("fingerprint.json: ") + e.what());
    }
    if (params_fingerprint(index.graph_params, index.match_params, index.embedding_digest) !=
        index.fingerprint) {
      throw StaleIndexError("fingerprint.json is inconsistent with its recorded parameters");
    }
  }
  if (emb.digest() != index.embedding_digest) {
    throw StaleIndexError("embedding table differs from the one the index was built with");
  }

  read_lines("graphs.jsonl", [&](const json &j) { index.graphs.push_back(graph_from_json(j)); });
  for (std::size_t i = 1; i < index.graphs.size(); ++i) {
    if (!(index.graphs[i - 1].key() < index.graphs[i].key())) {
      throw ParseError("graphs.jsonl is not sorted by sentence key");
    }
  }
  detail::attach_derived(index, emb);

  read_lines("clusters.jsonl", [&](const json &j) {
    std::vector<std::uint32_t> ords;
    for (const auto &id : j.at("sentences")) {
      SentenceKey key{id.at(0).get<std::string>(), id.at(1).get<std::uint32_t>()};
      auto it = index.ordinals.find(key);
      if (it == index.ordinals.end()) {
        throw ParseError("clusters.jsonl references unknown sentence " + to_string(key));
      }
      ords.push_back(it->second);
    }
    index.clusters.emplace(j.at("word").get<std::string>(), std::move(ords));
  });

  std::ifstream meta(dir / "meta.jsonl");
  if (meta) index.meta = parse_doc_meta_stream(meta);
  return index;
}

}  // namespace attnsearch
