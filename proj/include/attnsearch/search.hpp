//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "attnsearch/error.hpp"
#include "attnsearch/graph.hpp"
#include "attnsearch/index.hpp"
#include "attnsearch/matcher.hpp"
#include "attnsearch/parallel.hpp"

namespace attnsearch {

struct SearchHit {
  std::string doc_id;
  std::uint32_t sent_id = 0;
  double score = 0.0;
  MatchSet match;

  SentenceKey key() const { return {doc_id, sent_id}; }
  friend bool operator==(const SearchHit &, const SearchHit &) = default;
};

struct SearchOptions {
  double sim_threshold = 0.0;
  std::optional<std::size_t> top_k;
  std::size_t threads = 1;
};

/// Descending score, then ascending (doc_id, sent_id).
inline void sort_hits(std::vector<SearchHit> &hits) {
  std::sort(hits.begin(), hits.end(), [](const SearchHit &a, const SearchHit &b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
    return a.sent_id < b.sent_id;
  });
}

struct DocumentHit {
  std::string doc_id;
  double score = 0.0;  // max over the document's sentence hits
  std::uint32_t best_sent_id = 0;
};

inline std::vector<DocumentHit> rank_documents(const std::vector<SearchHit> &hits) {
  std::map<std::string, DocumentHit> best;
  for (const auto &h : hits) {
    auto [it, fresh] = best.try_emplace(h.doc_id, DocumentHit{h.doc_id, h.score, h.sent_id});
    if (!fresh && (h.score > it->second.score ||
                   (h.score == it->second.score && h.sent_id < it->second.best_sent_id))) {
      it->second.score = h.score;
      it->second.best_sent_id = h.sent_id;
    }
  }
  std::vector<DocumentHit> out;
  for (auto &[id, d] : best) out.push_back(std::move(d));
  std::stable_sort(out.begin(), out.end(),
                   [](const DocumentHit &a, const DocumentHit &b) { return a.score > b.score; });
  return out;
}

/// Query interface over a loaded index. Construction verifies that the index
/// was built with `params` and `emb`.
class Searcher {
public:
  Searcher(const CorpusIndex &index, const EmbeddingTable &emb, const MatchParams &params)
      : index_(index), emb_(emb), params_(params) {
    params_.validate();
    index_.check_compatible(params_, emb_);
  }

  /// Graph ordinals whose sentence holds a synonym of some query word.
  std::vector<std::uint32_t> candidate_ordinals(const AttentionGraph &query) const {
    std::vector<std::uint32_t> out;
    for (const auto &n : query.nodes) {
      auto it = index_.clusters.find(n.word);
      if (it == index_.clusters.end()) continue;
      out.insert(out.end(), it->second.begin(), it->second.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::vector<SentenceKey> candidates(const AttentionGraph &query) const {
    std::vector<SentenceKey> out;
    for (auto ord : candidate_ordinals(query)) out.push_back(index_.graphs[ord].key());
    return out;
  }

  /// Scores only the candidate sentences.
  std::vector<SearchHit> search(const AttentionGraph &query, const SearchOptions &opts) const {
    return run(query, candidate_ordinals(query), opts);
  }

  /// Scores every cached sentence; identical results to search().
  std::vector<SearchHit> search_unoptimized(const AttentionGraph &query,
                                            const SearchOptions &opts) const {
    std::vector<std::uint32_t> all(index_.graphs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
    return run(query, all, opts);
  }

  const CorpusIndex &index() const noexcept { return index_; }
  const MatchParams &params() const noexcept { return params_; }

private:
  std::vector<SearchHit> run(const AttentionGraph &query, const std::vector<std::uint32_t> &ords,
                             const SearchOptions &opts) const {
    const PreparedGraph q = prepare(query, emb_);
    const std::size_t threads = std::max<std::size_t>(1, opts.threads);
    std::vector<std::vector<SearchHit>> partial(std::min(threads, std::max<std::size_t>(1, ords.size())));
    parallel_chunks(ords.size(), partial.size(), [&](std::size_t t, std::size_t lo, std::size_t hi) {
      for (std::size_t k = lo; k < hi; ++k) {
        const auto ord = ords[k];
        auto m = best_match(q, index_.prepared[ord], emb_, params_);
        if (m.score > 0.0 && m.score > opts.sim_threshold) {
          const auto &g = index_.graphs[ord];
          partial[t].push_back({g.doc_id, g.sent_id, m.score, std::move(m.match)});
        }
      }
    });
    std::vector<SearchHit> hits;
    for (auto &p : partial) {
      hits.insert(hits.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
    }
    sort_hits(hits);
    if (opts.top_k && hits.size() > *opts.top_k) hits.resize(*opts.top_k);
    return hits;
  }

  const CorpusIndex &index_;
  const EmbeddingTable &emb_;
  MatchParams params_;
};

inline std::vector<SentenceKey> candidates(const CorpusIndex &index, const EmbeddingTable &emb,
                                           const AttentionGraph &query,
                                           const MatchParams &params) {
  return Searcher(index, emb, params).candidates(query);
}

inline std::vector<SearchHit> search(const CorpusIndex &index, const EmbeddingTable &emb,
                                     const AttentionGraph &query, const MatchParams &params,
                                     const SearchOptions &opts = {}) {
  return Searcher(index, emb, params).search(query, opts);
}

inline std::vector<SearchHit> search_unoptimized(const CorpusIndex &index,
                                                 const EmbeddingTable &emb,
                                                 const AttentionGraph &query,
                                                 const MatchParams &params,
                                                 const SearchOptions &opts = {}) {
  return Searcher(index, emb, params).search_unoptimized(query, opts);
}

/// No caching and no pruning: every sentence graph is rebuilt from its record
/// for each query.
inline std::vector<SearchHit> search_rebuilding(const std::vector<AttentionRecord> &records,
                                                const EmbeddingTable &emb,
                                                const GraphParams &gp,
                                                const AttentionGraph &query,
                                                const MatchParams &params,
                                                const SearchOptions &opts = {}) {
  const PreparedGraph q = prepare(query, emb);
  std::vector<SearchHit> hits;
  for (const auto &rec : records) {
    const auto g = build_graph(rec, emb, gp);
    auto m = best_match(q, prepare(g, emb), emb, params);
    if (m.score > 0.0 && m.score > opts.sim_threshold) {
      hits.push_back({g.doc_id, g.sent_id, m.score, std::move(m.match)});
    }
  }
  sort_hits(hits);
  if (opts.top_k && hits.size() > *opts.top_k) hits.resize(*opts.top_k);
  return hits;
}

struct ActorVotes {
  std::string actor;
  std::size_t documents = 0;

  friend bool operator==(const ActorVotes &, const ActorVotes &) = default;
};

/// Counts, per actor, the distinct labeled documents holding a sentence that
/// scores above `sim_threshold` for any behavior query. Sorted by count
/// descending, then actor name.
inline std::vector<ActorVotes> attribute(const CorpusIndex &index, const EmbeddingTable &emb,
                                         const std::vector<AttentionGraph> &behaviors,
                                         const MatchParams &params, double sim_threshold,
                                         std::size_t threads = 1) {
  const bool labeled = std::any_of(index.meta.begin(), index.meta.end(),
                                   [](const auto &kv) { return kv.second.actor.has_value(); });
  if (!labeled) throw AttributionError("no document in the index carries an actor label");

  const Searcher searcher(index, emb, params);
  std::set<std::string> matched_docs;
  for (const auto &q : behaviors) {
    for (const auto &h : searcher.search(q, {sim_threshold, std::nullopt, threads})) {
      matched_docs.insert(h.doc_id);
    }
  }
  std::map<std::string, std::size_t> counts;
  for (const auto &doc : matched_docs) {
    auto it = index.meta.find(doc);
    if (it == index.meta.end() || !it->second.actor) continue;
    ++counts[*it->second.actor];
  }
  std::vector<ActorVotes> out;
  for (const auto &[actor, n] : counts) out.push_back({actor, n});
  std::stable_sort(out.begin(), out.end(),
                   [](const ActorVotes &a, const ActorVotes &b) { return a.documents > b.documents; });
  return out;
}

}  // namespace attnsearch
