//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Approximate common-subgraph matching between two attention graphs.
//
// Two nodes match when the distance between their word embeddings is below
// tau. A match set is an injective correspondence between nodes of the two
// graphs that grows along edges present in both graphs. Its score is
//
//     sim(s) = prod_{(u,v) in s} kappa * (1 - d(u, v))
//
// with kappa > 1 so larger matches dominate; the empty match scores 0.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "attnsearch/error.hpp"
#include "attnsearch/graph.hpp"
#include "attnsearch/interchange.hpp"

namespace attnsearch {

enum class DistanceMetric {
  /// (1 - cos(a, b)) / 2
  half_cosine,
  /// Euclidean distance after per-dimension min-max scaling, divided by
  /// sqrt(dimension).
  minmax_euclidean,
  /// 0 for the same word, 1 otherwise.
  exact_word,
};

inline std::string_view to_string(DistanceMetric m) {
  switch (m) {
    case DistanceMetric::half_cosine: return "half_cosine";
    case DistanceMetric::minmax_euclidean: return "minmax_euclidean";
    case DistanceMetric::exact_word: return "exact_word";
  }
  return "?";
}

inline DistanceMetric parse_metric(std::string_view s) {
  if (s == "half_cosine") return DistanceMetric::half_cosine;
  if (s == "minmax_euclidean") return DistanceMetric::minmax_euclidean;
  if (s == "exact_word") return DistanceMetric::exact_word;
  throw ParamError("unknown distance metric '" + std::string(s) + "'");
}

struct MatchParams {
  double tau = 0.37;
  double kappa = 2.72;
  DistanceMetric metric = DistanceMetric::half_cosine;

  void validate() const {
    if (!(tau > 0.0 && tau <= 1.0)) throw ParamError("tau must be in (0,1]");
    if (!(kappa > 1.0) || !std::isfinite(kappa)) throw ParamError("kappa must be > 1");
  }

  friend bool operator==(const MatchParams &, const MatchParams &) = default;
};

/// Distance between two vocabulary entries, in [0,1].
inline double word_distance(std::size_t a, std::size_t b, const EmbeddingTable &emb,
                            DistanceMetric metric = DistanceMetric::half_cosine) {
  if (a == b) return 0.0;
  switch (metric) {
    case DistanceMetric::half_cosine: {
      const auto u = emb.unit(a);
      const auto v = emb.unit(b);
      double dot = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
      return std::clamp((1.0 - dot) / 2.0, 0.0, 1.0);
    }
    case DistanceMetric::minmax_euclidean: {
      const auto u = emb.vector(a);
      const auto v = emb.vector(b);
      double sq = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double range = emb.dim_max(i) - emb.dim_min(i);
        if (range == 0.0) continue;
        const double diff = (u[i] - v[i]) / range;
        sq += diff * diff;
      }
      return std::clamp(std::sqrt(sq / static_cast<double>(u.size())), 0.0, 1.0);
    }
    case DistanceMetric::exact_word:
      return 1.0;
  }
  return 1.0;
}

inline double word_distance(std::string_view w1, std::string_view w2,
                            const EmbeddingTable &emb,
                            DistanceMetric metric = DistanceMetric::half_cosine) {
  const auto a = emb.id(w1);
  if (!a) throw MissingWordError(std::string(w1));
  const auto b = emb.id(w2);
  if (!b) throw MissingWordError(std::string(w2));
  return word_distance(*a, *b, emb, metric);
}

inline bool word_match(std::string_view w1, std::string_view w2, const EmbeddingTable &emb,
                       const MatchParams &params) {
  return word_distance(w1, w2, emb, params.metric) < params.tau;
}

/// (node index in G1, node index in G2)
struct MatchPair {
  std::uint32_t g1 = 0;
  std::uint32_t g2 = 0;

  friend auto operator<=>(const MatchPair &, const MatchPair &) = default;
  friend bool operator==(const MatchPair &, const MatchPair &) = default;
};

/// Pairs are kept in growth order: every pair after the first is adjacent
/// (in both graphs) to some earlier pair.
struct MatchSet {
  std::vector<MatchPair> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }

  std::vector<MatchPair> sorted() const {
    auto out = pairs;
    std::sort(out.begin(), out.end());
    return out;
  }

  MatchSet transposed() const {
    MatchSet t;
    t.pairs.reserve(pairs.size());
    for (const auto &p : pairs) t.pairs.push_back({p.g2, p.g1});
    return t;
  }

  friend bool operator==(const MatchSet &, const MatchSet &) = default;
};

struct ScoredMatch {
  MatchSet match;
  double score = 0.0;
};

/// Product of kappa * (1 - d) over the given distances; 0 for none.
/// Factors are multiplied in ascending order so the result does not depend on
/// pair order.
inline double score_from_distances(std::vector<double> distances, double kappa) {
  if (distances.empty()) return 0.0;
  std::vector<double> factors;
  factors.reserve(distances.size());
  for (double d : distances) factors.push_back(kappa * (1.0 - d));
  std::sort(factors.begin(), factors.end());
  double s = 1.0;
  for (double f : factors) s *= f;
  return s;
}

/// Graph plus the per-node data the matcher needs, resolved once.
struct PreparedGraph {
  std::vector<std::uint32_t> indices;
  std::vector<std::size_t> word_ids;
  Adjacency adj;

  std::size_t size() const noexcept { return indices.size(); }
};

inline PreparedGraph prepare(const AttentionGraph &g, const EmbeddingTable &emb) {
  PreparedGraph p;
  p.indices.reserve(g.nodes.size());
  p.word_ids.reserve(g.nodes.size());
  for (const auto &n : g.nodes) {
    const auto id = emb.id(n.word);
    if (!id) throw MissingWordError(n.word);
    p.indices.push_back(n.index);
    p.word_ids.push_back(*id);
  }
  p.adj = g.adjacency();
  return p;
}

inline double similarity_score(const MatchSet &s, const AttentionGraph &g1,
                               const AttentionGraph &g2, const EmbeddingTable &emb,
                               const MatchParams &params) {
  std::vector<double> d;
  d.reserve(s.size());
  for (const auto &p : s.pairs) {
    const auto a = g1.position_of(p.g1);
    const auto b = g2.position_of(p.g2);
    if (!a || !b) throw Error("match pair references a missing node");
    d.push_back(word_distance(g1.nodes[*a].word, g2.nodes[*b].word, emb, params.metric));
  }
  return score_from_distances(std::move(d), params.kappa);
}

/// Checks injectivity, the match predicate, and growth order.
inline bool is_valid_match_set(const MatchSet &s, const AttentionGraph &g1,
                               const AttentionGraph &g2, const EmbeddingTable &emb,
                               const MatchParams &params) {
  std::unordered_set<std::uint32_t> used1, used2;
  for (std::size_t k = 0; k < s.pairs.size(); ++k) {
    const auto &p = s.pairs[k];
    const auto a = g1.position_of(p.g1);
    const auto b = g2.position_of(p.g2);
    if (!a || !b) return false;
    if (!used1.insert(p.g1).second || !used2.insert(p.g2).second) return false;
    if (!(word_distance(g1.nodes[*a].word, g2.nodes[*b].word, emb, params.metric) <
          params.tau)) {
      return false;
    }
    if (k == 0) continue;
    const bool attached = std::any_of(s.pairs.begin(), s.pairs.begin() + k, [&](const MatchPair &q) {
      return g1.has_edge(p.g1, q.g1) && g2.has_edge(p.g2, q.g2);
    });
    if (!attached) return false;
  }
  return true;
}

namespace detail {

/// n1 x n2 distance matrix between prepared graphs.
struct DistanceMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> d;

  double operator()(std::size_t i, std::size_t j) const { return d[i * cols + j]; }
};

inline DistanceMatrix distances(const PreparedGraph &g1, const PreparedGraph &g2,
                                const EmbeddingTable &emb, DistanceMetric metric) {
  DistanceMatrix m{g1.size(), g2.size(), {}};
  m.d.resize(m.rows * m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      m.d[i * m.cols + j] = word_distance(g1.word_ids[i], g2.word_ids[j], emb, metric);
    }
  }
  return m;
}

struct PosPair {
  std::uint32_t a, b;  // positions
};

struct GrowingSet {
  std::vector<PosPair> pairs;
  std::vector<unsigned char> used_a, used_b;
  bool alive = true;

  GrowingSet(std::size_t na, std::size_t nb) : used_a(na, 0), used_b(nb, 0) {}

  void add(PosPair p) {
    pairs.push_back(p);
    used_a[p.a] = 1;
    used_b[p.b] = 1;
  }
};

/// Greedy discovery in one orientation. `dist(i, j)` is the distance between
/// position i of `a` and position j of `b`.
template <class Dist>
std::vector<GrowingSet> grow_match_sets(const Adjacency &adj_a, const Adjacency &adj_b,
                                        Dist &&dist, double tau) {
  const std::size_t na = adj_a.size();
  const std::size_t nb = adj_b.size();
  std::vector<GrowingSet> sets;

  auto attaches = [&](const PosPair &p, const PosPair &q) {
    return adj_a.adjacent(p.a, q.a) && adj_b.adjacent(p.b, q.b);
  };

  for (std::uint32_t i = 0; i < na; ++i) {
    for (std::uint32_t j = 0; j < nb; ++j) {
      if (!(dist(i, j) < tau)) continue;
      const PosPair p{i, j};
      std::optional<std::size_t> joined;
      for (std::size_t si = 0; si < sets.size(); ++si) {
        auto &s = sets[si];
        if (!s.alive || s.used_a[i] || s.used_b[j]) continue;
        const bool connects = std::any_of(s.pairs.begin(), s.pairs.end(),
                                          [&](const PosPair &q) { return attaches(p, q); });
        if (!connects) continue;
        if (!joined) {
          s.add(p);
          joined = si;
          continue;
        }
        // The pair bridges a second set: merge it when the union stays
        // injective. Merged pairs are appended in BFS order from the target
        // so growth order is preserved.
        auto &target = sets[*joined];
        const bool clash = std::any_of(s.pairs.begin(), s.pairs.end(), [&](const PosPair &q) {
          return target.used_a[q.a] || target.used_b[q.b];
        });
        if (clash) continue;
        std::vector<PosPair> pending = s.pairs;
        while (!pending.empty()) {
          auto it = std::find_if(pending.begin(), pending.end(), [&](const PosPair &q) {
            return std::any_of(target.pairs.begin(), target.pairs.end(),
                               [&](const PosPair &t) { return attaches(q, t); });
          });
          target.add(*it);
          pending.erase(it);
        }
        s.alive = false;
      }
      if (!joined) {
        sets.emplace_back(na, nb);
        sets.back().add(p);
      }
    }
  }
  std::erase_if(sets, [](const GrowingSet &s) { return !s.alive; });
  return sets;
}

inline MatchSet to_match_set(const GrowingSet &s, const PreparedGraph &a,
                             const PreparedGraph &b, bool swapped) {
  MatchSet out;
  out.pairs.reserve(s.pairs.size());
  for (const auto &p : s.pairs) {
    if (swapped) {
      out.pairs.push_back({b.indices[p.b], a.indices[p.a]});
    } else {
      out.pairs.push_back({a.indices[p.a], b.indices[p.b]});
    }
  }
  return out;
}

/// True when `x` ranks before `y`: higher score, then more pairs, then the
/// lexicographically smaller sorted pair list.
inline bool better(const ScoredMatch &x, const ScoredMatch &y) {
  if (x.score != y.score) return x.score > y.score;
  if (x.match.size() != y.match.size()) return x.match.size() > y.match.size();
  return x.match.sorted() < y.match.sorted();
}

inline double score_positions(const std::vector<PosPair> &pairs, const DistanceMatrix &dm,
                              bool swapped, double kappa) {
  std::vector<double> d;
  d.reserve(pairs.size());
  for (const auto &p : pairs) d.push_back(swapped ? dm(p.b, p.a) : dm(p.a, p.b));
  return score_from_distances(std::move(d), kappa);
}

}  // namespace detail

/// Match sets accumulated by one greedy pass over node pairs in ascending
/// (G1 position, G2 position) order. A matching pair joins the first set it
/// is adjacent to in both graphs without reusing a node, merges any further
/// sets it bridges, and otherwise seeds a new singleton set.
inline std::vector<MatchSet> find_match_sets(const PreparedGraph &g1, const PreparedGraph &g2,
                                             const EmbeddingTable &emb,
                                             const MatchParams &params) {
  const auto dm = detail::distances(g1, g2, emb, params.metric);
  auto sets = detail::grow_match_sets(
      g1.adj, g2.adj, [&](std::size_t i, std::size_t j) { return dm(i, j); }, params.tau);
  std::vector<MatchSet> out;
  out.reserve(sets.size());
  for (const auto &s : sets) out.push_back(detail::to_match_set(s, g1, g2, false));
  return out;
}

inline std::vector<MatchSet> find_match_sets(const AttentionGraph &g1, const AttentionGraph &g2,
                                             const EmbeddingTable &emb,
                                             const MatchParams &params) {
  return find_match_sets(prepare(g1, emb), prepare(g2, emb), emb, params);
}

/// Best-scoring match set. The greedy pass runs in both orientations so the
/// score is symmetric in its arguments; returns an empty set with score 0
/// when no node pair matches.
inline ScoredMatch best_match(const PreparedGraph &g1, const PreparedGraph &g2,
                              const EmbeddingTable &emb, const MatchParams &params) {
  const auto dm = detail::distances(g1, g2, emb, params.metric);
  ScoredMatch best;
  bool any = false;

  auto consider = [&](const std::vector<detail::GrowingSet> &sets, bool swapped) {
    for (const auto &s : sets) {
      ScoredMatch cand;
      cand.score = detail::score_positions(s.pairs, dm, swapped, params.kappa);
      // Cheap rejection before materializing the pair list.
      if (any && cand.score < best.score) continue;
      cand.match = swapped ? detail::to_match_set(s, g2, g1, true)
                           : detail::to_match_set(s, g1, g2, false);
      if (!any || detail::better(cand, best)) {
        best = std::move(cand);
        any = true;
      }
    }
  };

  consider(detail::grow_match_sets(
               g1.adj, g2.adj, [&](std::size_t i, std::size_t j) { return dm(i, j); },
               params.tau),
           false);
  consider(detail::grow_match_sets(
               g2.adj, g1.adj, [&](std::size_t i, std::size_t j) { return dm(j, i); },
               params.tau),
           true);
  return best;
}

inline ScoredMatch best_match(const AttentionGraph &g1, const AttentionGraph &g2,
                              const EmbeddingTable &emb, const MatchParams &params) {
  return best_match(prepare(g1, emb), prepare(g2, emb), emb, params);
}

/// Exhaustive reference: enumerates every injective, predicate-satisfying,
/// connected pair set and returns the best under the same ordering as
/// best_match. Both graphs must have at most `max_nodes` nodes.
inline ScoredMatch brute_force_mcs(const AttentionGraph &g1, const AttentionGraph &g2,
                                   const EmbeddingTable &emb, const MatchParams &params,
                                   std::size_t max_nodes = 8) {
  if (max_nodes > 8) throw SizeLimitError("brute_force_mcs supports at most 8 nodes");
  if (g1.node_count() > max_nodes || g2.node_count() > max_nodes) {
    throw SizeLimitError("graph exceeds " + std::to_string(max_nodes) +
                         " nodes for exhaustive matching");
  }
  const auto p1 = prepare(g1, emb);
  const auto p2 = prepare(g2, emb);

  struct Cand {
    std::uint32_t a, b;
    double dist;
  };
  std::vector<Cand> cands;
  for (std::uint32_t i = 0; i < p1.size(); ++i) {
    for (std::uint32_t j = 0; j < p2.size(); ++j) {
      const double d = word_distance(p1.word_ids[i], p2.word_ids[j], emb, params.metric);
      if (d < params.tau) cands.push_back({i, j, d});
    }
  }
  const std::size_t m = cands.size();
  std::vector<std::uint64_t> link(m, 0);
  for (std::size_t x = 0; x < m; ++x) {
    for (std::size_t y = 0; y < m; ++y) {
      if (p1.adj.adjacent(cands[x].a, cands[y].a) && p2.adj.adjacent(cands[x].b, cands[y].b)) {
        link[x] |= std::uint64_t{1} << y;
      }
    }
  }

  ScoredMatch best;
  bool any = false;
  std::unordered_set<std::uint64_t> seen;
  std::vector<std::uint64_t> stack;
  for (std::size_t x = 0; x < m; ++x) {
    const std::uint64_t bit = std::uint64_t{1} << x;
    if (seen.insert(bit).second) stack.push_back(bit);
  }
  while (!stack.empty()) {
    const std::uint64_t mask = stack.back();
    stack.pop_back();

    std::vector<double> d;
    std::uint32_t used_a = 0, used_b = 0;
    std::uint64_t frontier = 0;
    ScoredMatch cand;
    for (std::size_t x = 0; x < m; ++x) {
      if (!(mask >> x & 1)) continue;
      d.push_back(cands[x].dist);
      used_a |= 1u << cands[x].a;
      used_b |= 1u << cands[x].b;
      frontier |= link[x];
      cand.match.pairs.push_back({p1.indices[cands[x].a], p2.indices[cands[x].b]});
    }
    cand.score = score_from_distances(std::move(d), params.kappa);
    if (!any || detail::better(cand, best)) {
      best = std::move(cand);
      any = true;
    }

    frontier &= ~mask;
    for (std::size_t y = 0; y < m; ++y) {
      if (!(frontier >> y & 1)) continue;
      if ((used_a >> cands[y].a & 1) || (used_b >> cands[y].b & 1)) continue;
      const std::uint64_t next = mask | std::uint64_t{1} << y;
      if (seen.insert(next).second) stack.push_back(next);
    }
  }
  // Report the winner in growth order.
  if (any) {
    auto &pairs = best.match.pairs;
    std::vector<MatchPair> ordered{pairs.front()};
    std::vector<MatchPair> rest(pairs.begin() + 1, pairs.end());
    while (!rest.empty()) {
      auto it = std::find_if(rest.begin(), rest.end(), [&](const MatchPair &q) {
        return std::any_of(ordered.begin(), ordered.end(), [&](const MatchPair &t) {
          return g1.has_edge(q.g1, t.g1) && g2.has_edge(q.g2, t.g2);
        });
      });
      ordered.push_back(*it);
      rest.erase(it);
    }
    pairs = std::move(ordered);
  }
  return best;
}

}  // namespace attnsearch
