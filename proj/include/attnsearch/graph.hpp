//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "attnsearch/error.hpp"
#include "attnsearch/interchange.hpp"
#include "attnsearch/stopwords.hpp"

namespace attnsearch {

struct Node {
  std::uint32_t index = 0;  // position in the source sentence
  std::string word;

  friend bool operator==(const Node &, const Node &) = default;
};

/// Undirected edge between two node indices, `a < b`.
struct Edge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double weight = 0.0;

  friend bool operator==(const Edge &, const Edge &) = default;
};

/// Dense symmetric adjacency over node positions (not sentence indices).
class Adjacency {
public:
  Adjacency() = default;
  explicit Adjacency(std::size_t n) : n_(n), bits_(n * n, 0) {}

  void connect(std::size_t i, std::size_t j) {
    bits_[i * n_ + j] = 1;
    bits_[j * n_ + i] = 1;
  }
  bool adjacent(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }
  std::size_t size() const noexcept { return n_; }

private:
  std::size_t n_ = 0;
  std::vector<unsigned char> bits_;
};

class AttentionGraph {
public:
  std::string doc_id;
  std::uint32_t sent_id = 0;
  std::vector<Node> nodes;  // ascending by index
  std::vector<Edge> edges;  // ascending by (a, b)

  SentenceKey key() const { return {doc_id, sent_id}; }
  std::size_t node_count() const noexcept { return nodes.size(); }
  std::size_t edge_count() const noexcept { return edges.size(); }

  /// Position of the node with sentence index `index` in `nodes`.
  std::optional<std::size_t> position_of(std::uint32_t index) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), index,
                               [](const Node &n, std::uint32_t i) { return n.index < i; });
    if (it == nodes.end() || it->index != index) return std::nullopt;
    return static_cast<std::size_t>(it - nodes.begin());
  }

  bool has_edge(std::uint32_t i, std::uint32_t j) const {
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{i, j},
                               [](const Edge &e, const std::pair<std::uint32_t, std::uint32_t> &p) {
                                 return std::pair{e.a, e.b} < p;
                               });
    return it != edges.end() && it->a == i && it->b == j;
  }

  Adjacency adjacency() const {
    Adjacency adj(nodes.size());
    for (const auto &e : edges) adj.connect(*position_of(e.a), *position_of(e.b));
    return adj;
  }

  friend bool operator==(const AttentionGraph &, const AttentionGraph &) = default;
};

/// Checks the structural invariants: sorted unique nodes, no self-loops,
/// edges between existing nodes, sorted unique edges, weights above
/// `threshold`.
inline bool is_valid_graph(const AttentionGraph &g, double threshold) {
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].word.empty()) return false;
    if (i && g.nodes[i - 1].index >= g.nodes[i].index) return false;
  }
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto &e = g.edges[i];
    if (e.a >= e.b) return false;
    if (!g.position_of(e.a) || !g.position_of(e.b)) return false;
    if (!(e.weight > threshold) || e.weight > 1.0) return false;
    if (i && std::pair{g.edges[i - 1].a, g.edges[i - 1].b} >= std::pair{e.a, e.b}) return false;
  }
  return true;
}

struct GraphParams {
  double attention_threshold = 0.15;
  std::set<std::string, std::less<>> stopwords = default_stopwords();
  bool keep_isolated_nodes = true;
  std::size_t max_nodes = 128;

  void validate() const {
    if (!(attention_threshold > 0.0 && attention_threshold < 1.0)) {
      throw ParamError("attention_threshold must be in (0,1)");
    }
    if (max_nodes == 0) throw ParamError("max_nodes must be positive");
  }

  friend bool operator==(const GraphParams &, const GraphParams &) = default;
};

/// Per-build counters; the caller decides how to report them.
struct GraphBuildStats {
  std::size_t records = 0;
  std::size_t oov_words = 0;
  std::size_t truncated_graphs = 0;

  GraphBuildStats &operator+=(const GraphBuildStats &o) {
    records += o.records;
    oov_words += o.oov_words;
    truncated_graphs += o.truncated_graphs;
    return *this;
  }
};

/// Placeholder tokens produced by IoC normalization, e.g. `<ip>`.
inline bool is_placeholder(std::string_view w) {
  if (w.size() < 3 || w.front() != '<' || w.back() != '>') return false;
  return std::all_of(w.begin() + 1, w.end() - 1, [](unsigned char c) {
    return std::islower(c) || c == '_';
  });
}

inline bool is_punctuation(std::string_view w) {
  return std::all_of(w.begin(), w.end(), [](unsigned char c) {
    return std::ispunct(c) || std::isspace(c);
  });
}

/// Content-word filter. Words arrive lemmatized and lowercased, so the
/// surviving word is returned unchanged.
inline std::vector<std::pair<std::uint32_t, std::string>>
preprocess_words(const std::vector<std::string> &words, const GraphParams &params) {
  std::vector<std::pair<std::uint32_t, std::string>> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto &w = words[i];
    if (is_placeholder(w)) {
      out.emplace_back(static_cast<std::uint32_t>(i), w);
      continue;
    }
    if (w.empty() || is_punctuation(w) || params.stopwords.count(w)) continue;
    out.emplace_back(static_cast<std::uint32_t>(i), w);
  }
  return out;
}

namespace detail {

inline AttentionGraph select_nodes(const AttentionRecord &rec, const EmbeddingTable &emb,
                                   const GraphParams &params, GraphBuildStats *stats) {
  AttentionGraph g;
  g.doc_id = rec.doc_id;
  g.sent_id = rec.sent_id;
  GraphBuildStats local;
  local.records = 1;
  for (auto &[index, word] : preprocess_words(rec.words, params)) {
    if (!emb.contains(word)) {
      ++local.oov_words;
      continue;
    }
    if (g.nodes.size() == params.max_nodes) {
      local.truncated_graphs = 1;
      break;
    }
    g.nodes.push_back({index, std::move(word)});
  }
  if (stats) *stats += local;
  return g;
}

}  // namespace detail

/// Thresholded attention graph of one sentence. An edge joins two kept words
/// when max(attention[i][j], attention[j][i]) exceeds the threshold.
inline AttentionGraph build_graph(const AttentionRecord &rec, const EmbeddingTable &emb,
                                  const GraphParams &params,
                                  GraphBuildStats *stats = nullptr) {
  AttentionGraph g = detail::select_nodes(rec, emb, params, stats);
  for (std::size_t p = 0; p < g.nodes.size(); ++p) {
    for (std::size_t q = p + 1; q < g.nodes.size(); ++q) {
      const auto i = g.nodes[p].index;
      const auto j = g.nodes[q].index;
      const double w = std::max(rec.at(i, j), rec.at(j, i));
      if (w > params.attention_threshold) g.edges.push_back({i, j, w});
    }
  }
  if (!params.keep_isolated_nodes) {
    std::vector<Node> kept;
    for (auto &n : g.nodes) {
      const bool linked = std::any_of(g.edges.begin(), g.edges.end(), [&](const Edge &e) {
        return e.a == n.index || e.b == n.index;
      });
      if (linked) kept.push_back(std::move(n));
    }
    g.nodes = std::move(kept);
  }
  return g;
}

/// Same node selection as build_graph, but every pair of nodes is joined
/// with weight 1.
inline AttentionGraph build_fully_connected(const AttentionRecord &rec,
                                            const EmbeddingTable &emb,
                                            const GraphParams &params,
                                            GraphBuildStats *stats = nullptr) {
  AttentionGraph g = detail::select_nodes(rec, emb, params, stats);
  for (std::size_t p = 0; p < g.nodes.size(); ++p) {
    for (std::size_t q = p + 1; q < g.nodes.size(); ++q) {
      g.edges.push_back({g.nodes[p].index, g.nodes[q].index, 1.0});
    }
  }
  return g;
}

/// A record with uniform zero attention over `words`, for building query
/// graphs without a model.
inline AttentionRecord record_from_words(std::string doc_id, std::uint32_t sent_id,
                                         std::vector<std::string> words) {
  AttentionRecord rec{std::move(doc_id), sent_id, std::move(words), {}};
  rec.attention.assign(rec.words.size() * rec.words.size(), 0.0);
  return rec;
}

inline json to_json(const AttentionGraph &g) {
  json nodes = json::array();
  for (const auto &n : g.nodes) nodes.push_back(json::array({n.index, n.word}));
  json edges = json::array();
  for (const auto &e : g.edges) edges.push_back(json::array({e.a, e.b, e.weight}));
  return json{{"doc_id", g.doc_id},
              {"sent_id", g.sent_id},
              {"nodes", std::move(nodes)},
              {"edges", std::move(edges)}};
}

inline AttentionGraph graph_from_json(const json &j) {
  AttentionGraph g;
  g.doc_id = j.at("doc_id").get<std::string>();
  g.sent_id = j.at("sent_id").get<std::uint32_t>();
  for (const auto &n : j.at("nodes")) {
    g.nodes.push_back({n.at(0).get<std::uint32_t>(), n.at(1).get<std::string>()});
  }
  for (const auto &e : j.at("edges")) {
    g.edges.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>(),
                       e.at(2).get<double>()});
  }
  return g;
}

}  // namespace attnsearch
