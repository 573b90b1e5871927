//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Fixture builders shared by the test binaries.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "attnsearch/graph.hpp"
#include "attnsearch/interchange.hpp"

namespace attnsearch::testing {

inline EmbeddingTable table_from(
    std::initializer_list<std::pair<std::string, std::vector<double>>> rows) {
  EmbeddingTable t;
  for (const auto &[w, v] : rows) t.add(w, v);
  return t;
}

/// Each word gets its own basis vector, so distinct words sit at distance
/// 0.5 under half-cosine.
inline EmbeddingTable orthogonal_table(const std::vector<std::string> &words) {
  EmbeddingTable t;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::vector<double> v(words.size(), 0.0);
    v[i] = 1.0;
    t.add(words[i], v);
  }
  return t;
}

/// Graph with node i carrying words[i] and the given undirected edges.
inline AttentionGraph make_graph(const std::vector<std::string> &words,
                                 const std::vector<std::pair<std::uint32_t, std::uint32_t>> &edges,
                                 std::string doc = "g", std::uint32_t sent = 0) {
  AttentionGraph g;
  g.doc_id = std::move(doc);
  g.sent_id = sent;
  for (std::uint32_t i = 0; i < words.size(); ++i) g.nodes.push_back({i, words[i]});
  for (auto [a, b] : edges) {
    if (a > b) std::swap(a, b);
    g.edges.push_back({a, b, 1.0});
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const Edge &x, const Edge &y) {
    return std::pair{x.a, x.b} < std::pair{y.a, y.b};
  });
  return g;
}

inline AttentionGraph path_graph(const std::vector<std::string> &words) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> e;
  for (std::uint32_t i = 1; i < words.size(); ++i) e.emplace_back(i - 1, i);
  return make_graph(words, e);
}

/// Random vocabulary in a low dimension so that synonyms are common.
inline EmbeddingTable random_table(std::size_t words, std::size_t dim, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal;
  EmbeddingTable t;
  for (std::size_t i = 0; i < words; ++i) {
    std::vector<double> v(dim);
    for (auto &x : v) x = normal(rng);
    t.add("w" + std::to_string(i), v);
  }
  return t;
}

inline AttentionGraph random_graph(const EmbeddingTable &emb, std::size_t max_nodes,
                                   double edge_prob, std::mt19937_64 &rng,
                                   bool unique_words = false) {
  std::uniform_int_distribution<std::size_t> size(1, max_nodes);
  std::uniform_int_distribution<std::size_t> pick(0, emb.size() - 1);
  std::bernoulli_distribution coin(edge_prob);
  const std::size_t n = size(rng);
  std::vector<std::string> words;
  std::vector<std::size_t> ids;
  while (words.size() < n) {
    const auto id = pick(rng);
    if (unique_words && std::find(ids.begin(), ids.end(), id) != ids.end()) continue;
    ids.push_back(id);
    words.push_back(emb.word(id));
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.emplace_back(i, j);
    }
  }
  return make_graph(words, edges);
}

/// Scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string &tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("attnsearch-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

  std::filesystem::path write(const std::string &name, const std::string &content) const {
    std::ofstream out(path_ / name, std::ios::binary);
    out << content;
    return path_ / name;
  }

private:
  std::filesystem::path path_;
};

}  // namespace attnsearch::testing
