//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Seeded synthetic corpora for benchmarks and tests.
//
// The vocabulary is split into synonym groups. Members of a group are noisy
// copies of a shared random direction (half-cosine distance around 0.1);
// words from different groups are independent Gaussian directions, which in
// a few hundred dimensions almost never fall within tau of each other.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "attnsearch/interchange.hpp"

namespace attnsearch {

struct SyntheticConfig {
  std::size_t vocabulary = 4000;
  std::size_t dimension = 256;
  std::size_t synonym_group = 2;
  double synonym_noise = 0.5;
  std::size_t min_words = 8;
  std::size_t max_words = 14;
  std::size_t sentences_per_doc = 10;
  std::vector<std::string> actors = {"apt28", "apt29", "fin7", "lazarus", "turla"};
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  EmbeddingTable embeddings;
  std::vector<AttentionRecord> records;
  DocMetaMap meta;
};

inline std::string synthetic_word(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "t%05zu", i);
  return buf;
}

inline EmbeddingTable synthetic_embeddings(const SyntheticConfig &cfg) {
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> normal;
  const std::size_t dim = cfg.dimension;
  const double noise = cfg.synonym_noise / std::sqrt(static_cast<double>(dim));
  EmbeddingTable emb(dim);
  std::vector<double> centre(dim), v(dim);
  for (std::size_t w = 0; w < cfg.vocabulary; ++w) {
    if (w % std::max<std::size_t>(1, cfg.synonym_group) == 0) {
      double sq = 0.0;
      for (auto &x : centre) {
        x = normal(rng);
        sq += x * x;
      }
      for (auto &x : centre) x /= std::sqrt(sq);
    }
    for (std::size_t i = 0; i < dim; ++i) v[i] = centre[i] + noise * normal(rng);
    emb.add(synthetic_word(w), v);
  }
  return emb;
}

/// Row-major attention where every word attends strongly (0.2-0.6) to one or
/// two partners and weakly (< 0.1) to the rest.
inline std::vector<double> synthetic_attention(std::size_t n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> weak(0.0, 0.1);
  std::uniform_real_distribution<double> strong(0.2, 0.6);
  std::uniform_int_distribution<std::size_t> partner(0, n - 1);
  std::uniform_int_distribution<int> partners(1, 2);
  std::vector<double> att(n * n);
  for (auto &a : att) a = weak(rng);
  if (n < 2) return att;
  for (std::size_t i = 0; i < n; ++i) {
    const int k = partners(rng);
    for (int p = 0; p < k; ++p) {
      std::size_t j = partner(rng);
      if (j == i) j = (j + 1) % n;
      att[i * n + j] = strong(rng);
    }
  }
  return att;
}

inline AttentionRecord synthetic_sentence(const EmbeddingTable &emb, std::string doc_id,
                                          std::uint32_t sent_id, std::size_t words,
                                          std::mt19937_64 &rng) {
  std::uniform_int_distribution<std::size_t> pick(0, emb.size() - 1);
  AttentionRecord rec;
  rec.doc_id = std::move(doc_id);
  rec.sent_id = sent_id;
  for (std::size_t i = 0; i < words; ++i) rec.words.push_back(emb.word(pick(rng)));
  rec.attention = synthetic_attention(words, rng);
  return rec;
}

inline SyntheticCorpus make_synthetic_corpus(std::size_t sentences, const SyntheticConfig &cfg) {
  SyntheticCorpus out;
  out.embeddings = synthetic_embeddings(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> length(cfg.min_words, cfg.max_words);
  std::uniform_int_distribution<std::size_t> actor(0, cfg.actors.empty() ? 0 : cfg.actors.size() - 1);
  const std::size_t per_doc = std::max<std::size_t>(1, cfg.sentences_per_doc);
  out.records.reserve(sentences);
  for (std::size_t s = 0; s < sentences; ++s) {
    char doc[24];
    std::snprintf(doc, sizeof doc, "doc%06zu", s / per_doc);
    if (s % per_doc == 0) {
      DocMeta meta{doc, "synthetic", std::nullopt, std::nullopt, std::nullopt};
      if (!cfg.actors.empty()) meta.actor = cfg.actors[actor(rng)];
      out.meta.emplace(doc, std::move(meta));
    }
    out.records.push_back(synthetic_sentence(out.embeddings, doc,
                                             static_cast<std::uint32_t>(s % per_doc),
                                             length(rng), rng));
  }
  return out;
}

}  // namespace attnsearch
