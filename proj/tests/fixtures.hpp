//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Labeled corpora shared by the unit tests and the acceptance suite.

#pragma once

#include <string>
#include <vector>

#include "attnsearch/eval.hpp"
#include "attnsearch/search.hpp"
#include "support.hpp"

namespace attnsearch::testing {

struct BehaviorData {
  EmbeddingTable emb;
  EvalCorpus corpus;
  std::vector<BehaviorLabel> labels;
};

/// Each behavior owns a word triple. Its description sentence is the triple
/// chained by attention (a-b-c). Each of its case sentences holds the chained
/// triple followed by the triples of every other behavior with no attention
/// among them. Word overlap alone cannot tell cases apart; structure can.
inline BehaviorData separable_behaviors(std::size_t behaviors, std::size_t cases_per_behavior) {
  auto triple = [](std::size_t b) {
    const auto s = std::to_string(b);
    return std::vector<std::string>{"act" + s, "obj" + s, "via" + s};
  };
  std::vector<std::string> vocab;
  for (std::size_t b = 0; b < behaviors; ++b) {
    for (auto &w : triple(b)) vocab.push_back(w);
  }
  BehaviorData out{orthogonal_table(vocab), {}, {}};

  auto chained = [](std::string doc, std::uint32_t sent, std::vector<std::string> words) {
    const std::size_t n = words.size();
    AttentionRecord r{std::move(doc), sent, std::move(words), std::vector<double>(n * n, 0.0)};
    r.attention[0 * n + 1] = 0.6;
    r.attention[1 * n + 2] = 0.6;
    return r;
  };

  for (std::size_t b = 0; b < behaviors; ++b) {
    BehaviorLabel label;
    label.behavior_id = "behavior-" + std::to_string(b);
    const SentenceKey desc{"desc-" + std::to_string(b), 0};
    out.corpus.queries.emplace(desc, chained(desc.doc_id, 0, triple(b)));
    label.description.push_back(desc);
    for (std::size_t c = 0; c < cases_per_behavior; ++c) {
      auto words = triple(b);
      for (std::size_t o = 0; o < behaviors; ++o) {
        if (o == b) continue;
        for (auto &w : triple(o)) words.push_back(w);
      }
      const SentenceKey key{"case-" + std::to_string(b), static_cast<std::uint32_t>(c)};
      out.corpus.cases.emplace(key, chained(key.doc_id, key.sent_id, std::move(words)));
      label.cases.push_back(key);
    }
    out.labels.push_back(std::move(label));
  }
  return out;
}

// Three actors with five documents each. The first `planted_docs` documents
// of `planted` carry a sentence with the behavior phrase; every other
// document carries filler only.
struct PlantedAttribution {
  EmbeddingTable emb;
  CorpusIndex index;
  AttentionGraph behavior;
};

inline PlantedAttribution planted_attribution(const std::string &planted,
                                              std::size_t planted_docs) {
  PlantedAttribution f{
      orthogonal_table({"dump", "lsass", "memory", "printer", "toner", "paper", "coffee"}), {}, {}};
  const std::vector<std::string> actors = {"apt28", "fin7", "turla"};
  std::vector<AttentionRecord> records;
  DocMetaMap meta;
  const std::vector<double> chain = {0, 0.5, 0, 0, 0, 0.5, 0, 0, 0};
  for (const auto &actor : actors) {
    for (std::size_t d = 0; d < 5; ++d) {
      const std::string doc = actor + "-" + std::to_string(d);
      meta.emplace(doc, DocMeta{doc, std::nullopt, actor, std::nullopt, std::nullopt});
      records.push_back({doc, 0, {"printer", "toner", "paper"}, chain});
      if (actor == planted && d < planted_docs) {
        records.push_back({doc, 1, {"dump", "lsass", "memory"}, chain});
      } else {
        records.push_back({doc, 1, {"coffee", "toner", "paper"}, chain});
      }
    }
  }
  f.index = build_index(records, f.emb, {}, {}, meta, 1);
  f.behavior = build_graph({"q", 0, {"dump", "lsass", "memory"}, chain}, f.emb, {});
  return f;
}

}  // namespace attnsearch::testing
