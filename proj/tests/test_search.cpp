//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <random>

#include <gtest/gtest.h>

#include "attnsearch/search.hpp"
#include "attnsearch/synthetic.hpp"
#include "fixtures.hpp"

using namespace attnsearch;
namespace fx = attnsearch::testing;

namespace {

struct Fixture {
  SyntheticCorpus corpus;
  CorpusIndex index;
  std::vector<AttentionGraph> queries;
};

Fixture make_fixture(std::size_t sentences, std::size_t dim, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.vocabulary = 400;
  cfg.dimension = dim;
  cfg.seed = seed;
  Fixture f{make_synthetic_corpus(sentences, cfg), {}, {}};
  f.index = build_index(f.corpus.records, f.corpus.embeddings, {}, {}, f.corpus.meta, 2);
  std::mt19937_64 rng(seed + 100);
  for (int i = 0; i < 25; ++i) {
    auto rec = synthetic_sentence(f.corpus.embeddings, "q", i, 4 + i % 8, rng);
    f.queries.push_back(build_graph(rec, f.corpus.embeddings, {}));
  }
  return f;
}

}  // namespace

TEST(Search, CandidatePruningIsLossless) {
  for (std::size_t dim : {8, 32}) {
    const auto f = make_fixture(600, dim, dim);
    const Searcher s(f.index, f.corpus.embeddings, {});
    for (const auto &q : f.queries) {
      const auto fast = s.search(q, {});
      ASSERT_EQ(fast, s.search_unoptimized(q, {}));
      ASSERT_EQ(fast, search_rebuilding(f.corpus.records, f.corpus.embeddings, {}, q, {}));
    }
  }
}

TEST(Search, EveryHitIsACandidateAndEveryNonCandidateScoresZero) {
  const auto f = make_fixture(300, 16, 2);
  const Searcher s(f.index, f.corpus.embeddings, {});
  for (const auto &q : f.queries) {
    const auto cand = s.candidates(q);
    const std::set<SentenceKey> cset(cand.begin(), cand.end());
    for (const auto &g : f.index.graphs) {
      const double score = best_match(q, g, f.corpus.embeddings, {}).score;
      ASSERT_EQ(score > 0.0, cset.count(g.key()) == 1) << to_string(g.key());
    }
  }
}

TEST(Search, HitsSortedAndThreadCountInvariant) {
  const auto f = make_fixture(400, 16, 8);
  const Searcher s(f.index, f.corpus.embeddings, {});
  for (const auto &q : f.queries) {
    const auto one = s.search(q, {0.0, std::nullopt, 1});
    ASSERT_EQ(one, s.search(q, {0.0, std::nullopt, 5}));
    for (std::size_t i = 1; i < one.size(); ++i) {
      const auto &a = one[i - 1], &b = one[i];
      ASSERT_TRUE(a.score > b.score || (a.score == b.score && a.key() < b.key()));
    }
    for (const auto &h : one) {
      const auto *g = f.index.find(h.key());
      ASSERT_TRUE(is_valid_match_set(h.match, q, *g, f.corpus.embeddings, {}));
      ASSERT_DOUBLE_EQ(h.score, similarity_score(h.match, q, *g, f.corpus.embeddings, {}));
    }
  }
}

TEST(Search, TopKAndThresholdAreApplied) {
  const auto f = make_fixture(300, 16, 3);
  const Searcher s(f.index, f.corpus.embeddings, {});
  const auto &q = f.queries[10];
  const auto all = s.search(q, {});
  ASSERT_GT(all.size(), 3u);
  const auto top = s.search(q, {0.0, 3, 1});
  EXPECT_EQ(top, std::vector<SearchHit>(all.begin(), all.begin() + 3));

  // The threshold is exclusive.
  const double cut = all[1].score;
  const auto above = s.search(q, {cut, std::nullopt, 1});
  for (const auto &h : above) EXPECT_GT(h.score, cut);
  const auto n = std::count_if(all.begin(), all.end(), [&](const SearchHit &h) { return h.score > cut; });
  EXPECT_EQ(above.size(), static_cast<std::size_t>(n));
}

TEST(Search, EmptyQueryHasNoHits) {
  const auto f = make_fixture(50, 16, 4);
  AttentionGraph empty;
  EXPECT_TRUE(search(f.index, f.corpus.embeddings, empty, {}).empty());
}

TEST(Search, StaleParametersAreRejected) {
  const auto f = make_fixture(30, 16, 5);
  MatchParams mp;
  mp.kappa = 3.0;
  EXPECT_THROW(Searcher(f.index, f.corpus.embeddings, mp), StaleIndexError);
}

TEST(Search, RankDocumentsTakesMaxPerDocument) {
  std::vector<SearchHit> hits = {{"b", 0, 5.0, {}}, {"a", 2, 4.0, {}}, {"b", 3, 7.0, {}},
                                 {"a", 1, 4.0, {}}, {"c", 0, 7.0, {}}};
  sort_hits(hits);
  const auto docs = rank_documents(hits);
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].doc_id, "b");
  EXPECT_EQ(docs[0].best_sent_id, 3u);
  EXPECT_EQ(docs[1].doc_id, "c");
  EXPECT_EQ(docs[2].doc_id, "a");
  EXPECT_EQ(docs[2].best_sent_id, 1u);
}

TEST(Search, HandBuiltRanking) {
  const auto emb = fx::table_from({{"steal", {1, 0, 0}},
                                        {"exfiltrate", {0.95, 0.1, 0}},
                                        {"password", {0, 1, 0}},
                                        {"credential", {0, 0.97, 0.1}},
                                        {"printer", {0, 0, 1}}});
  auto rec = [](std::string doc, std::vector<std::string> w, std::vector<double> a) {
    return AttentionRecord{std::move(doc), 0, std::move(w), std::move(a)};
  };
  const std::vector<AttentionRecord> records = {
      rec("exact", {"steal", "password"}, {0, 0.5, 0, 0}),
      rec("synonym", {"exfiltrate", "credential"}, {0, 0.5, 0, 0}),
      rec("unlinked", {"steal", "password"}, {0, 0.1, 0, 0}),
      rec("unrelated", {"printer"}, {0}),
  };
  const auto index = build_index(records, emb, {}, {}, {}, 1);
  const auto q = build_graph(rec("q", {"steal", "password"}, {0, 0.9, 0.9, 0}), emb, {});
  const auto hits = search(index, emb, q, {});
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].doc_id, "exact");
  EXPECT_NEAR(hits[0].score, 2.72 * 2.72, 1e-12);
  EXPECT_EQ(hits[1].doc_id, "synonym");
  EXPECT_EQ(hits[1].match.size(), 2u);
  EXPECT_EQ(hits[2].doc_id, "unlinked");
  EXPECT_NEAR(hits[2].score, 2.72, 1e-12);
}

TEST(Attribution, PlantedActorRanksFirstWithExactCount) {
  const auto f = fx::planted_attribution("fin7", 4);
  // Scores: planted sentences reach kappa^3; filler never matches.
  const auto votes = attribute(f.index, f.emb, {f.behavior}, {}, 0.0);
  ASSERT_EQ(votes.size(), 1u);
  EXPECT_EQ(votes[0], (ActorVotes{"fin7", 4}));
}

TEST(Attribution, ThresholdFiltersWeakMatches) {
  const auto f = fx::planted_attribution("turla", 3);
  auto partial = f.behavior;
  partial.nodes.resize(1);  // only "dump"
  partial.edges.clear();
  EXPECT_EQ(attribute(f.index, f.emb, {partial}, {}, 0.0), (std::vector<ActorVotes>{{"turla", 3}}));
  EXPECT_TRUE(attribute(f.index, f.emb, {partial}, {}, 2.72).empty());
}

TEST(Attribution, TiesAreAlphabeticalAndDocumentsCountOnce) {
  const auto emb = fx::orthogonal_table({"alpha", "beta"});
  std::vector<AttentionRecord> records = {{"d1", 0, {"alpha"}, {0}},
                                          {"d1", 1, {"alpha", "beta"}, {0, 0.9, 0, 0}},
                                          {"d2", 0, {"beta"}, {0}},
                                          {"d3", 0, {"alpha"}, {0}}};
  DocMetaMap meta;
  meta.emplace("d1", DocMeta{"d1", std::nullopt, "zeta", std::nullopt, std::nullopt});
  meta.emplace("d2", DocMeta{"d2", std::nullopt, "alpha", std::nullopt, std::nullopt});
  meta.emplace("d3", DocMeta{"d3", std::nullopt, std::nullopt, std::nullopt, std::nullopt});
  const auto index = build_index(records, emb, {}, {}, meta, 1);
  const auto qa = build_graph({"q", 0, {"alpha"}, {0}}, emb, {});
  const auto qb = build_graph({"q", 1, {"beta"}, {0}}, emb, {});
  ASSERT_EQ(qa.node_count(), 1u);
  const auto votes = attribute(index, emb, {qa, qb}, {}, 0.0);
  EXPECT_EQ(votes, (std::vector<ActorVotes>{{"alpha", 1}, {"zeta", 1}}));
}

TEST(Attribution, UnlabeledIndexIsAnError) {
  const auto emb = fx::orthogonal_table({"alpha"});
  const auto index = build_index({{"d", 0, {"alpha"}, {0}}}, emb, {}, {}, {}, 1);
  EXPECT_THROW(attribute(index, emb, {}, {}, 0.0), AttributionError);
}
