//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Evaluation protocols: balanced per-behavior retrieval with a threshold
// sweep, graph-builder / embedding ablations, and query latency benchmarks.
//
// Behavior labels file (JSON lines):
//   {"behavior_id":"T1055",
//    "description":[["q-T1055",0],["q-T1055",1]],   query-side sentences
//    "cases":[["doc12",3],["doc40",0]]}              positive case sentences

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "attnsearch/error.hpp"
#include "attnsearch/graph.hpp"
#include "attnsearch/index.hpp"
#include "attnsearch/interchange.hpp"
#include "attnsearch/matcher.hpp"
#include "attnsearch/search.hpp"
#include "attnsearch/synthetic.hpp"

namespace attnsearch {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const PRF &, const PRF &) = default;
};

/// Standard definitions with 0/0 taken as 0.
inline PRF precision_recall_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  PRF m;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision + m.recall > 0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Behavior cases

struct BehaviorLabel {
  std::string behavior_id;
  std::vector<SentenceKey> description;
  std::vector<SentenceKey> cases;
};

struct BehaviorCase {
  std::string behavior_id;
  std::vector<SentenceKey> description_sents;
  std::vector<SentenceKey> positives;  // sorted
  std::vector<SentenceKey> negatives;  // sorted, same size as positives
};

namespace detail {

inline std::vector<SentenceKey> keys_from_json(const json &arr, std::size_t lineno) {
  if (!arr.is_array()) throw ParseError("expected an array of [doc_id, sent_id]", lineno);
  std::vector<SentenceKey> out;
  for (const auto &k : arr) {
    if (!k.is_array() || k.size() != 2 || !k[0].is_string() || !k[1].is_number_unsigned()) {
      throw ParseError("sentence id must be [doc_id, sent_id]", lineno);
    }
    out.push_back({k[0].get<std::string>(), k[1].get<std::uint32_t>()});
  }
  return out;
}

}  // namespace detail

inline std::vector<BehaviorLabel> parse_behavior_labels(std::istream &in) {
  std::vector<BehaviorLabel> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    const json j = detail::parse_json_line(line, lineno);
    BehaviorLabel label;
    label.behavior_id = detail::require_string(j, "behavior_id", lineno);
    if (!seen.insert(label.behavior_id).second) {
      throw DuplicateError("duplicate behavior '" + label.behavior_id + "'", lineno);
    }
    label.description = detail::keys_from_json(j.value("description", json::array()), lineno);
    label.cases = detail::keys_from_json(j.value("cases", json::array()), lineno);
    out.push_back(std::move(label));
  }
  return out;
}

inline std::vector<BehaviorLabel> read_behavior_labels(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_behavior_labels(in);
}

inline void write_behavior_labels(std::ostream &out, const std::vector<BehaviorLabel> &labels) {
  auto keys = [](const std::vector<SentenceKey> &ks) {
    json arr = json::array();
    for (const auto &k : ks) arr.push_back(json::array({k.doc_id, k.sent_id}));
    return arr;
  };
  for (const auto &l : labels) {
    out << json{{"behavior_id", l.behavior_id},
                {"description", keys(l.description)},
                {"cases", keys(l.cases)}}
               .dump()
        << '\n';
  }
}

/// Positives are a behavior's own cases; negatives are drawn uniformly
/// without replacement, in equal number, from the cases of other behaviors.
inline std::vector<BehaviorCase> build_behavior_cases(const std::vector<BehaviorLabel> &labels,
                                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<BehaviorCase> out;
  for (const auto &label : labels) {
    std::set<SentenceKey> positives(label.cases.begin(), label.cases.end());
    if (positives.empty()) {
      throw EvalError("behavior '" + label.behavior_id + "' has no positive cases");
    }
    std::set<SentenceKey> pool_set;
    for (const auto &other : labels) {
      if (other.behavior_id == label.behavior_id) continue;
      for (const auto &k : other.cases) {
        if (!positives.count(k)) pool_set.insert(k);
      }
    }
    if (pool_set.size() < positives.size()) {
      throw EvalError("behavior '" + label.behavior_id + "' needs " +
                      std::to_string(positives.size()) + " negatives but only " +
                      std::to_string(pool_set.size()) + " foreign cases exist");
    }
    const std::vector<SentenceKey> pool(pool_set.begin(), pool_set.end());
    BehaviorCase c;
    c.behavior_id = label.behavior_id;
    c.description_sents = label.description;
    c.positives.assign(positives.begin(), positives.end());
    std::sample(pool.begin(), pool.end(), std::back_inserter(c.negatives), positives.size(), rng);
    std::sort(c.negatives.begin(), c.negatives.end());
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Threshold sweep

struct CaseScores {
  std::string behavior_id;
  std::vector<double> positives;
  std::vector<double> negatives;
};

template <class Scorer>
std::vector<CaseScores> score_cases(const std::vector<BehaviorCase> &cases, Scorer &&scorer) {
  std::vector<CaseScores> out;
  out.reserve(cases.size());
  for (const auto &c : cases) {
    CaseScores s{c.behavior_id, {}, {}};
    for (const auto &k : c.positives) s.positives.push_back(scorer(c, k));
    for (const auto &k : c.negatives) s.negatives.push_back(scorer(c, k));
    out.push_back(std::move(s));
  }
  return out;
}

struct ThresholdResult {
  double threshold = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
  PRF micro;
  PRF macro;
};

struct BehaviorResult {
  std::string behavior_id;
  std::size_t tp = 0, fp = 0, fn = 0;
  PRF metrics;
};

struct EvalReport {
  std::vector<ThresholdResult> sweep;
  double best_threshold = 0.0;
  double best_f1 = 0.0;
  std::vector<BehaviorResult> per_behavior;  // at best_threshold
  std::size_t cases = 0;
  double scoring_seconds = 0.0;
};

/// A case is retrieved at threshold t when its score exceeds t. Counts are
/// pooled over behaviors (micro) and averaged per behavior (macro); the best
/// threshold maximizes micro F1, ties going to the smaller threshold.
inline EvalReport sweep_thresholds(const std::vector<CaseScores> &scores,
                                   const std::vector<double> &thresholds) {
  if (thresholds.empty()) throw EvalError("threshold list is empty");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw EvalError("thresholds must be sorted ascending");
  }
  EvalReport report;
  for (const auto &s : scores) report.cases += s.positives.size() + s.negatives.size();

  auto per_behavior = [&](double t) {
    std::vector<BehaviorResult> out;
    for (const auto &s : scores) {
      BehaviorResult r{s.behavior_id, 0, 0, 0, {}};
      for (double x : s.positives) (x > t ? r.tp : r.fn)++;
      for (double x : s.negatives) {
        if (x > t) ++r.fp;
      }
      r.metrics = precision_recall_f1(r.tp, r.fp, r.fn);
      out.push_back(std::move(r));
    }
    return out;
  };

  bool first = true;
  for (double t : thresholds) {
    ThresholdResult row;
    row.threshold = t;
    const auto rows = per_behavior(t);
    for (const auto &r : rows) {
      row.tp += r.tp;
      row.fp += r.fp;
      row.fn += r.fn;
      row.macro.precision += r.metrics.precision;
      row.macro.recall += r.metrics.recall;
      row.macro.f1 += r.metrics.f1;
    }
    if (!rows.empty()) {
      const double n = static_cast<double>(rows.size());
      row.macro.precision /= n;
      row.macro.recall /= n;
      row.macro.f1 /= n;
    }
    row.micro = precision_recall_f1(row.tp, row.fp, row.fn);
    if (first || row.micro.f1 > report.best_f1) {
      report.best_f1 = row.micro.f1;
      report.best_threshold = t;
      first = false;
    }
    report.sweep.push_back(row);
  }
  report.per_behavior = per_behavior(report.best_threshold);
  return report;
}

template <class Scorer>
EvalReport sweep_thresholds(const std::vector<BehaviorCase> &cases, Scorer &&scorer,
                            const std::vector<double> &thresholds) {
  const auto start = std::chrono::steady_clock::now();
  const auto scores = score_cases(cases, scorer);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto report = sweep_thresholds(scores, thresholds);
  report.scoring_seconds = elapsed;
  return report;
}

/// `timing` adds the non-deterministic scoring time.
inline json to_json(const EvalReport &r, bool timing = false) {
  auto prf = [](const PRF &m) {
    return json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  };
  json sweep = json::array();
  for (const auto &t : r.sweep) {
    sweep.push_back({{"threshold", t.threshold},
                     {"tp", t.tp},
                     {"fp", t.fp},
                     {"fn", t.fn},
                     {"micro", prf(t.micro)},
                     {"macro", prf(t.macro)}});
  }
  json behaviors = json::array();
  for (const auto &b : r.per_behavior) {
    behaviors.push_back({{"behavior_id", b.behavior_id},
                         {"tp", b.tp},
                         {"fp", b.fp},
                         {"fn", b.fn},
                         {"metrics", prf(b.metrics)}});
  }
  json j{{"sweep", std::move(sweep)},
         {"best_threshold", r.best_threshold},
         {"best_f1", r.best_f1},
         {"cases", r.cases},
         {"per_behavior", std::move(behaviors)}};
  if (timing) j["scoring_seconds"] = r.scoring_seconds;
  return j;
}

inline void print_report(std::ostream &out, const EvalReport &r) {
  out << std::fixed << std::setprecision(4);
  out << "threshold        P        R       F1   macroF1\n";
  for (const auto &t : r.sweep) {
    out << std::setw(9) << t.threshold << std::setw(9) << t.micro.precision << std::setw(9)
        << t.micro.recall << std::setw(9) << t.micro.f1 << std::setw(10) << t.macro.f1 << '\n';
  }
  out << "best threshold " << r.best_threshold << "  best F1 " << r.best_f1 << "  ("
      << r.cases << " cases, scored in " << std::setprecision(2) << r.scoring_seconds << "s)\n";
  out.unsetf(std::ios::floatfield);
  out << std::setprecision(6);
}

// ---------------------------------------------------------------------------
// Ablations

enum class Ablation { full, no_attention, no_embedding };

inline Ablation parse_ablation(std::string_view s) {
  if (s == "full") return Ablation::full;
  if (s == "no-attention") return Ablation::no_attention;
  if (s == "no-embedding") return Ablation::no_embedding;
  throw EvalError("unknown ablation variant '" + std::string(s) +
                  "' (expected full, no-attention or no-embedding)");
}

inline std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_attention: return "no-attention";
    case Ablation::no_embedding: return "no-embedding";
  }
  return "?";
}

/// Attention records for the query side and the case side of an evaluation.
struct EvalCorpus {
  std::map<SentenceKey, AttentionRecord> queries;
  std::map<SentenceKey, AttentionRecord> cases;

  static std::map<SentenceKey, AttentionRecord> by_key(std::vector<AttentionRecord> records) {
    std::map<SentenceKey, AttentionRecord> out;
    for (auto &r : records) {
      auto key = r.key();
      out.emplace(std::move(key), std::move(r));
    }
    return out;
  }
};

/// Scores each case as the best match over the behavior's description
/// sentences, with graphs and matching configured for `variant`.
inline EvalReport run_ablation(Ablation variant, const std::vector<BehaviorCase> &cases,
                               const EvalCorpus &corpus, const EmbeddingTable &emb,
                               const GraphParams &gp, MatchParams mp,
                               const std::vector<double> &thresholds) {
  if (variant == Ablation::no_embedding) mp.metric = DistanceMetric::exact_word;
  mp.validate();
  gp.validate();

  std::map<SentenceKey, PreparedGraph> cache;
  auto graph_for = [&](const std::map<SentenceKey, AttentionRecord> &records,
                       const SentenceKey &key, const char *side) -> const PreparedGraph & {
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    auto rec = records.find(key);
    if (rec == records.end()) {
      throw EvalError(std::string("no ") + side + " attention record for " + to_string(key));
    }
    const auto g = variant == Ablation::no_attention ? build_fully_connected(rec->second, emb, gp)
                                                     : build_graph(rec->second, emb, gp);
    return cache.emplace(key, prepare(g, emb)).first->second;
  };

  auto scorer = [&](const BehaviorCase &c, const SentenceKey &k) {
    const auto &target = graph_for(corpus.cases, k, "case");
    double best = 0.0;
    for (const auto &d : c.description_sents) {
      const auto &query = graph_for(corpus.queries, d, "description");
      best = std::max(best, best_match(query, target, emb, mp).score);
    }
    return best;
  };
  return sweep_thresholds(cases, scorer, thresholds);
}

/// Evenly spaced thresholds lo, lo+step, ..., up to hi inclusive.
inline std::vector<double> threshold_range(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw EvalError("invalid threshold range");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

// ---------------------------------------------------------------------------
// Query latency benchmark

/// Baseline retrieval: sentences sharing at least one content word with the
/// query, ranked by the number of shared words.
inline std::vector<std::pair<SentenceKey, std::size_t>>
word_overlap_search(const std::vector<AttentionRecord> &records,
                    const std::vector<std::string> &query_words, const GraphParams &gp) {
  std::set<std::string, std::less<>> query;
  for (auto &[i, w] : preprocess_words(query_words, gp)) query.insert(w);
  std::vector<std::pair<SentenceKey, std::size_t>> out;
  std::set<std::string_view> shared;
  for (const auto &rec : records) {
    shared.clear();
    for (const auto &w : rec.words) {
      if (query.count(w)) shared.insert(w);
    }
    if (!shared.empty()) out.emplace_back(rec.key(), shared.size());
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  return out;
}

struct BenchConfig {
  std::vector<std::size_t> sizes = {20000};
  std::vector<std::size_t> query_words = {10};
  std::size_t repetitions = 10;
  SyntheticConfig synthetic;
  GraphParams graph_params;
  MatchParams match_params;
};

struct BenchRow {
  std::string method;
  std::size_t sentences = 0;
  std::size_t query_words = 0;
  std::size_t repetitions = 0;
  double avg = 0.0, min = 0.0, max = 0.0, median = 0.0;  // seconds
};

inline constexpr const char *kBenchMethods[] = {"baseline", "w/o OPT", "GC", "GC+SC"};

namespace detail {

inline BenchRow summarize(std::string method, std::size_t sentences, std::size_t words,
                          std::vector<double> times) {
  BenchRow row{std::move(method), sentences, words, times.size(), 0, 0, 0, 0};
  if (times.empty()) return row;
  std::sort(times.begin(), times.end());
  double sum = 0.0;
  for (double t : times) sum += t;
  row.avg = sum / static_cast<double>(times.size());
  row.min = times.front();
  row.max = times.back();
  const std::size_t mid = times.size() / 2;
  row.median = times.size() % 2 ? times[mid] : (times[mid - 1] + times[mid]) / 2.0;
  return row;
}

}  // namespace detail

/// Per configuration, times `repetitions` random queries with each method,
/// sequentially on one thread. Throws if the three graph-matching methods
/// ever disagree.
inline std::vector<BenchRow> bench_query_time(const BenchConfig &cfg) {
  std::vector<BenchRow> rows;
  if (cfg.repetitions == 0) return rows;
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };

  for (std::size_t size : cfg.sizes) {
    SyntheticConfig sc = cfg.synthetic;
    auto corpus = make_synthetic_corpus(size, sc);
    const auto index = build_index(corpus.records, corpus.embeddings, cfg.graph_params,
                                   cfg.match_params, corpus.meta);
    const Searcher searcher(index, corpus.embeddings, cfg.match_params);
    std::mt19937_64 rng(sc.seed * 7919 + size);

    for (std::size_t words : cfg.query_words) {
      std::vector<double> t_base, t_none, t_gc, t_gcsc;
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        const auto rec = synthetic_sentence(corpus.embeddings, "query",
                                            static_cast<std::uint32_t>(rep), words, rng);
        const SearchOptions opts{0.0, std::nullopt, 1};
        // Query graph construction is common to the graph methods; untimed.
        const auto q = build_graph(rec, corpus.embeddings, cfg.graph_params);

        auto t0 = clock::now();
        const auto base = word_overlap_search(corpus.records, rec.words, cfg.graph_params);
        auto t1 = clock::now();
        const auto none = search_rebuilding(corpus.records, corpus.embeddings, cfg.graph_params, q,
                                            cfg.match_params, opts);
        auto t2 = clock::now();
        const auto gc = searcher.search_unoptimized(q, opts);
        auto t3 = clock::now();
        const auto gcsc = searcher.search(q, opts);
        auto t4 = clock::now();

        if (!(none == gc) || !(gc == gcsc)) {
          throw Error("benchmark methods disagree on query " + std::to_string(rep));
        }
        t_base.push_back(seconds(t0, t1));
        t_none.push_back(seconds(t1, t2));
        t_gc.push_back(seconds(t2, t3));
        t_gcsc.push_back(seconds(t3, t4));
        (void)base;
      }
      rows.push_back(detail::summarize(kBenchMethods[0], size, words, std::move(t_base)));
      rows.push_back(detail::summarize(kBenchMethods[1], size, words, std::move(t_none)));
      rows.push_back(detail::summarize(kBenchMethods[2], size, words, std::move(t_gc)));
      rows.push_back(detail::summarize(kBenchMethods[3], size, words, std::move(t_gcsc)));
    }
  }
  return rows;
}

inline void write_bench_csv(std::ostream &out, const std::vector<BenchRow> &rows) {
  out << "method,sentences,query_words,repetitions,avg_s,min_s,max_s,median_s\n";
  out << std::setprecision(9);
  for (const auto &r : rows) {
    out << r.method << ',' << r.sentences << ',' << r.query_words << ',' << r.repetitions << ','
        << r.avg << ',' << r.min << ',' << r.max << ',' << r.median << '\n';
  }
}

}  // namespace attnsearch
