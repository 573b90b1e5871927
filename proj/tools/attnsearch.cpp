//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// attnsearch: build an attention-graph index and query it.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "attnsearch/attnsearch.hpp"

namespace {

using namespace attnsearch;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Options shared by every subcommand that builds graphs or matches them.
/// Config-file values are applied first; explicitly given flags win.
struct CommonOptions {
  std::string config_path;
  Config flags;
  std::vector<CLI::Option *> given;
  CLI::Option *attention_threshold = nullptr, *tau = nullptr, *kappa = nullptr,
              *metric = nullptr, *stopwords = nullptr, *threads = nullptr,
              *embeddings = nullptr, *max_nodes = nullptr, *drop_isolated = nullptr;
  bool drop_isolated_flag = false;

  void add_to(CLI::App *app) {
    app->add_option("--config", config_path, "JSON config file (flags override it)");
    attention_threshold = app->add_option("--attention-threshold", flags.attention_threshold,
                                          "Edge threshold on attention (default 0.15)");
    tau = app->add_option("--tau", flags.tau, "Word match distance threshold (default 0.37)");
    kappa = app->add_option("--kappa", flags.kappa, "Score base per matched pair (default 2.72)");
    metric = app->add_option("--metric", flags.metric,
                             "half_cosine | minmax_euclidean | exact_word");
    stopwords = app->add_option("--stopwords", flags.stopword_file,
                                "Stopword file, one per line (default: built-in list)");
    max_nodes = app->add_option("--max-nodes", flags.max_nodes, "Node cap per sentence graph");
    drop_isolated = app->add_flag("--drop-isolated", drop_isolated_flag,
                                  "Drop nodes without edges from sentence graphs");
    threads = app->add_option("--threads", flags.threads, "Worker threads");
    embeddings = app->add_option("--embeddings", flags.embeddings, "Embedding TSV file");
  }

  Config resolve() const {
    Config cfg = config_path.empty() ? Config{} : load_config(config_path);
    if (attention_threshold->count()) cfg.attention_threshold = flags.attention_threshold;
    if (tau->count()) cfg.tau = flags.tau;
    if (kappa->count()) cfg.kappa = flags.kappa;
    if (metric->count()) cfg.metric = flags.metric;
    if (stopwords->count()) cfg.stopword_file = flags.stopword_file;
    if (max_nodes->count()) cfg.max_nodes = flags.max_nodes;
    if (drop_isolated->count()) cfg.keep_isolated_nodes = false;
    if (threads->count()) cfg.threads = flags.threads;
    if (embeddings->count()) cfg.embeddings = flags.embeddings;
    cfg.validate();
    return cfg;
  }
};

std::string require(const std::string &value, const char *flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
  return value;
}

EmbeddingTable load_embeddings(const std::string &path) {
  try {
    return read_embeddings(path);
  } catch (const InterchangeError &e) {
    throw Error(path + ": " + e.what());
  }
}

std::vector<double> parse_number_list(const std::string &s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception &) {
      pos = 0;
    }
    if (pos != item.size()) throw UsageError("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> split_words(const std::string &s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) {
    for (auto &c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(w);
  }
  return out;
}

// --- build-index ------------------------------------------------------------

struct BuildIndexCmd {
  CommonOptions common;
  std::string attentions, meta, out;

  void add(CLI::App &app) {
    auto *cmd = app.add_subcommand("build-index", "Build and persist a corpus index");
    common.add_to(cmd);
    cmd->add_option("--attentions", attentions, "Attention records (JSON lines)");
    cmd->add_option("--meta", meta, "Document metadata (JSON lines)");
    cmd->add_option("--out", out, "Index directory to write");
    cmd->callback([this] { run(); });
  }

  void run() {
    Config cfg = common.resolve();
    if (!attentions.empty()) cfg.attentions = attentions;
    if (!meta.empty()) cfg.meta = meta;
    if (!out.empty()) cfg.index = out;
    require(cfg.attentions, "--attentions");
    require(cfg.embeddings, "--embeddings");
    require(cfg.index, "--out");

    const auto start = std::chrono::steady_clock::now();
    const auto emb = load_embeddings(cfg.embeddings);
    DocMetaMap docs;
    if (!cfg.meta.empty()) {
      try {
        docs = read_doc_meta(cfg.meta);
      } catch (const InterchangeError &e) {
        throw Error(cfg.meta + ": " + e.what());
      }
    }
    CorpusIndex index;
    try {
      index = build_index_from_file(cfg.attentions, emb, cfg.graph_params(), cfg.match_params(),
                                    std::move(docs), cfg.threads);
    } catch (const InterchangeError &e) {
      throw Error(cfg.attentions + ": " + e.what());
    }
    save_index(index, cfg.index);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (index.stats.truncated_graphs) {
      std::cerr << "warning: " << index.stats.truncated_graphs << " sentence graph(s) exceeded "
                << cfg.max_nodes << " nodes and were truncated\n";
    }
    std::cout << "sentences   " << index.size() << '\n'
              << "oov words   " << index.stats.oov_words << '\n'
              << "vocabulary  " << emb.size() << '\n'
              << "documents   " << index.meta.size() << '\n'
              << "fingerprint " << index.fingerprint << '\n'
              << "elapsed     " << std::fixed << std::setprecision(3) << elapsed << "s\n"
              << "index written to " << cfg.index << '\n';
  }
};

// --- query ------------------------------------------------------------------

json hit_json(const SearchHit &h, std::size_t rank, const AttentionGraph &query,
              const CorpusIndex &index) {
  const auto *g = index.find(h.key());
  json pairs = json::array();
  for (const auto &p : h.match.sorted()) {
    pairs.push_back({{"query_index", p.g1},
                     {"query_word", query.nodes[*query.position_of(p.g1)].word},
                     {"index", p.g2},
                     {"word", g->nodes[*g->position_of(p.g2)].word}});
  }
  return {{"rank", rank},     {"score", h.score}, {"doc_id", h.doc_id},
          {"sent_id", h.sent_id}, {"pairs", std::move(pairs)}};
}

struct QueryCmd {
  CommonOptions common;
  std::string index_dir, query_attn, query_words;
  bool fully_connected = false, as_json = false, by_document = false;
  double sim_threshold = 0.0;
  std::size_t top_k = 0;
  CLI::Option *sim_opt = nullptr, *top_opt = nullptr;

  void add(CLI::App &app) {
    auto *cmd = app.add_subcommand("query", "Rank indexed sentences against a query");
    common.add_to(cmd);
    cmd->add_option("--index", index_dir, "Index directory");
    auto *attn = cmd->add_option("--query-attn", query_attn,
                                 "Attention records to use as queries (JSON lines)");
    auto *words = cmd->add_option("--query-words", query_words,
                                  "Space-separated query words (needs --fully-connected)");
    attn->excludes(words);
    cmd->add_flag("--fully-connected", fully_connected,
                  "Join every pair of query words instead of thresholding attention");
    sim_opt = cmd->add_option("--sim-threshold", sim_threshold, "Minimum score (exclusive)");
    top_opt = cmd->add_option("--top-k", top_k, "Maximum hits per query");
    cmd->add_flag("--json", as_json, "Print JSON instead of text");
    cmd->add_flag("--by-document", by_document, "Aggregate hits per document (max score)");
    cmd->callback([this] { run(); });
  }

  void run() {
    Config cfg = common.resolve();
    if (!index_dir.empty()) cfg.index = index_dir;
    if (sim_opt->count()) cfg.sim_threshold = sim_threshold;
    if (top_opt->count()) cfg.top_k = top_k;
    require(cfg.index, "--index");
    require(cfg.embeddings, "--embeddings");
    if (query_attn.empty() == query_words.empty()) {
      throw UsageError("exactly one of --query-attn or --query-words is required");
    }
    if (!query_words.empty() && !fully_connected) {
      throw UsageError("--query-words needs --fully-connected (no attention is available)");
    }

    const auto emb = load_embeddings(cfg.embeddings);
    const auto index = load_index(cfg.index, emb);
    const auto gp = cfg.graph_params();
    const auto mp = cfg.match_params();
    index.check_compatible(gp, mp, emb);
    const Searcher searcher(index, emb, mp);

    std::vector<AttentionRecord> queries;
    if (!query_attn.empty()) {
      try {
        queries = read_attention_file(query_attn);
      } catch (const InterchangeError &e) {
        throw Error(query_attn + ": " + e.what());
      }
    } else {
      queries.push_back(record_from_words("query", 0, split_words(query_words)));
    }

    json results = json::array();
    for (const auto &rec : queries) {
      const auto q = fully_connected ? build_fully_connected(rec, emb, gp) : build_graph(rec, emb, gp);
      const auto hits = searcher.search(q, {cfg.sim_threshold, cfg.top_k, cfg.threads});
      if (as_json) {
        json out{{"query", {{"doc_id", rec.doc_id}, {"sent_id", rec.sent_id}}}};
        if (by_document) {
          json docs = json::array();
          for (const auto &d : rank_documents(hits)) {
            docs.push_back({{"doc_id", d.doc_id}, {"score", d.score}, {"best_sent_id", d.best_sent_id}});
          }
          out["documents"] = std::move(docs);
        } else {
          json list = json::array();
          for (std::size_t i = 0; i < hits.size(); ++i) list.push_back(hit_json(hits[i], i + 1, q, index));
          out["hits"] = std::move(list);
        }
        results.push_back(std::move(out));
        continue;
      }
      std::cout << "query " << to_string(rec.key()) << ": " << q.node_count() << " nodes, "
                << hits.size() << " hit(s)\n";
      if (by_document) {
        std::size_t rank = 0;
        for (const auto &d : rank_documents(hits)) {
          std::cout << std::setw(4) << ++rank << "  " << std::setw(12) << std::setprecision(6)
                    << d.score << "  " << d.doc_id << "#" << d.best_sent_id << '\n';
        }
        continue;
      }
      for (std::size_t i = 0; i < hits.size(); ++i) {
        const auto j = hit_json(hits[i], i + 1, q, index);
        std::cout << std::setw(4) << i + 1 << "  " << std::setw(12) << std::setprecision(6)
                  << hits[i].score << "  " << to_string(hits[i].key()) << "  ";
        for (const auto &p : j["pairs"]) {
          std::cout << ' ' << p["query_word"].get<std::string>() << '='
                    << p["word"].get<std::string>();
        }
        std::cout << '\n';
      }
    }
    if (as_json) std::cout << json{{"results", std::move(results)}}.dump(2) << '\n';
  }
};

// --- attribute --------------------------------------------------------------

struct AttributeCmd {
  CommonOptions common;
  std::string index_dir, queries;
  double sim_threshold = 0.0;
  bool as_json = false;
  CLI::Option *sim_opt = nullptr;

  void add(CLI::App &app) {
    auto *cmd = app.add_subcommand("attribute", "Vote for the actor behind a set of behaviors");
    common.add_to(cmd);
    cmd->add_option("--index", index_dir, "Index directory");
    cmd->add_option("--queries", queries, "Behavior attention records (JSON lines)");
    sim_opt = cmd->add_option("--sim-threshold", sim_threshold, "Minimum score (exclusive)");
    cmd->add_flag("--json", as_json, "Print JSON instead of text");
    cmd->callback([this] { run(); });
  }

  void run() {
    Config cfg = common.resolve();
    if (!index_dir.empty()) cfg.index = index_dir;
    if (sim_opt->count()) cfg.sim_threshold = sim_threshold;
    require(cfg.index, "--index");
    require(cfg.embeddings, "--embeddings");
    require(queries, "--queries");

    const auto emb = load_embeddings(cfg.embeddings);
    const auto index = load_index(cfg.index, emb);
    const auto gp = cfg.graph_params();
    const auto mp = cfg.match_params();
    index.check_compatible(gp, mp, emb);

    std::vector<AttentionGraph> behaviors;
    try {
      for_each_attention_record(queries, [&](const AttentionRecord &r) {
        behaviors.push_back(build_graph(r, emb, gp));
      });
    } catch (const InterchangeError &e) {
      throw Error(queries + ": " + e.what());
    }
    const auto votes = attribute(index, emb, behaviors, mp, cfg.sim_threshold, cfg.threads);
    if (as_json) {
      json arr = json::array();
      for (const auto &v : votes) arr.push_back({{"actor", v.actor}, {"documents", v.documents}});
      std::cout << json{{"actors", std::move(arr)}}.dump(2) << '\n';
      return;
    }
    if (votes.empty()) {
      std::cout << "no matching documents\n";
      return;
    }
    for (const auto &v : votes) std::cout << v.actor << '\t' << v.documents << '\n';
  }
};

// --- eval -------------------------------------------------------------------

struct EvalCmd {
  CommonOptions common;
  std::string attentions, query_attn, labels, thresholds, range = "0:40:0.5", ablation = "full",
                                                            json_out;
  std::uint64_t seed = 0;
  bool as_json = false;

  void add(CLI::App &app) {
    auto *cmd = app.add_subcommand("eval", "Balanced per-behavior retrieval with a threshold sweep");
    common.add_to(cmd);
    cmd->add_option("--attentions", attentions, "Case-side attention records");
    cmd->add_option("--query-attn", query_attn, "Description-side attention records");
    cmd->add_option("--labels", labels, "Behavior labels (JSON lines)");
    cmd->add_option("--seed", seed, "Seed for negative sampling");
    cmd->add_option("--thresholds", thresholds, "Comma-separated ascending thresholds");
    cmd->add_option("--threshold-range", range, "lo:hi:step when --thresholds is absent");
    cmd->add_option("--ablation", ablation, "full | no-attention | no-embedding");
    cmd->add_flag("--json", as_json, "Print the JSON report instead of a table");
    cmd->add_option("--json-out", json_out, "Also write the JSON report to this file");
    cmd->callback([this] { run(); });
  }

  std::vector<double> threshold_list() const {
    if (!thresholds.empty()) return parse_number_list(thresholds);
    std::vector<double> parts;
    std::stringstream ss(range);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(parse_number_list(item).at(0));
    if (parts.size() != 3) throw UsageError("--threshold-range expects lo:hi:step");
    return threshold_range(parts[0], parts[1], parts[2]);
  }

  void run() {
    Config cfg = common.resolve();
    if (!attentions.empty()) cfg.attentions = attentions;
    require(cfg.attentions, "--attentions");
    require(cfg.embeddings, "--embeddings");
    require(query_attn, "--query-attn");
    require(labels, "--labels");
    Ablation variant;
    try {
      variant = parse_ablation(ablation);
    } catch (const EvalError &e) {
      throw UsageError(e.what());
    }

    const auto emb = load_embeddings(cfg.embeddings);
    EvalCorpus corpus;
    try {
      corpus.cases = EvalCorpus::by_key(read_attention_file(cfg.attentions));
      corpus.queries = EvalCorpus::by_key(read_attention_file(query_attn));
    } catch (const InterchangeError &e) {
      throw Error(std::string("attention file: ") + e.what());
    }
    const auto cases = build_behavior_cases(read_behavior_labels(labels), seed);
    const auto report = run_ablation(variant, cases, corpus, emb, cfg.graph_params(),
                                     cfg.match_params(), threshold_list());
    json j = to_json(report);
    j["ablation"] = std::string(to_string(variant));
    j["seed"] = seed;
    if (!json_out.empty()) {
      std::ofstream out(json_out);
      if (!out) throw Error("cannot write '" + json_out + "'");
      out << j.dump(2) << '\n';
    }
    if (as_json) {
      std::cout << j.dump(2) << '\n';
    } else {
      std::cout << "ablation " << to_string(variant) << ", " << cases.size() << " behaviors\n";
      print_report(std::cout, report);
    }
  }
};

// --- bench ------------------------------------------------------------------

struct BenchCmd {
  CommonOptions common;
  std::string sizes = "20000", query_words = "5,10", csv;
  std::size_t repetitions = 10, vocabulary = 4000, dimension = 256;
  std::uint64_t seed = 1;

  void add(CLI::App &app) {
    auto *cmd = app.add_subcommand("bench", "Query latency on synthetic corpora");
    common.add_to(cmd);
    cmd->add_option("--sizes", sizes, "Comma-separated corpus sizes (sentences)");
    cmd->add_option("--query-words", query_words, "Comma-separated query lengths");
    cmd->add_option("--repetitions", repetitions, "Queries per configuration");
    cmd->add_option("--vocabulary", vocabulary, "Synthetic vocabulary size");
    cmd->add_option("--dimension", dimension, "Synthetic embedding dimension");
    cmd->add_option("--seed", seed, "Corpus seed");
    cmd->add_option("--csv", csv, "Write CSV here instead of stdout");
    cmd->callback([this] { run(); });
  }

  void run() {
    const Config cfg = common.resolve();
    BenchConfig bc;
    bc.sizes.clear();
    for (double s : parse_number_list(sizes)) bc.sizes.push_back(static_cast<std::size_t>(s));
    bc.query_words.clear();
    for (double w : parse_number_list(query_words)) {
      bc.query_words.push_back(static_cast<std::size_t>(w));
    }
    bc.repetitions = repetitions;
    bc.synthetic.vocabulary = vocabulary;
    bc.synthetic.dimension = dimension;
    bc.synthetic.seed = seed;
    bc.graph_params = cfg.graph_params();
    bc.match_params = cfg.match_params();
    const auto rows = bench_query_time(bc);
    if (csv.empty()) {
      write_bench_csv(std::cout, rows);
    } else {
      std::ofstream out(csv);
      if (!out) throw Error("cannot write '" + csv + "'");
      write_bench_csv(out, rows);
    }
  }
};

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Attention-graph semantic search for threat-intelligence text"};
  app.require_subcommand(1);
  BuildIndexCmd build;
  QueryCmd query;
  AttributeCmd attr;
  EvalCmd eval;
  BenchCmd bench;
  build.add(app);
  query.add(app);
  attr.add(app);
  eval.add(app);
  bench.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  } catch (const UsageError &e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ParamError &e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
