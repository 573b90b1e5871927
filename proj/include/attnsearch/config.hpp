//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <fstream>
#include <optional>
#include <string>

#include "attnsearch/error.hpp"
#include "attnsearch/graph.hpp"
#include "attnsearch/interchange.hpp"
#include "attnsearch/matcher.hpp"
#include "attnsearch/parallel.hpp"
#include "attnsearch/stopwords.hpp"

namespace attnsearch {

/// Operator settings. Defaults reproduce the reference configuration:
/// attention threshold 0.15, tau 0.37, kappa 2.72.
struct Config {
  double attention_threshold = 0.15;
  double tau = 0.37;
  double kappa = 2.72;
  std::string metric = "half_cosine";
  double sim_threshold = 0.0;
  std::optional<std::size_t> top_k;
  std::string stopword_file;  // empty: built-in list
  bool keep_isolated_nodes = true;
  std::size_t max_nodes = 128;
  std::size_t threads = default_threads();

  std::string embeddings;
  std::string attentions;
  std::string meta;
  std::string index;

  GraphParams graph_params() const {
    GraphParams p;
    p.attention_threshold = attention_threshold;
    if (!stopword_file.empty()) p.stopwords = read_stopwords(stopword_file);
    p.keep_isolated_nodes = keep_isolated_nodes;
    p.max_nodes = max_nodes;
    return p;
  }

  MatchParams match_params() const { return {tau, kappa, parse_metric(metric)}; }

  void validate() const {
    GraphParams gp;
    gp.attention_threshold = attention_threshold;
    gp.max_nodes = max_nodes;
    gp.validate();
    match_params().validate();
    if (threads == 0) throw ParamError("threads must be positive");
  }
};

/// Applies the keys of a JSON config object onto `cfg`. Unknown keys are
/// rejected.
inline void apply_config_json(Config &cfg, const json &j) {
  if (!j.is_object()) throw ParamError("config must be a JSON object");
  for (const auto &[key, v] : j.items()) {
    try {
      if (key == "attention_threshold") cfg.attention_threshold = v.get<double>();
      else if (key == "tau") cfg.tau = v.get<double>();
      else if (key == "kappa") cfg.kappa = v.get<double>();
      else if (key == "metric") cfg.metric = v.get<std::string>();
      else if (key == "sim_threshold") cfg.sim_threshold = v.get<double>();
      else if (key == "top_k") cfg.top_k = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>());
      else if (key == "stopword_file") cfg.stopword_file = v.get<std::string>();
      else if (key == "keep_isolated_nodes") cfg.keep_isolated_nodes = v.get<bool>();
      else if (key == "max_nodes") cfg.max_nodes = v.get<std::size_t>();
      else if (key == "threads") cfg.threads = v.get<std::size_t>();
      else if (key == "embeddings") cfg.embeddings = v.get<std::string>();
      else if (key == "attentions") cfg.attentions = v.get<std::string>();
      else if (key == "meta") cfg.meta = v.get<std::string>();
      else if (key == "index") cfg.index = v.get<std::string>();
      else if (key == "version") continue;
      else throw ParamError("unknown config key '" + key + "'");
    } catch (const json::type_error &) {
      throw ParamError("config key '" + key + "' has the wrong type");
    }
  }
}

inline Config load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ParamError("malformed config '" + path + "': " + e.what());
  }
  Config cfg;
  apply_config_json(cfg, j);
  return cfg;
}

}  // namespace attnsearch
