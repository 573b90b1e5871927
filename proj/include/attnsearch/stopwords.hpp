//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <fstream>
#include <set>
#include <string>
#include <string_view>

#include "attnsearch/error.hpp"

namespace attnsearch {

// English function words (NLTK-style list).
inline constexpr std::string_view kDefaultStopwords[] = {
    "a",       "about",   "above",   "after",   "again",   "against", "ain",
    "all",     "am",      "an",      "and",     "any",     "are",     "aren",
    "as",      "at",      "be",      "because", "been",    "before",  "being",
    "below",   "between", "both",    "but",     "by",      "can",     "couldn",
    "d",       "did",     "didn",    "do",      "does",    "doesn",   "doing",
    "don",     "down",    "during",  "each",    "few",     "for",     "from",
    "further", "had",     "hadn",    "has",     "hasn",    "have",    "haven",
    "having",  "he",      "her",     "here",    "hers",    "herself", "him",
    "himself", "his",     "how",     "i",       "if",      "in",      "into",
    "is",      "isn",     "it",      "its",     "itself",  "just",    "ll",
    "m",       "ma",      "me",      "mightn",  "more",    "most",    "mustn",
    "my",      "myself",  "needn",   "no",      "nor",     "not",     "now",
    "o",       "of",      "off",     "on",      "once",    "only",    "or",
    "other",   "our",     "ours",    "ourselves", "out",   "over",    "own",
    "re",      "s",       "same",    "shan",    "she",     "should",  "shouldn",
    "so",      "some",    "such",    "t",       "than",    "that",    "the",
    "their",   "theirs",  "them",    "themselves", "then", "there",   "these",
    "they",    "this",    "those",   "through", "to",      "too",     "under",
    "until",   "up",      "ve",      "very",    "was",     "wasn",    "we",
    "were",    "weren",   "what",    "when",    "where",   "which",   "while",
    "who",     "whom",    "why",     "will",    "with",    "won",     "wouldn",
    "y",       "you",     "your",    "yours",   "yourself", "yourselves",
};

inline std::set<std::string, std::less<>> default_stopwords() {
  return {std::begin(kDefaultStopwords), std::end(kDefaultStopwords)};
}

/// One word per line; blank lines and lines starting with '#' are skipped.
inline std::set<std::string, std::less<>> read_stopwords(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stopword file '" + path + "'");
  std::set<std::string, std::less<>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    out.insert(line);
  }
  return out;
}

}  // namespace attnsearch
