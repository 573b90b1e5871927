//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include "attnsearch/config.hpp"
#include "attnsearch/error.hpp"
#include "attnsearch/eval.hpp"
#include "attnsearch/graph.hpp"
#include "attnsearch/index.hpp"
#include "attnsearch/interchange.hpp"
#include "attnsearch/matcher.hpp"
#include "attnsearch/search.hpp"
#include "attnsearch/stopwords.hpp"
#include "attnsearch/synthetic.hpp"
