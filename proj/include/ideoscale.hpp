#pragma once

#include "ideoscale/types.hpp"
#include "ideoscale/hash.hpp"
#include "ideoscale/corpus.hpp"
#include "ideoscale/gold.hpp"
#include "ideoscale/prediction.hpp"
#include "ideoscale/scaling.hpp"
#include "ideoscale/metrics.hpp"
#include "ideoscale/stopwords.hpp"
#include "ideoscale/keyness.hpp"
#include "ideoscale/prompts.hpp"
#include "ideoscale/response_parser.hpp"
#include "ideoscale/rate_limiter.hpp"
#include "ideoscale/transport.hpp"
#include "ideoscale/cache.hpp"
#include "ideoscale/backends.hpp"
#include "ideoscale/config.hpp"
#include "ideoscale/report.hpp"
#include "ideoscale/harness.hpp"
#include "ideoscale/plot.hpp"
