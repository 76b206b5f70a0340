#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "xbrltag/corpus.h"
#include "xbrltag/eval.h"
#include "xbrltag/features.h"
#include "xbrltag/tagger.h"
#include "xbrltag/tokenize.h"

namespace xbrltag {

struct AblationConfig {
  std::vector<NumericPolicy> policies{NumericPolicy::kNone, NumericPolicy::kNum, NumericPolicy::kShape};
  std::vector<Head> heads{Head::kSoftmax};
  std::vector<Granularity> granularities{Granularity::kSubword};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  FeatureConfig features;
  TrainConfig train;
  int vocab_min_count = 3;
};

struct AblationCell {
  NumericPolicy policy = NumericPolicy::kNone;
  Head head = Head::kSoftmax;
  Granularity granularity = Granularity::kWord;
};

struct AblationRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  int best_epoch = 0;
  MetricRecord metrics;  // empty when !ok
};

struct AblationCellResult {
  AblationCell cell;
  std::vector<AblationRun> runs;
  bool failed = false;  // any run failed
  RunAggregate aggregate;  // over successful runs
};

struct AblationResult {
  std::vector<AblationCellResult> cells;  // policy-major, then head, then granularity
  std::map<NumericPolicy, FragmentationStats> fragmentation;  // test split
};

// Metric keys of MetricRecord, in table order.
const std::vector<std::string>& ablation_metric_keys();

// Trains one model per (policy, head, granularity, seed). The subword vocab and
// the shape vocab are derived from the train split. A run that throws is
// recorded as failed and the harness moves on.
AblationResult run_ablation(std::span<const AnnotatedSentence> train_set, std::span<const AnnotatedSentence> dev_set,
                            std::span<const AnnotatedSentence> test_set, const LabelSet& labelset,
                            const AblationConfig& config);

// One JSON record per line: per-run rows ("kind":"run"), per-cell aggregates
// ("kind":"cell") and fragmentation rows ("kind":"fragmentation").
std::string format_ablation_table(const AblationResult& result);
std::string format_ablation_report(const AblationResult& result);

}  // namespace xbrltag
