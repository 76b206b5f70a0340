#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xbrltag/corpus.h"
#include "xbrltag/labels.h"

namespace xbrltag {

struct PrfCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  // Fills precision/recall/f1 from the counts (0 when undefined).
  void finalize();
};

struct EntityScore {
  std::vector<std::pair<std::string, PrfCounts>> per_tag;  // label-set order
  PrfCounts micro;
  double macro_f1 = 0.0;
};

enum class MacroMode {
  kAllTags,   // average over every tag of the label set
  kGoldTags,  // average over tags that occur in the gold spans
};

// Exact (start, end, tag) span matching. Gold labels must be valid IOB2;
// predictions are decoded with spans_from_labels_lenient.
EntityScore entity_prf(std::span<const std::vector<std::string>> gold,
                       std::span<const std::vector<std::string>> predicted, const LabelSet& labelset,
                       MacroMode macro = MacroMode::kAllTags);
EntityScore entity_prf(std::span<const AnnotatedSentence> gold,
                       std::span<const std::vector<std::string>> predicted, const LabelSet& labelset,
                       MacroMode macro = MacroMode::kAllTags);

// Fraction of words whose gold tag is among the first k entries of its ranked
// list. k larger than tag_count is clamped (with a warning on stderr).
double hits_at_k(std::span<const std::vector<std::string>> ranked_tags, std::span<const std::string> gold_tags,
                 std::size_t k, std::size_t tag_count);

// Hits@k for k = 1..k_max from 1-based gold ranks (0 = gold tag not ranked).
std::vector<double> hits_curve(std::span<const std::size_t> gold_ranks, std::size_t k_max);

std::string format_hits_report(std::span<const double> curve, std::size_t words, std::size_t tag_count);

struct InvalidSequenceReport {
  std::size_t sequences = 0;
  std::size_t sequences_with_violations = 0;
  std::size_t total_violations = 0;
  double violation_rate = 0.0;  // sequences_with_violations / sequences
  std::map<ViolationKind, std::size_t> violations_by_kind;
};

InvalidSequenceReport invalid_sequence_report(std::span<const std::vector<std::string>> sequences,
                                              const LabelSet& labelset);
InvalidSequenceReport invalid_sequence_report(std::span<const std::vector<int>> sequences,
                                              const LabelSet& labelset);

std::string format_eval_report(const EntityScore& score, const InvalidSequenceReport* invalid);

using MetricRecord = std::map<std::string, double>;

struct RunAggregate {
  std::map<std::string, MeanStd> metrics;
  std::size_t runs = 0;
};

// Mean and population std per metric. Throws ContractError on no runs or
// mismatched metric keys.
RunAggregate aggregate_runs(std::span<const MetricRecord> runs);

}  // namespace xbrltag
