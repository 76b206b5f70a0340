#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <regex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xbrltag/labels.h"

namespace xbrltag {

struct AnnotatedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
  std::string doc_id;
  std::int64_t period_index = 0;

  bool operator==(const AnnotatedSentence&) const = default;
};

// ---------------------------------------------------------------------------
// On-disk format: one JSON object per line with fields
//   tokens (array of strings), labels (array of strings),
//   doc_id (string), period_index (integer).
// "ner_tags" is accepted as an alias of "labels" and "id" of "doc_id" so
// records exported by other tools load without conversion.

struct LoadDiagnostic {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadResult {
  std::vector<AnnotatedSentence> sentences;
  std::vector<LoadDiagnostic> diagnostics;
};

enum class LoadMode { kLenient, kStrict };

// Lenient mode skips bad records and reports them; strict mode throws
// FormatError on the first bad record.
LoadResult load_dataset(const std::string& path, const LabelSet& labelset,
                        LoadMode mode = LoadMode::kLenient);
LoadResult load_dataset(std::istream& in, const LabelSet& labelset,
                        LoadMode mode = LoadMode::kLenient);

// Reads model output in the corpus format. Labels are not IOB2-validated
// (predictions may be ill-formed); malformed lines throw FormatError.
std::vector<AnnotatedSentence> load_predictions(const std::string& path);

std::string to_record(const AnnotatedSentence& sentence);
void write_dataset(const std::string& path, std::span<const AnnotatedSentence> sentences);
void write_dataset(std::ostream& out, std::span<const AnnotatedSentence> sentences);

// Checks length agreement, label membership and IOB2 validity. Returns an
// empty string when the sentence is valid, else a diagnostic.
std::string check_sentence(const AnnotatedSentence& sentence, const LabelSet& labelset);

// ---------------------------------------------------------------------------
// Heuristic sentence filtering.

struct FilterReport {
  std::size_t kept = 0;
  std::size_t discarded = 0;
  std::size_t discarded_tagged = 0;
};

enum class FilterMode {
  kTraining,   // sentences with any gold tag are always kept
  kInference,  // rules only
};

class FilterRules {
 public:
  // Throws ConfigError on an empty rule list or an invalid pattern.
  explicit FilterRules(std::vector<std::string> patterns);

  static FilterRules defaults();
  static std::vector<std::string> default_patterns();

  bool matches_token(const std::string& token) const;
  const std::vector<std::string>& patterns() const { return patterns_; }

 private:
  std::vector<std::string> patterns_;
  std::vector<std::regex> compiled_;
};

struct FilterResult {
  std::vector<AnnotatedSentence> kept;
  FilterReport report;
};

FilterResult filter_sentences(std::span<const AnnotatedSentence> sentences,
                              const FilterRules& rules, FilterMode mode = FilterMode::kTraining);

std::string format_filter_report(const FilterReport& report);

// ---------------------------------------------------------------------------
// Chronological split.

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct SplitResult {
  std::vector<AnnotatedSentence> train;
  std::vector<AnnotatedSentence> dev;
  std::vector<AnnotatedSentence> test;
};

// Stable-sorts by (period_index, doc_id) and cuts at rounded cumulative
// boundaries. Throws ContractError on bad ratios, empty input or an empty split.
SplitResult chronological_split(std::span<const AnnotatedSentence> sentences, SplitRatios ratios);

// ---------------------------------------------------------------------------
// Corpus statistics.

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Population statistics; the input must be nonempty.
MeanStd mean_and_std(std::span<const double> values);

struct CorpusStats {
  std::size_t sentence_count = 0;
  MeanStd tokens_per_sentence;
  MeanStd tags_per_sentence;
  // Sorted by count descending, then tag name.
  std::vector<std::pair<std::string, std::size_t>> tag_frequency;
  std::size_t span_count = 0;
  std::size_t numeric_span_count = 0;
  double numeric_span_ratio = 0.0;
};

CorpusStats compute_stats(std::span<const AnnotatedSentence> sentences);

// key=value lines; see README for the layout.
std::string format_stats_report(const CorpusStats& stats);

}  // namespace xbrltag
