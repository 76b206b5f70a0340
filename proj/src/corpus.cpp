#include "xbrltag/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "xbrltag/error.h"
#include "xbrltag/tokenize.h"

namespace xbrltag {

using nlohmann::json;

namespace {

std::vector<std::string> string_array(const json& record, const char* field) {
  const json& value = record.at(field);
  if (!value.is_array()) throw FormatError(std::string("field '") + field + "' is not an array");
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& item : value) {
    if (!item.is_string()) throw FormatError(std::string("field '") + field + "' holds a non-string");
    out.push_back(item.get<std::string>());
  }
  return out;
}

AnnotatedSentence parse_record(const std::string& line) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed record: ") + e.what());
  }
  if (!record.is_object()) throw FormatError("malformed record: not an object");
  AnnotatedSentence s;
  if (!record.contains("tokens")) throw FormatError("malformed record: missing 'tokens'");
  s.tokens = string_array(record, "tokens");
  if (record.contains("labels")) {
    s.labels = string_array(record, "labels");
  } else if (record.contains("ner_tags")) {
    s.labels = string_array(record, "ner_tags");
  } else {
    throw FormatError("malformed record: missing 'labels'");
  }
  const char* id_field = record.contains("doc_id") ? "doc_id" : (record.contains("id") ? "id" : nullptr);
  if (id_field) {
    const json& id = record.at(id_field);
    s.doc_id = id.is_string() ? id.get<std::string>() : id.dump();
  }
  if (record.contains("period_index")) {
    const json& p = record.at("period_index");
    if (!p.is_number_integer()) throw FormatError("malformed record: 'period_index' is not an integer");
    s.period_index = p.get<std::int64_t>();
  }
  return s;
}

}  // namespace

std::string check_sentence(const AnnotatedSentence& sentence, const LabelSet& labelset) {
  if (sentence.tokens.empty()) return "empty sentence";
  if (sentence.tokens.size() != sentence.labels.size()) {
    return "length mismatch: " + std::to_string(sentence.tokens.size()) + " tokens vs " +
           std::to_string(sentence.labels.size()) + " labels";
  }
  for (const auto& v : validate_iob2(sentence.labels, labelset)) {
    const std::string& label = sentence.labels[v.position];
    if (v.kind == ViolationKind::kUnknownLabel) {
      return "unknown label '" + label + "' at position " + std::to_string(v.position);
    }
    return "IOB2 violation (" + std::string(to_string(v.kind)) + ") at position " +
           std::to_string(v.position) + ": '" + label + "'";
  }
  return {};
}

LoadResult load_dataset(std::istream& in, const LabelSet& labelset, LoadMode mode) {
  LoadResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::string problem;
    AnnotatedSentence s;
    try {
      s = parse_record(line);
      problem = check_sentence(s, labelset);
    } catch (const FormatError& e) {
      problem = e.what();
    } catch (const json::exception& e) {
      problem = std::string("malformed record: ") + e.what();
    }
    if (problem.empty()) {
      result.sentences.push_back(std::move(s));
      continue;
    }
    if (mode == LoadMode::kStrict) {
      throw FormatError("line " + std::to_string(lineno) + ": " + problem);
    }
    result.diagnostics.push_back({lineno, std::move(problem)});
  }
  return result;
}

LoadResult load_dataset(const std::string& path, const LabelSet& labelset, LoadMode mode) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open corpus file: " + path);
  return load_dataset(in, labelset, mode);
}

std::vector<AnnotatedSentence> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<AnnotatedSentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      AnnotatedSentence s = parse_record(line);
      if (s.tokens.size() != s.labels.size()) throw FormatError("length mismatch");
      out.push_back(std::move(s));
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const json::exception& e) {
      throw FormatError("line " + std::to_string(lineno) + ": malformed record: " + e.what());
    }
  }
  return out;
}

std::string to_record(const AnnotatedSentence& sentence) {
  json record = json::object();
  record["tokens"] = sentence.tokens;
  record["labels"] = sentence.labels;
  record["doc_id"] = sentence.doc_id;
  record["period_index"] = sentence.period_index;
  return record.dump();
}

void write_dataset(std::ostream& out, std::span<const AnnotatedSentence> sentences) {
  for (const auto& s : sentences) out << to_record(s) << '\n';
}

void write_dataset(const std::string& path, std::span<const AnnotatedSentence> sentences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write corpus file: " + path);
  write_dataset(out, sentences);
}

// ---------------------------------------------------------------------------

FilterRules::FilterRules(std::vector<std::string> patterns) : patterns_(std::move(patterns)) {
  if (patterns_.empty()) throw ConfigError("filter: rule list is empty");
  for (const auto& p : patterns_) {
    try {
      compiled_.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw ConfigError("filter: invalid pattern '" + p + "': " + e.what());
    }
  }
}

std::vector<std::string> FilterRules::default_patterns() {
  return {
      R"(^[+-]?(\d{1,3}(,\d{3})+|\d+)(\.\d+)?$)",  // amounts
      R"(^[$€£¥]$)",                               // currency symbols
      R"(^\d+(\.\d+)?%$|^%$)",                     // percentages
  };
}

FilterRules FilterRules::defaults() { return FilterRules(default_patterns()); }

bool FilterRules::matches_token(const std::string& token) const {
  return std::any_of(compiled_.begin(), compiled_.end(),
                     [&](const std::regex& re) { return std::regex_search(token, re); });
}

FilterResult filter_sentences(std::span<const AnnotatedSentence> sentences, const FilterRules& rules,
                              FilterMode mode) {
  FilterResult result;
  for (const auto& s : sentences) {
    const bool tagged = std::any_of(s.labels.begin(), s.labels.end(),
                                    [](const std::string& l) { return l != kOutside; });
    const bool fires = std::any_of(s.tokens.begin(), s.tokens.end(),
                                   [&](const std::string& t) { return rules.matches_token(t); });
    if (fires || (tagged && mode == FilterMode::kTraining)) {
      result.kept.push_back(s);
      ++result.report.kept;
    } else {
      ++result.report.discarded;
      if (tagged) ++result.report.discarded_tagged;
    }
  }
  return result;
}

std::string format_filter_report(const FilterReport& report) {
  std::ostringstream out;
  out << "# xbrltag filter report v1\n"
      << "kept=" << report.kept << '\n'
      << "discarded=" << report.discarded << '\n'
      << "discarded_tagged=" << report.discarded_tagged << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------

SplitResult chronological_split(std::span<const AnnotatedSentence> sentences, SplitRatios ratios) {
  if (sentences.empty()) throw ContractError("chronological_split: empty input");
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0) {
    throw ContractError("chronological_split: negative ratio");
  }
  if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9) {
    throw ContractError("chronological_split: ratios must sum to 1");
  }
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = sentences[a];
    const auto& y = sentences[b];
    if (x.period_index != y.period_index) return x.period_index < y.period_index;
    return x.doc_id < y.doc_id;
  });
  const double n = static_cast<double>(sentences.size());
  const auto first_cut = static_cast<std::size_t>(std::llround(n * ratios.train));
  const auto second_cut =
      std::min(sentences.size(), static_cast<std::size_t>(std::llround(n * (ratios.train + ratios.dev))));
  SplitResult out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dest = i < first_cut ? out.train : (i < second_cut ? out.dev : out.test);
    dest.push_back(sentences[order[i]]);
  }
  if (out.train.empty()) throw ContractError("empty split: train");
  if (out.dev.empty()) throw ContractError("empty split: dev");
  if (out.test.empty()) throw ContractError("empty split: test");
  return out;
}

// ---------------------------------------------------------------------------

MeanStd mean_and_std(std::span<const double> values) {
  if (values.empty()) throw ContractError("mean_and_std: empty input");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / n)};
}

CorpusStats compute_stats(std::span<const AnnotatedSentence> sentences) {
  if (sentences.empty()) throw ContractError("compute_stats: empty input");
  CorpusStats stats;
  stats.sentence_count = sentences.size();
  std::vector<double> tokens;
  std::vector<double> tags;
  std::map<std::string, std::size_t> freq;
  for (const auto& s : sentences) {
    tokens.push_back(static_cast<double>(s.tokens.size()));
    const auto spans = spans_from_labels(s.labels);
    tags.push_back(static_cast<double>(spans.size()));
    for (const auto& span : spans) {
      ++freq[span.tag];
      ++stats.span_count;
      bool numeric = true;
      for (int i = span.start; i < span.end && numeric; ++i) numeric = detect_number(s.tokens[i]);
      if (numeric) ++stats.numeric_span_count;
    }
  }
  stats.tokens_per_sentence = mean_and_std(tokens);
  stats.tags_per_sentence = mean_and_std(tags);
  stats.tag_frequency.assign(freq.begin(), freq.end());
  std::stable_sort(stats.tag_frequency.begin(), stats.tag_frequency.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  stats.numeric_span_ratio = stats.span_count == 0
                                 ? 0.0
                                 : static_cast<double>(stats.numeric_span_count) /
                                       static_cast<double>(stats.span_count);
  return stats;
}

std::string format_stats_report(const CorpusStats& stats) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "# xbrltag corpus stats v1\n"
      << "sentence_count=" << stats.sentence_count << '\n'
      << "avg_tokens_per_sentence=" << stats.tokens_per_sentence.mean << '\n'
      << "std_tokens_per_sentence=" << stats.tokens_per_sentence.std << '\n'
      << "avg_tags_per_sentence=" << stats.tags_per_sentence.mean << '\n'
      << "std_tags_per_sentence=" << stats.tags_per_sentence.std << '\n'
      << "span_count=" << stats.span_count << '\n'
      << "numeric_span_count=" << stats.numeric_span_count << '\n'
      << "numeric_span_ratio=" << stats.numeric_span_ratio << '\n';
  for (const auto& [tag, count] : stats.tag_frequency) out << "tag." << tag << '=' << count << '\n';
  return out.str();
}

}  // namespace xbrltag
