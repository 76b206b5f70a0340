#include "xbrltag/eval.h"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <tuple>

#include "xbrltag/error.h"

namespace xbrltag {

void PrfCounts::finalize() {
  precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

EntityScore entity_prf(std::span<const std::vector<std::string>> gold,
                       std::span<const std::vector<std::string>> predicted, const LabelSet& labelset,
                       MacroMode macro) {
  if (gold.size() != predicted.size()) {
    throw ContractError("entity_prf: " + std::to_string(gold.size()) + " gold vs " +
                        std::to_string(predicted.size()) + " predicted sequences");
  }
  std::vector<PrfCounts> counts(labelset.tag_count());
  std::vector<char> in_gold(labelset.tag_count(), 0);
  auto tag_id = [&](const std::string& tag) {
    auto id = labelset.tag_index(tag);
    if (!id) throw ContractError("entity_prf: tag '" + tag + "' is not in the label set");
    return *id;
  };
  using Key = std::tuple<int, int, int>;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != predicted[s].size()) {
      throw ContractError("entity_prf: length mismatch in sentence " + std::to_string(s));
    }
    std::set<Key> gold_spans;
    for (const auto& span : spans_from_labels(gold[s])) {
      const int t = tag_id(span.tag);
      gold_spans.emplace(span.start, span.end, t);
      in_gold[t] = 1;
    }
    std::set<Key> pred_spans;
    for (const auto& span : spans_from_labels_lenient(predicted[s])) {
      pred_spans.emplace(span.start, span.end, tag_id(span.tag));
    }
    for (const auto& key : pred_spans) {
      auto& c = counts[std::get<2>(key)];
      if (gold_spans.count(key)) {
        ++c.tp;
      } else {
        ++c.fp;
      }
    }
    for (const auto& key : gold_spans) {
      if (!pred_spans.count(key)) ++counts[std::get<2>(key)].fn;
    }
  }
  EntityScore score;
  double f1_sum = 0.0;
  std::size_t averaged = 0;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    counts[t].finalize();
    score.micro.tp += counts[t].tp;
    score.micro.fp += counts[t].fp;
    score.micro.fn += counts[t].fn;
    if (macro == MacroMode::kAllTags || in_gold[t]) {
      f1_sum += counts[t].f1;
      ++averaged;
    }
    score.per_tag.emplace_back(labelset.tags()[t], counts[t]);
  }
  score.micro.finalize();
  score.macro_f1 = averaged == 0 ? 0.0 : f1_sum / static_cast<double>(averaged);
  return score;
}

EntityScore entity_prf(std::span<const AnnotatedSentence> gold,
                       std::span<const std::vector<std::string>> predicted, const LabelSet& labelset,
                       MacroMode macro) {
  std::vector<std::vector<std::string>> labels;
  labels.reserve(gold.size());
  for (const auto& s : gold) labels.push_back(s.labels);
  return entity_prf(labels, predicted, labelset, macro);
}

double hits_at_k(std::span<const std::vector<std::string>> ranked_tags, std::span<const std::string> gold_tags,
                 std::size_t k, std::size_t tag_count) {
  if (ranked_tags.size() != gold_tags.size()) throw ContractError("hits_at_k: list count mismatch");
  if (k < 1) throw ContractError("hits_at_k: k must be >= 1");
  if (ranked_tags.empty()) throw ContractError("hits_at_k: no words to evaluate");
  if (k > tag_count) {
    std::cerr << "warning: hits_at_k: k=" << k << " exceeds tag count " << tag_count << ", clamping\n";
    k = tag_count;
  }
  std::size_t hits = 0;
  for (std::size_t w = 0; w < ranked_tags.size(); ++w) {
    const auto& list = ranked_tags[w];
    const auto stop = list.begin() + static_cast<long>(std::min(k, list.size()));
    if (std::find(list.begin(), stop, gold_tags[w]) != stop) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ranked_tags.size());
}

std::vector<double> hits_curve(std::span<const std::size_t> gold_ranks, std::size_t k_max) {
  if (gold_ranks.empty()) throw ContractError("hits_curve: no words to evaluate");
  std::vector<std::size_t> at_rank(k_max + 1, 0);
  for (std::size_t r : gold_ranks) {
    if (r >= 1 && r <= k_max) ++at_rank[r];
  }
  std::vector<double> curve;
  std::size_t running = 0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    running += at_rank[k];
    curve.push_back(static_cast<double>(running) / static_cast<double>(gold_ranks.size()));
  }
  return curve;
}

std::string format_hits_report(std::span<const double> curve, std::size_t words, std::size_t tag_count) {
  std::ostringstream out;
  out << "# xbrltag hits-at-k v1\n"
      << "words=" << words << '\n'
      << "tags=" << tag_count << '\n'
      << "k\thits_at_k\n";
  char line[64];
  for (std::size_t k = 0; k < curve.size(); ++k) {
    std::snprintf(line, sizeof(line), "%zu\t%.6f\n", k + 1, curve[k]);
    out << line;
  }
  return out.str();
}

namespace {

template <typename Seq>
InvalidSequenceReport tally(std::span<const Seq> sequences, const LabelSet& labelset) {
  InvalidSequenceReport r;
  r.sequences = sequences.size();
  for (const auto& seq : sequences) {
    const auto violations = validate_iob2(std::span(seq), labelset);
    if (!violations.empty()) ++r.sequences_with_violations;
    r.total_violations += violations.size();
    for (const auto& v : violations) ++r.violations_by_kind[v.kind];
  }
  r.violation_rate = r.sequences == 0 ? 0.0
                                      : static_cast<double>(r.sequences_with_violations) /
                                            static_cast<double>(r.sequences);
  return r;
}

}  // namespace

InvalidSequenceReport invalid_sequence_report(std::span<const std::vector<std::string>> sequences,
                                              const LabelSet& labelset) {
  return tally(sequences, labelset);
}

InvalidSequenceReport invalid_sequence_report(std::span<const std::vector<int>> sequences,
                                              const LabelSet& labelset) {
  return tally(sequences, labelset);
}

std::string format_eval_report(const EntityScore& score, const InvalidSequenceReport* invalid) {
  std::ostringstream out;
  char line[256];
  out << "# xbrltag eval report v1\n";
  std::snprintf(line, sizeof(line), "micro_precision=%.4f\nmicro_recall=%.4f\nmicro_f1=%.4f\nmacro_f1=%.4f\n",
                score.micro.precision, score.micro.recall, score.micro.f1, score.macro_f1);
  out << line;
  out << "tp=" << score.micro.tp << "\nfp=" << score.micro.fp << "\nfn=" << score.micro.fn << '\n';
  if (invalid) {
    std::snprintf(line, sizeof(line), "invalid_sequences=%zu\ninvalid_rate=%.6f\n",
                  invalid->sequences_with_violations, invalid->violation_rate);
    out << line;
    for (const auto& [kind, count] : invalid->violations_by_kind) {
      out << "violations." << to_string(kind) << '=' << count << '\n';
    }
  }
  for (const auto& [tag, c] : score.per_tag) {
    std::snprintf(line, sizeof(line), "tag.%s=tp:%zu fp:%zu fn:%zu p:%.4f r:%.4f f1:%.4f\n", tag.c_str(), c.tp,
                  c.fp, c.fn, c.precision, c.recall, c.f1);
    out << line;
  }
  return out.str();
}

RunAggregate aggregate_runs(std::span<const MetricRecord> runs) {
  if (runs.empty()) throw ContractError("aggregate_runs: no runs");
  RunAggregate agg;
  agg.runs = runs.size();
  for (const auto& run : runs) {
    if (run.size() != runs[0].size() ||
        !std::equal(run.begin(), run.end(), runs[0].begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw ContractError("aggregate_runs: runs report different metric keys");
    }
  }
  for (const auto& [key, unused] : runs[0]) {
    std::vector<double> values;
    for (const auto& run : runs) values.push_back(run.at(key));
    agg.metrics[key] = mean_and_std(values);
  }
  return agg;
}

}  // namespace xbrltag
