#include "xbrltag/ablation.h"

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "xbrltag/error.h"

namespace xbrltag {

namespace {

using nlohmann::json;

MetricRecord evaluate_run(const Tagger& tagger, std::span<const AnnotatedSentence> dev_set,
                          std::span<const AnnotatedSentence> test_set) {
  auto predict_all = [&](std::span<const AnnotatedSentence> set, std::vector<std::vector<int>>* units) {
    std::vector<std::vector<std::string>> out;
    out.reserve(set.size());
    for (const auto& s : set) {
      auto p = predict_detailed(tagger, s.tokens);
      if (units) units->push_back(std::move(p.unit_labels));
      out.push_back(std::move(p.labels));
    }
    return out;
  };
  MetricRecord m;
  const auto& labels = tagger.labelset();
  m["dev_micro_f1"] = dev_set.empty() ? 0.0 : entity_prf(dev_set, predict_all(dev_set, nullptr), labels).micro.f1;
  std::vector<std::vector<int>> units;
  const auto test_pred = predict_all(test_set, &units);
  const auto score = entity_prf(test_set, test_pred, labels);
  m["test_micro_precision"] = score.micro.precision;
  m["test_micro_recall"] = score.micro.recall;
  m["test_micro_f1"] = score.micro.f1;
  m["test_macro_f1"] = score.macro_f1;
  m["test_invalid_rate"] = invalid_sequence_report(std::span<const std::vector<int>>(units), labels).violation_rate;
  m["test_word_invalid_rate"] = invalid_sequence_report(std::span<const std::vector<std::string>>(test_pred), labels)
                                    .violation_rate;
  return m;
}

json cell_fields(const AblationCell& cell) {
  return {{"policy", std::string(to_string(cell.policy))},
          {"head", std::string(to_string(cell.head))},
          {"granularity", std::string(to_string(cell.granularity))}};
}

}  // namespace

const std::vector<std::string>& ablation_metric_keys() {
  static const std::vector<std::string> keys{"dev_micro_f1",  "test_micro_precision", "test_micro_recall",
                                             "test_micro_f1", "test_macro_f1",        "test_invalid_rate",
                                             "test_word_invalid_rate"};
  return keys;
}

AblationResult run_ablation(std::span<const AnnotatedSentence> train_set, std::span<const AnnotatedSentence> dev_set,
                            std::span<const AnnotatedSentence> test_set, const LabelSet& labelset,
                            const AblationConfig& config) {
  if (train_set.empty() || test_set.empty()) throw ContractError("ablation: train and test splits must be nonempty");
  if (config.seeds.empty()) throw ContractError("ablation: at least one seed is required");
  const SubwordVocab vocab = SubwordVocab::build(train_set, config.vocab_min_count);
  const ShapeVocab shapes = ShapeVocab::from_sentences(train_set);

  AblationResult result;
  for (NumericPolicy policy : config.policies) {
    result.fragmentation[policy] = fragmentation_stats(test_set, vocab, policy, &shapes);
    for (Head head : config.heads) {
      for (Granularity granularity : config.granularities) {
        AblationCellResult cell;
        cell.cell = {policy, head, granularity};
        std::vector<MetricRecord> ok_runs;
        for (std::uint64_t seed : config.seeds) {
          AblationRun run;
          run.seed = seed;
          try {
            TrainSpec spec{labelset, config.features, config.train, head, granularity, policy};
            spec.train.seed = seed;
            auto trained = train(train_set, dev_set, spec, &vocab, &shapes);
            run.best_epoch = trained.best_epoch;
            Tagger tagger(std::move(trained.model), vocab, shapes);
            run.metrics = evaluate_run(tagger, dev_set, test_set);
            run.ok = true;
            ok_runs.push_back(run.metrics);
          } catch (const std::exception& e) {
            run.error = e.what();
            cell.failed = true;
          }
          cell.runs.push_back(std::move(run));
        }
        if (!ok_runs.empty()) cell.aggregate = aggregate_runs(ok_runs);
        result.cells.push_back(std::move(cell));
      }
    }
  }
  return result;
}

std::string format_ablation_table(const AblationResult& result) {
  std::ostringstream out;
  for (const auto& cell : result.cells) {
    for (const auto& run : cell.runs) {
      json row = cell_fields(cell.cell);
      row["kind"] = "run";
      row["seed"] = run.seed;
      row["status"] = run.ok ? "ok" : "failed";
      if (run.ok) {
        row["best_epoch"] = run.best_epoch;
        for (const auto& key : ablation_metric_keys()) row[key] = run.metrics.at(key);
      } else {
        row["error"] = run.error;
      }
      out << row.dump() << '\n';
    }
    json agg = cell_fields(cell.cell);
    agg["kind"] = "cell";
    agg["runs"] = cell.aggregate.runs;
    agg["status"] = cell.failed ? "failed" : "ok";
    for (const auto& key : ablation_metric_keys()) {
      auto it = cell.aggregate.metrics.find(key);
      if (it == cell.aggregate.metrics.end()) continue;
      agg[key + "_mean"] = it->second.mean;
      agg[key + "_std"] = it->second.std;
    }
    out << agg.dump() << '\n';
  }
  for (const auto& [policy, frag] : result.fragmentation) {
    json row{{"kind", "fragmentation"},
             {"policy", std::string(to_string(policy))},
             {"avg_pieces_per_gold_span", frag.avg_pieces_per_gold_span},
             {"avg_words_per_gold_span", frag.avg_words_per_gold_span},
             {"span_count", frag.span_count}};
    out << row.dump() << '\n';
  }
  return out.str();
}

std::string format_ablation_report(const AblationResult& result) {
  std::ostringstream out;
  char line[256];
  out << "# xbrltag ablation report v1\n";
  std::snprintf(line, sizeof(line), "%-7s %-8s %-8s %5s %17s %17s %17s %9s %s\n", "policy", "head", "gran", "runs",
                "dev_micro_f1", "test_micro_f1", "test_macro_f1", "invalid", "status");
  out << line;
  for (const auto& cell : result.cells) {
    auto stat = [&](const std::string& key) {
      char buf[32];
      auto it = cell.aggregate.metrics.find(key);
      if (it == cell.aggregate.metrics.end()) return std::string("-");
      std::snprintf(buf, sizeof(buf), "%6.2f +- %5.2f", 100.0 * it->second.mean, 100.0 * it->second.std);
      return std::string(buf);
    };
    std::string invalid = "-";
    if (auto it = cell.aggregate.metrics.find("test_invalid_rate"); it != cell.aggregate.metrics.end()) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", it->second.mean);
      invalid = buf;
    }
    std::snprintf(line, sizeof(line), "%-7s %-8s %-8s %5zu %17s %17s %17s %9s %s\n",
                  std::string(to_string(cell.cell.policy)).c_str(), std::string(to_string(cell.cell.head)).c_str(),
                  std::string(to_string(cell.cell.granularity)).c_str(), cell.aggregate.runs,
                  stat("dev_micro_f1").c_str(), stat("test_micro_f1").c_str(), stat("test_macro_f1").c_str(),
                  invalid.c_str(), cell.failed ? "failed" : "ok");
    out << line;
    for (const auto& run : cell.runs) {
      if (!run.ok) out << "  seed " << run.seed << " failed: " << run.error << '\n';
    }
  }
  out << "\n# fragmentation (test split)\n";
  for (const auto& [policy, frag] : result.fragmentation) {
    std::snprintf(line, sizeof(line), "%-7s pieces/span=%.3f words/span=%.3f spans=%zu\n",
                  std::string(to_string(policy)).c_str(), frag.avg_pieces_per_gold_span, frag.avg_words_per_gold_span,
                  frag.span_count);
    out << line;
  }
  return out.str();
}

}  // namespace xbrltag
