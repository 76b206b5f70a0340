#include "doctest.h"

#include <sstream>

#include "json.hpp"
#include "xbrltag/ablation.h"
#include "xbrltag/synthetic.h"

using namespace xbrltag;
using nlohmann::json;

namespace {

struct Splits {
  LabelSet labels = synthetic_labelset(12);
  std::vector<AnnotatedSentence> train, dev, test;
  Splits() {
    SyntheticConfig config;
    config.n_sentences = 700;
    config.seed = 3;
    const auto all = generate_synthetic(config, labels);
    const auto split = chronological_split(all, {0.7, 0.15, 0.15});
    train = split.train;
    dev = split.dev;
    test = split.test;
  }
};

const Splits& splits() {
  static const Splits s;
  return s;
}

AblationConfig small_config() {
  AblationConfig c;
  c.policies = {NumericPolicy::kNone, NumericPolicy::kShape};
  c.seeds = {1};
  c.features.hash_dimension = 1u << 14;
  c.train.epochs = 2;
  return c;
}

std::vector<json> rows_of(const std::string& table, const std::string& kind) {
  std::vector<json> out;
  std::istringstream in(table);
  std::string line;
  while (std::getline(in, line)) {
    const json row = json::parse(line);
    if (row.at("kind") == kind) out.push_back(row);
  }
  return out;
}

}  // namespace

TEST_CASE("two-policy ablation yields a fully populated two-row table") {
  const auto& s = splits();
  const auto result = run_ablation(s.train, s.dev, s.test, s.labels, small_config());
  REQUIRE(result.cells.size() == 2);
  CHECK(result.cells[0].cell.policy == NumericPolicy::kNone);
  CHECK(result.cells[1].cell.policy == NumericPolicy::kShape);
  for (const auto& cell : result.cells) {
    CHECK_FALSE(cell.failed);
    REQUIRE(cell.runs.size() == 1);
    CHECK(cell.runs[0].ok);
    CHECK(cell.aggregate.runs == 1);
    for (const auto& key : ablation_metric_keys()) {
      REQUIRE(cell.runs[0].metrics.count(key));
      const double v = cell.runs[0].metrics.at(key);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(cell.aggregate.metrics.at(key).std == 0.0);
    }
  }
  CHECK(result.fragmentation.size() == 2);
  CHECK(result.fragmentation.at(NumericPolicy::kNone).avg_pieces_per_gold_span >
        result.fragmentation.at(NumericPolicy::kShape).avg_pieces_per_gold_span);

  const std::string table = format_ablation_table(result);
  const auto cells = rows_of(table, "cell");
  REQUIRE(cells.size() == 2);
  for (const auto& row : cells) {
    CHECK(row.at("status") == "ok");
    for (const auto& key : ablation_metric_keys()) {
      CHECK(row.contains(key + "_mean"));
      CHECK(row.contains(key + "_std"));
    }
  }
  CHECK(rows_of(table, "run").size() == 2);
  CHECK(rows_of(table, "fragmentation").size() == 2);

  const std::string report = format_ablation_report(result);
  CHECK(report.rfind("# xbrltag ablation report v1\n", 0) == 0);
  CHECK(report.find("shape") != std::string::npos);
}

TEST_CASE("ablation table bytes are reproducible") {
  const auto& s = splits();
  const auto config = small_config();
  const auto a = format_ablation_table(run_ablation(s.train, s.dev, s.test, s.labels, config));
  const auto b = format_ablation_table(run_ablation(s.train, s.dev, s.test, s.labels, config));
  CHECK(a == b);
}

TEST_CASE("a failing run marks its cell and the harness carries on") {
  const auto& s = splits();
  auto config = small_config();
  config.policies = {NumericPolicy::kNum};
  config.heads = {Head::kSoftmax, Head::kCrf};
  config.train.learning_rate = 1e308;
  config.train.l2_strength = 1e308;
  const auto result = run_ablation(s.train, s.dev, s.test, s.labels, config);
  REQUIRE(result.cells.size() == 2);
  for (const auto& cell : result.cells) {
    CHECK(cell.failed);
    REQUIRE(cell.runs.size() == 1);
    CHECK_FALSE(cell.runs[0].ok);
    CHECK_FALSE(cell.runs[0].error.empty());
    CHECK(cell.runs[0].metrics.empty());
  }
  const auto cells = rows_of(format_ablation_table(result), "cell");
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].at("status") == "failed");
  CHECK(format_ablation_report(result).find("failed") != std::string::npos);
}
