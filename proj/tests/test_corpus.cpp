#include "doctest.h"

#include <fstream>
#include <set>
#include <sstream>

#include "test_util.h"
#include "xbrltag/corpus.h"
#include "xbrltag/error.h"
#include "xbrltag/synthetic.h"

using namespace xbrltag;
using Tokens = std::vector<std::string>;

namespace {

LabelSet revenues() { return LabelSet({"Revenues", "Expenses"}); }

AnnotatedSentence sentence(Tokens tokens, Tokens labels, std::string doc = "d", std::int64_t period = 0) {
  return {std::move(tokens), std::move(labels), std::move(doc), period};
}

std::vector<AnnotatedSentence> numbered(int n, std::int64_t period_of(int)) {
  std::vector<AnnotatedSentence> out;
  for (int i = 0; i < n; ++i) out.push_back(sentence({"t" + std::to_string(i)}, {"O"}, "d", period_of(i)));
  return out;
}

}  // namespace

TEST_CASE("load_dataset examples") {
  const LabelSet set = revenues();
  std::istringstream ok(R"({"tokens":["total","23.5","million"],"labels":["O","B-Revenues","O"]})");
  auto r = load_dataset(ok, set);
  REQUIRE(r.sentences.size() == 1);
  CHECK(r.diagnostics.empty());
  CHECK(r.sentences[0].labels[1] == "B-Revenues");

  std::istringstream bad(R"({"tokens":["total","23.5","million"],"labels":["O","I-Revenues","O"]})");
  r = load_dataset(bad, set);
  CHECK(r.sentences.empty());
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].message.find("IOB2") != std::string::npos);

  std::istringstream three(
      "{\"tokens\":[\"a\"],\"labels\":[\"O\"]}\n"
      "{not json\n"
      "{\"tokens\":[\"b\"],\"labels\":[\"B-Expenses\"],\"doc_id\":\"x\",\"period_index\":3}\n");
  r = load_dataset(three, set);
  CHECK(r.sentences.size() == 2);
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].line == 2);
  CHECK(r.sentences[1].period_index == 3);
}

TEST_CASE("load_dataset rejects each bad record kind") {
  const LabelSet set = revenues();
  const std::vector<std::string> lines{
      R"({"tokens":["a","b"],"labels":["O"]})",
      R"({"tokens":["a"],"labels":["B-Unknown"]})",
      R"({"tokens":["a"]})",
      R"({"tokens":"a","labels":["O"]})",
      R"({"tokens":[],"labels":[]})",
      R"([1,2])",
  };
  for (const auto& line : lines) {
    std::istringstream in(line);
    auto r = load_dataset(in, set);
    CHECK_MESSAGE(r.sentences.empty(), line);
    CHECK(r.diagnostics.size() == 1);
    std::istringstream again(line);
    CHECK_THROWS_AS(load_dataset(again, set, LoadMode::kStrict), FormatError);
  }
}

TEST_CASE("strict mode names the line") {
  std::istringstream in("{\"tokens\":[\"a\"],\"labels\":[\"O\"]}\n\n{\"tokens\":[\"a\"],\"labels\":[\"I-Revenues\"]}\n");
  try {
    load_dataset(in, revenues(), LoadMode::kStrict);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).rfind("line 3:", 0) == 0);
  }
}

TEST_CASE("field aliases are accepted") {
  std::istringstream in(R"({"id":"7","tokens":["a"],"ner_tags":["B-Revenues"]})");
  auto r = load_dataset(in, revenues());
  REQUIRE(r.sentences.size() == 1);
  CHECK(r.sentences[0].doc_id == "7");
}

TEST_CASE("corpus write/read identity") {
  const LabelSet labels = synthetic_labelset(12);
  SyntheticConfig config;
  config.n_sentences = 500;
  const auto corpus = generate_synthetic(config, labels);
  xbrltag::testing::TempDir dir("corpus");
  write_dataset(dir.file("c.jsonl"), corpus);
  const auto back = load_dataset(dir.file("c.jsonl"), labels, LoadMode::kStrict);
  CHECK(back.diagnostics.empty());
  CHECK(back.sentences == corpus);

  std::ostringstream a, b;
  write_dataset(a, corpus);
  write_dataset(b, back.sentences);
  CHECK(a.str() == b.str());
}

TEST_CASE("prediction files skip IOB2 validation") {
  xbrltag::testing::TempDir dir("pred");
  {
    std::ofstream out(dir.file("p.jsonl"));
    out << R"({"tokens":["a","b"],"labels":["O","I-X"]})" << '\n';
  }
  const auto p = load_predictions(dir.file("p.jsonl"));
  REQUIRE(p.size() == 1);
  CHECK(p[0].labels[1] == "I-X");
  {
    std::ofstream out(dir.file("bad.jsonl"));
    out << R"({"tokens":["a","b"],"labels":["O"]})" << '\n';
  }
  CHECK_THROWS_AS(load_predictions(dir.file("bad.jsonl")), FormatError);
}

TEST_CASE("filter examples") {
  const FilterRules rules = FilterRules::defaults();
  const std::vector<AnnotatedSentence> input{
      sentence({"net", "loss", "widened"}, {"O", "O", "O"}),
      sentence({"paid", "$", "1,000", "in", "fees"}, {"O", "O", "O", "O", "O"}),
      sentence({"revenue", "rose"}, {"B-Revenues", "O"}),
      sentence({"margin", "of", "5%"}, {"O", "O", "O"}),
  };
  auto r = filter_sentences(input, rules);
  CHECK(r.kept.size() == 3);
  CHECK(r.kept[0].tokens[0] == "paid");
  CHECK(r.report.kept == 3);
  CHECK(r.report.discarded == 1);
  CHECK(r.report.discarded_tagged == 0);

  auto inference = filter_sentences(input, rules, FilterMode::kInference);
  CHECK(inference.kept.size() == 2);
  CHECK(inference.report.discarded_tagged == 1);
  CHECK(inference.report.kept + inference.report.discarded == input.size());

  CHECK_THROWS_AS(FilterRules({}), ConfigError);
  CHECK_THROWS_AS(FilterRules({"(unclosed"}), ConfigError);
  CHECK(format_filter_report(r.report) == "# xbrltag filter report v1\nkept=3\ndiscarded=1\ndiscarded_tagged=0\n");
}

TEST_CASE("filter never drops tagged sentences in training mode") {
  const LabelSet labels = synthetic_labelset(12);
  SyntheticConfig config;
  config.n_sentences = 400;
  auto corpus = generate_synthetic(config, labels);
  corpus.push_back(sentence({"nothing", "here"}, {"O", "O"}));
  const auto r = filter_sentences(corpus, FilterRules({"^zzz$"}));
  CHECK(r.report.discarded_tagged == 0);
  CHECK(r.report.kept + r.report.discarded == corpus.size());
  CHECK(r.report.discarded == 1);
}

TEST_CASE("split examples") {
  auto flat = numbered(10, [](int) -> std::int64_t { return 0; });
  auto s = chronological_split(flat, {0.8, 0.1, 0.1});
  CHECK(s.train.size() == 8);
  CHECK(s.dev.size() == 1);
  CHECK(s.test.size() == 1);
  for (int i = 0; i < 8; ++i) CHECK(s.train[i].tokens[0] == "t" + std::to_string(i));
  CHECK(s.test[0].tokens[0] == "t9");

  try {
    chronological_split(flat, {0.5, 0.5, 0.0});
    FAIL("expected error");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()) == "empty split: test");
  }
  CHECK_THROWS_AS(chronological_split(flat, {0.5, 0.3, 0.1}), ContractError);
  CHECK_THROWS_AS(chronological_split(std::vector<AnnotatedSentence>{}, {0.8, 0.1, 0.1}), ContractError);
}

TEST_CASE("split is chronological, disjoint and covering") {
  Rng rng(2);
  std::vector<AnnotatedSentence> input;
  for (int i = 0; i < 300; ++i) {
    input.push_back(sentence({"w" + std::to_string(i)}, {"O"}, "doc" + std::to_string(rng.below(20)),
                             static_cast<std::int64_t>(rng.below(50))));
  }
  const auto s = chronological_split(input, {0.8, 0.1, 0.1});
  CHECK(s.train.size() + s.dev.size() + s.test.size() == input.size());
  std::multiset<std::string> seen;
  for (const auto* part : {&s.train, &s.dev, &s.test}) {
    for (const auto& x : *part) seen.insert(x.tokens[0]);
  }
  CHECK(seen.size() == input.size());
  CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == input.size());
  auto max_period = [](const std::vector<AnnotatedSentence>& v) {
    std::int64_t m = INT64_MIN;
    for (const auto& x : v) m = std::max(m, x.period_index);
    return m;
  };
  auto min_period = [](const std::vector<AnnotatedSentence>& v) {
    std::int64_t m = INT64_MAX;
    for (const auto& x : v) m = std::min(m, x.period_index);
    return m;
  };
  CHECK(max_period(s.train) <= min_period(s.dev));
  CHECK(max_period(s.dev) <= min_period(s.test));
}

TEST_CASE("stats examples") {
  std::vector<AnnotatedSentence> two{sentence({"a", "b", "c", "d"}, {"O", "O", "O", "O"}),
                                     sentence({"a", "b", "c", "23.5", "e", "f"}, {"O", "O", "O", "B-Revenues", "O", "O"})};
  auto st = compute_stats(two);
  CHECK(st.sentence_count == 2);
  CHECK(st.tokens_per_sentence.mean == doctest::Approx(5.0));
  CHECK(st.tokens_per_sentence.std == doctest::Approx(1.0));
  CHECK(st.tags_per_sentence.mean == doctest::Approx(0.5));
  CHECK(st.numeric_span_ratio == doctest::Approx(1.0));
  REQUIRE(st.tag_frequency.size() == 1);
  CHECK(st.tag_frequency[0] == std::pair<std::string, std::size_t>{"Revenues", 1});

  std::vector<AnnotatedSentence> mixed{sentence({"net", "sales", "of", "5"}, {"B-Revenues", "I-Revenues", "O", "B-Expenses"})};
  st = compute_stats(mixed);
  CHECK(st.numeric_span_ratio == doctest::Approx(0.5));
  CHECK_THROWS_AS(compute_stats(std::vector<AnnotatedSentence>{}), ContractError);

  const auto report = format_stats_report(compute_stats(two));
  CHECK(report.rfind("# xbrltag corpus stats v1\n", 0) == 0);
  CHECK(report.find("sentence_count=2\n") != std::string::npos);
  CHECK(report.find("tag.Revenues=1\n") != std::string::npos);
}

TEST_CASE("stats tag frequency sums to span count and is sorted") {
  const LabelSet labels = synthetic_labelset(12);
  SyntheticConfig config;
  config.n_sentences = 1000;
  const auto corpus = generate_synthetic(config, labels);
  const auto st = compute_stats(corpus);
  std::size_t total = 0, spans = 0;
  for (const auto& [tag, n] : st.tag_frequency) total += n;
  for (const auto& s : corpus) spans += spans_from_labels(s.labels).size();
  CHECK(total == spans);
  CHECK(st.span_count == spans);
  for (std::size_t i = 1; i < st.tag_frequency.size(); ++i) {
    CHECK(st.tag_frequency[i - 1].second >= st.tag_frequency[i].second);
  }
}

TEST_CASE("mean and population std") {
  const std::vector<double> runs{77.3, 77.9, 76.7};
  const auto m = mean_and_std(runs);
  CHECK(m.mean == doctest::Approx(77.3));
  CHECK(m.std == doctest::Approx(0.4899).epsilon(1e-3));
  CHECK(mean_and_std(std::vector<double>{4.0}).std == 0.0);
}
