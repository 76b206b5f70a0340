#include "doctest.h"

#include <map>
#include <set>
#include <sstream>

#include "xbrltag/corpus.h"
#include "xbrltag/error.h"
#include "xbrltag/synthetic.h"
#include "xbrltag/tokenize.h"

using namespace xbrltag;

namespace {

std::string serialize(const std::vector<AnnotatedSentence>& corpus) {
  std::ostringstream out;
  write_dataset(out, corpus);
  return out.str();
}

}  // namespace

TEST_CASE("generator is deterministic") {
  const LabelSet small = synthetic_labelset(4);
  SyntheticConfig one;
  one.n_sentences = 1;
  one.n_tags = 4;
  one.seed = 7;
  CHECK(serialize(generate_synthetic(one, small)) == serialize(generate_synthetic(one, small)));

  const LabelSet labels = synthetic_labelset(12);
  SyntheticConfig config;
  config.n_sentences = 300;
  const auto a = serialize(generate_synthetic(config, labels));
  CHECK(a == serialize(generate_synthetic(config, labels)));
  config.seed = 2;
  CHECK(a != serialize(generate_synthetic(config, labels)));
}

TEST_CASE("generated sentences are valid and mostly numeric") {
  const LabelSet labels = synthetic_labelset(12);
  SyntheticConfig config;
  config.n_sentences = 1000;
  config.seed = 1;
  const auto corpus = generate_synthetic(config, labels);
  REQUIRE(corpus.size() == 1000);
  std::size_t spans = 0, numeric = 0;
  std::int64_t last_period = -1;
  for (const auto& s : corpus) {
    CHECK(check_sentence(s, labels).empty());
    CHECK(s.period_index >= last_period);
    last_period = s.period_index;
    for (const auto& span : spans_from_labels(s.labels)) {
      ++spans;
      bool all = true;
      for (int w = span.start; w < span.end; ++w) all = all && detect_number(s.tokens[w]);
      if (all) ++numeric;
    }
  }
  CHECK(spans > 1000);
  const double ratio = static_cast<double>(numeric) / static_cast<double>(spans);
  CHECK(ratio >= 0.9);
  CHECK(compute_stats(corpus).numeric_span_ratio == doctest::Approx(ratio));
}

TEST_CASE("every tag occurs and shape tracks the tag family") {
  const LabelSet labels = synthetic_labelset(12);
  const auto profiles = synthetic_profiles(labels, 12);
  REQUIRE(profiles.size() == 12);
  SyntheticConfig config;
  config.n_sentences = 2000;
  const auto corpus = generate_synthetic(config, labels);
  std::map<std::string, std::map<std::string, int>> shapes_by_tag;
  for (const auto& s : corpus) {
    for (const auto& span : spans_from_labels(s.labels)) {
      if (detect_number(s.tokens[span.start])) ++shapes_by_tag[span.tag][shape_of(s.tokens[span.start])];
    }
  }
  CHECK(shapes_by_tag.size() == 12);
  // Tags sharing a group word differ in family; most of one tag's mentions
  // carry a shape its partner never produces.
  for (const auto& a : profiles) {
    for (const auto& b : profiles) {
      if (a.tag == b.tag || a.group_word != b.group_word) continue;
      REQUIRE(a.family != b.family);
      int shared = 0, total = 0;
      for (const auto& [shape, n] : shapes_by_tag[a.tag]) {
        total += n;
        if (shapes_by_tag[b.tag].count(shape)) shared += n;
      }
      CHECK_MESSAGE(2 * shared < total, a.tag << " vs " << b.tag);
    }
  }
}

TEST_CASE("generator config errors") {
  const LabelSet labels = synthetic_labelset(12);
  SyntheticConfig config;
  config.n_tags = 3;
  CHECK_THROWS_AS(generate_synthetic(config, labels), ContractError);
  config.n_tags = 12;
  config.n_sentences = 0;
  CHECK_THROWS_AS(generate_synthetic(config, labels), ContractError);
  config.n_sentences = 5;
  config.n_tags = 20;
  CHECK_THROWS_AS(generate_synthetic(config, labels), ContractError);
}

TEST_CASE("label set beyond the catalog uses placeholder names") {
  const LabelSet big = synthetic_labelset(30);
  CHECK(big.tag_count() == 30);
  CHECK(big.tags()[29] == "SyntheticConcept029");
  SyntheticConfig config;
  config.n_sentences = 50;
  config.n_tags = 30;
  for (const auto& s : generate_synthetic(config, big)) CHECK(check_sentence(s, big).empty());
}
