#include "doctest.h"

#include <cmath>

#include "crf_oracle.h"
#include "test_util.h"
#include "xbrltag/crf.h"
#include "xbrltag/error.h"
#include "xbrltag/labels.h"

using namespace xbrltag;
using xbrltag::testing::abc_labels;
using xbrltag::testing::brute_force;
using xbrltag::testing::random_crf;
using xbrltag::testing::relative_error;

namespace {

EmissionMatrix rows(std::initializer_list<std::initializer_list<double>> values) {
  EmissionMatrix m(values.size(), values.begin()->size());
  std::size_t t = 0;
  for (const auto& r : values) {
    std::size_t y = 0;
    for (double v : r) m(t, y++) = v;
    ++t;
  }
  return m;
}

// Central-difference derivative of the loss with respect to *slot.
double numeric_derivative(double* slot, const std::function<double()>& loss) {
  const double h = 1e-5;
  const double saved = *slot;
  *slot = saved + h;
  const double up = loss();
  *slot = saved - h;
  const double down = loss();
  *slot = saved;
  return (up - down) / (2 * h);
}

}  // namespace

TEST_CASE("crf examples") {
  const EmissionMatrix e = rows({{1.0, 2.0}});
  const CrfParams p = CrfParams::zeros(2);
  CHECK(sequence_score(e, p, std::vector<int>{1}) == doctest::Approx(2.0));
  CHECK(log_partition(EmissionMatrix(1, 2), p) == doctest::Approx(std::log(2.0)));
  CHECK(log_partition(EmissionMatrix(2, 2), p) == doctest::Approx(std::log(4.0)));

  const auto single = nll_and_gradient(rows({{0.3}, {-1.2}, {4.0}}), CrfParams::zeros(1), std::vector<int>{0, 0, 0});
  CHECK(std::abs(single.loss) < 1e-12);

  CHECK_THROWS_AS(sequence_score(e, p, std::vector<int>{2}), ContractError);
  CHECK_THROWS_AS(sequence_score(e, p, std::vector<int>{0, 1}), ContractError);
  CHECK_THROWS_AS(log_partition(EmissionMatrix(0, 2), p), ContractError);
  CHECK_THROWS_AS(log_partition(EmissionMatrix(2, 3), p), ContractError);
}

TEST_CASE("partition, marginals and viterbi match brute force") {
  Rng rng(17);
  int instances = 0;
  for (std::size_t T = 1; T <= 6; ++T) {
    for (std::size_t L = 1; L <= 5; ++L) {
      for (int trial = 0; trial < 4; ++trial) {
        const auto c = random_crf(rng, T, L);
        const auto bf = brute_force(c.emissions, c.params);
        CHECK(log_partition(c.emissions, c.params) == doctest::Approx(bf.log_z).epsilon(1e-10));
        CHECK(sequence_score(c.emissions, c.params, c.gold) ==
              doctest::Approx(xbrltag::testing::score_oracle(c.emissions, c.params, c.gold)).epsilon(1e-12));
        const Matrix m = marginals(c.emissions, c.params);
        for (std::size_t t = 0; t < T; ++t) {
          double total = 0.0;
          for (std::size_t y = 0; y < L; ++y) {
            CHECK(std::abs(m(t, y) - bf.marginals(t, y)) < 1e-9);
            total += m(t, y);
          }
          CHECK(std::abs(total - 1.0) < 1e-9);
        }
        const auto d = viterbi_decode(c.emissions, c.params);
        CHECK(d.labels == bf.best);
        CHECK(d.score == doctest::Approx(bf.best_score).epsilon(1e-12));
        ++instances;
      }
    }
  }
  CHECK(instances == 120);
}

TEST_CASE("nll is log Z minus gold score and non-negative") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_crf(rng, 1 + rng.below(6), 1 + rng.below(5));
    const auto r = nll_and_gradient(c.emissions, c.params, c.gold);
    const auto bf = brute_force(c.emissions, c.params);
    CHECK(r.loss == doctest::Approx(bf.log_z - xbrltag::testing::score_oracle(c.emissions, c.params, c.gold)));
    CHECK(r.loss >= -1e-12);
  }
}

TEST_CASE("shifting a position's emissions leaves marginals unchanged") {
  Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    auto c = random_crf(rng, 2 + rng.below(5), 2 + rng.below(4));
    const Matrix before = marginals(c.emissions, c.params);
    const double z = log_partition(c.emissions, c.params);
    const std::size_t t = rng.below(c.emissions.rows());
    const double shift = 10.0 * (rng.unit() - 0.5);
    for (double& v : c.emissions.row(t)) v += shift;
    const Matrix after = marginals(c.emissions, c.params);
    for (std::size_t i = 0; i < before.data().size(); ++i) CHECK(std::abs(before.data()[i] - after.data()[i]) < 1e-9);
    CHECK(log_partition(c.emissions, c.params) == doctest::Approx(z + shift).epsilon(1e-10));
  }
}

TEST_CASE("large emissions stay finite") {
  EmissionMatrix e(4, 3);
  for (std::size_t t = 0; t < 4; ++t) e(t, t % 3) = 800.0;
  const CrfParams p = CrfParams::zeros(3);
  CHECK(std::isfinite(log_partition(e, p)));
  const Matrix m = marginals(e, p);
  for (double v : m.data()) CHECK(std::isfinite(v));
  CHECK(m(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("viterbi ties go to the lowest index from the end backwards") {
  // All-zero scores: every sequence ties.
  CHECK(viterbi_decode(EmissionMatrix(3, 4), CrfParams::zeros(4)).labels == std::vector<int>{0, 0, 0});

  CHECK(viterbi_decode(rows({{1, 1, 0}}), CrfParams::zeros(3)).labels == std::vector<int>{0});

  // Integer-valued scores make exact ties common; compare with the oracle rule.
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t T = 1 + rng.below(5), L = 1 + rng.below(4);
    EmissionMatrix e(T, L);
    CrfParams p = CrfParams::zeros(L);
    for (double& v : e.data()) v = static_cast<double>(rng.below(3));
    for (double& v : p.transitions.data()) v = static_cast<double>(rng.below(2));
    CHECK(viterbi_decode(e, p).labels == brute_force(e, p).best);
  }
}

TEST_CASE("gradient matches central finite differences") {
  // Tolerance applies to relative_error: |a - b| / max(|a|, |b|, 1e-6).
  Rng rng(37);
  double worst = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    auto c = random_crf(rng, 1 + rng.below(6), 1 + rng.below(5), 1.5);
    const auto r = nll_and_gradient(c.emissions, c.params, c.gold);
    auto loss = [&] { return log_partition(c.emissions, c.params) - sequence_score(c.emissions, c.params, c.gold); };
    for (std::size_t i = 0; i < c.emissions.data().size(); ++i) {
      worst = std::max(worst, relative_error(r.grad_emissions.data()[i], numeric_derivative(&c.emissions.data()[i], loss)));
    }
    for (std::size_t i = 0; i < c.params.transitions.data().size(); ++i) {
      worst = std::max(worst, relative_error(r.grad_params.transitions.data()[i],
                                             numeric_derivative(&c.params.transitions.data()[i], loss)));
    }
    for (std::size_t y = 0; y < c.params.label_count(); ++y) {
      worst = std::max(worst, relative_error(r.grad_params.start[y], numeric_derivative(&c.params.start[y], loss)));
      worst = std::max(worst, relative_error(r.grad_params.end[y], numeric_derivative(&c.params.end[y], loss)));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("emission gradient rows are marginals minus gold indicator") {
  Rng rng(41);
  const auto c = random_crf(rng, 5, 4);
  const auto r = nll_and_gradient(c.emissions, c.params, c.gold);
  const Matrix m = marginals(c.emissions, c.params);
  for (std::size_t t = 0; t < 5; ++t) {
    double sum = 0.0;
    for (std::size_t y = 0; y < 4; ++y) {
      const double expected = m(t, y) - (static_cast<int>(y) == c.gold[t] ? 1.0 : 0.0);
      CHECK(std::abs(r.grad_emissions(t, y) - expected) < 1e-12);
      sum += r.grad_emissions(t, y);
    }
    CHECK(std::abs(sum) < 1e-9);
  }
}

TEST_CASE("batch nll is the in-order sum of instance results") {
  Rng rng(43);
  const std::size_t L = 4;
  auto base = random_crf(rng, 3, L);
  std::vector<xbrltag::testing::RandomCrf> items;
  for (int i = 0; i < 6; ++i) {
    auto c = random_crf(rng, 1 + rng.below(6), L);
    c.params = base.params;
    items.push_back(std::move(c));
  }
  std::vector<CrfInstance> batch;
  for (const auto& c : items) batch.push_back({&c.emissions, c.gold});
  const auto b = nll_batch(batch, base.params);
  double loss = 0.0;
  CrfParams grad = CrfParams::zeros(L);
  REQUIRE(b.grad_emissions.size() == items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto r = nll_and_gradient(items[i].emissions, base.params, items[i].gold);
    loss += r.loss;
    CHECK(b.grad_emissions[i] == r.grad_emissions);
    for (std::size_t k = 0; k < grad.transitions.data().size(); ++k) {
      grad.transitions.data()[k] += r.grad_params.transitions.data()[k];
    }
    for (std::size_t y = 0; y < L; ++y) {
      grad.start[y] += r.grad_params.start[y];
      grad.end[y] += r.grad_params.end[y];
    }
  }
  CHECK(b.loss == loss);
  CHECK(b.grad_params == grad);
  CHECK(nll_batch(std::span<const CrfInstance>{}, base.params).loss == 0.0);
}

TEST_CASE("iob2 mask examples") {
  const LabelSet set = abc_labels();  // O B-A I-A B-B I-B B-C I-C
  const auto m = iob2_constraint_mask(set);
  CHECK(m.labels == 7);
  CHECK_FALSE(m.transition(0, 2));
  CHECK(m.transition(1, 2));
  CHECK(m.transition(2, 2));
  CHECK_FALSE(m.transition(3, 2));
  CHECK(m.transition(4, 1));
  CHECK(m.transition(0, 5));
  CHECK_FALSE(m.allowed_start[2]);
  CHECK(m.allowed_start[1]);
  for (std::size_t y = 0; y < 7; ++y) CHECK(m.allowed_end[y]);

  CrfParams p = CrfParams::zeros(7);
  p.apply_mask(m);
  CHECK(p.transitions(0, 2) == kMaskedScore);
  CHECK(p.start[4] == kMaskedScore);
  CHECK(p.transitions(1, 2) == 0.0);
}

TEST_CASE("masked viterbi matches brute force over admitted sequences and is valid") {
  const LabelSet set({"A", "B"});
  const auto mask = iob2_constraint_mask(set);
  Rng rng(47);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_crf(rng, 1 + rng.below(6), 5, 4.0);
    const auto d = viterbi_decode(c.emissions, c.params, &mask);
    CHECK(d.labels == brute_force(c.emissions, c.params, &mask).best);
    CHECK(validate_iob2(std::span<const int>(d.labels), set).empty());
  }
}

TEST_CASE("masked viterbi on a larger label set is always valid") {
  const LabelSet set = abc_labels();
  const auto mask = iob2_constraint_mask(set);
  Rng rng(53);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = random_crf(rng, 1 + rng.below(30), set.label_count(), 5.0);
    const auto d = viterbi_decode(c.emissions, c.params, &mask);
    CHECK(validate_iob2(std::span<const int>(d.labels), set).empty());
  }
}

TEST_CASE("viterbi steers around a disallowed label") {
  TransitionMask m = TransitionMask::all_allowed(2);
  m.allowed_start[0] = 0;
  for (std::size_t from = 0; from < 2; ++from) m.set_transition(from, 0, false);
  const auto d = viterbi_decode(rows({{5, 0}, {5, 0}, {5, 0}}), CrfParams::zeros(2), &m);
  CHECK(d.labels == std::vector<int>{1, 1, 1});

  TransitionMask none = TransitionMask::all_allowed(2);
  none.allowed_end = {0, 0};
  CHECK_THROWS_AS(viterbi_decode(EmissionMatrix(2, 2), CrfParams::zeros(2), &none), ContractError);
  CHECK_THROWS_AS(viterbi_decode(EmissionMatrix(2, 3), CrfParams::zeros(3), &m), ContractError);
}

TEST_CASE("masked gradient entries are zero and masked mass is negligible") {
  const LabelSet set({"A", "B"});
  const auto mask = iob2_constraint_mask(set);
  Rng rng(59);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = random_crf(rng, 2 + rng.below(5), 5, 1.0);
    c.params.apply_mask(mask);
    const auto d = viterbi_decode(c.emissions, c.params, &mask);
    const auto r = nll_and_gradient(c.emissions, c.params, d.labels, &mask);
    CHECK(std::isfinite(r.loss));
    for (std::size_t a = 0; a < 5; ++a) {
      CHECK((mask.allowed_start[a] || r.grad_params.start[a] == 0.0));
      for (std::size_t b = 0; b < 5; ++b) {
        if (!mask.transition(a, b)) CHECK(r.grad_params.transitions(a, b) == 0.0);
      }
    }
    // With the sentinel in place the unmasked CRF's best path is already valid.
    CHECK(viterbi_decode(c.emissions, c.params).labels == d.labels);
  }
}

TEST_CASE("continuation mask examples") {
  const LabelSet set = abc_labels();
  const auto m = continuation_mask(set);
  CHECK(m.transition(0, 0));
  CHECK_FALSE(m.transition(0, 1));
  CHECK(m.transition(1, 2));
  CHECK(m.transition(2, 2));
  CHECK_FALSE(m.transition(1, 1));
  CHECK_FALSE(m.transition(2, 4));
}

TEST_CASE("continuation-aware decoding keeps pooled words valid") {
  const LabelSet set = abc_labels();
  const auto boundary = iob2_constraint_mask(set);
  const auto cont = continuation_mask(set);
  Rng rng(61);
  for (int trial = 0; trial < 1000; ++trial) {
    const int words = 1 + static_cast<int>(rng.below(10));
    const auto counts = xbrltag::testing::random_piece_counts(rng, words);
    std::vector<char> is_cont;
    for (int n : counts) {
      for (int i = 0; i < n; ++i) is_cont.push_back(i > 0);
    }
    const auto c = random_crf(rng, is_cont.size(), set.label_count(), 5.0);
    const auto d = viterbi_decode(c.emissions, c.params, boundary, cont, is_cont);
    CHECK(validate_iob2(std::span<const int>(d.labels), set).empty());
    const auto word_labels = collapse_to_words(std::span<const int>(d.labels), counts);
    CHECK(validate_iob2(std::span<const int>(word_labels), set).empty());
    CHECK(align_to_subwords(std::span<const int>(word_labels), counts) == d.labels);
  }
  CHECK_THROWS_AS(viterbi_decode(EmissionMatrix(2, 7), CrfParams::zeros(7), boundary, cont, std::vector<char>{0}),
                  ContractError);
}
