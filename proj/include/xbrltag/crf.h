#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace xbrltag {

class LabelSet;

// Dense row-major real matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Position x label scores.
using EmissionMatrix = Matrix;

// Score held by disallowed transitions. A finite sentinel keeps log-sum-exp
// and its gradients free of NaNs.
inline constexpr double kMaskedScore = -1e4;

struct TransitionMask {
  std::size_t labels = 0;
  std::vector<char> allowed;        // labels x labels, from-label major
  std::vector<char> allowed_start;  // labels
  std::vector<char> allowed_end;    // labels

  static TransitionMask all_allowed(std::size_t labels);

  bool transition(std::size_t from, std::size_t to) const { return allowed[from * labels + to] != 0; }
  void set_transition(std::size_t from, std::size_t to, bool ok) { allowed[from * labels + to] = ok; }
};

struct CrfParams {
  Matrix transitions;  // from-label x to-label
  std::vector<double> start;
  std::vector<double> end;

  static CrfParams zeros(std::size_t labels);
  std::size_t label_count() const { return start.size(); }

  // Writes kMaskedScore into every disallowed entry.
  void apply_mask(const TransitionMask& mask);

  bool operator==(const CrfParams&) const = default;
};

// I-t is allowed only after B-t or I-t and never at the start.
TransitionMask iob2_constraint_mask(const LabelSet& labelset);

// Transitions into a non-initial subword piece of a word: O must stay O and
// B-t / I-t must continue as I-t. Used together with the IOB2 mask so word
// sequences obtained by first-piece pooling stay valid.
TransitionMask continuation_mask(const LabelSet& labelset);

double sequence_score(const EmissionMatrix& emissions, const CrfParams& params,
                      std::span<const int> labels);

double log_partition(const EmissionMatrix& emissions, const CrfParams& params);

// Per-position label marginals (T x L) from forward-backward.
Matrix marginals(const EmissionMatrix& emissions, const CrfParams& params);

struct NllResult {
  double loss = 0.0;
  Matrix grad_emissions;
  CrfParams grad_params;
};

// loss = log Z - score(gold); gradients are expected minus observed counts.
// Entries disallowed by `mask` get zero parameter gradient.
NllResult nll_and_gradient(const EmissionMatrix& emissions, const CrfParams& params,
                           std::span<const int> gold, const TransitionMask* mask = nullptr);

struct CrfInstance {
  const EmissionMatrix* emissions = nullptr;
  std::span<const int> gold;
};

struct BatchNll {
  double loss = 0.0;
  std::vector<Matrix> grad_emissions;  // one per instance, in input order
  CrfParams grad_params;
};

// Sum over instances, reduced in input order.
BatchNll nll_batch(std::span<const CrfInstance> batch, const CrfParams& params,
                   const TransitionMask* mask = nullptr);

struct Decoded {
  std::vector<int> labels;
  double score = 0.0;
};

// Highest-scoring label sequence permitted by `mask` (all sequences when null).
// Ties go to the lowest label index, resolved from the last position backwards.
// Throws ContractError when the mask admits no path.
Decoded viterbi_decode(const EmissionMatrix& emissions, const CrfParams& params,
                       const TransitionMask* mask = nullptr);

// Position-dependent masks: transitions into position t use continuation_mask
// when is_continuation[t] is set and boundary_mask otherwise.
Decoded viterbi_decode(const EmissionMatrix& emissions, const CrfParams& params,
                       const TransitionMask& boundary_mask, const TransitionMask& continuation_mask,
                       std::span<const char> is_continuation);

}  // namespace xbrltag
