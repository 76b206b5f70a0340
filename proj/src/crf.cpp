#include "xbrltag/crf.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "xbrltag/error.h"
#include "xbrltag/labels.h"

namespace xbrltag {

namespace {

double log_sum_exp(std::span<const double> values) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

void check_shapes(const EmissionMatrix& emissions, const CrfParams& params) {
  const std::size_t L = params.label_count();
  if (emissions.rows() == 0) throw ContractError("crf: empty emission matrix");
  if (emissions.cols() != L || params.transitions.rows() != L || params.transitions.cols() != L ||
      params.end.size() != L) {
    throw ContractError("crf: emission/parameter label dimensions disagree");
  }
}

void check_labels(std::span<const int> labels, std::size_t T, std::size_t L) {
  if (labels.size() != T) {
    throw ContractError("crf: " + std::to_string(labels.size()) + " labels for " + std::to_string(T) +
                        " positions");
  }
  for (std::size_t t = 0; t < T; ++t) {
    if (labels[t] < 0 || static_cast<std::size_t>(labels[t]) >= L) {
      throw ContractError("crf: label index " + std::to_string(labels[t]) + " out of range at position " +
                          std::to_string(t));
    }
  }
}

struct ForwardBackward {
  Matrix alpha;
  Matrix beta;
  double log_z = 0.0;
};

ForwardBackward forward_backward(const EmissionMatrix& e, const CrfParams& p, bool with_beta) {
  const std::size_t T = e.rows();
  const std::size_t L = p.label_count();
  ForwardBackward fb;
  fb.alpha = Matrix(T, L);
  std::vector<double> scratch(L);
  for (std::size_t y = 0; y < L; ++y) fb.alpha(0, y) = p.start[y] + e(0, y);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t y = 0; y < L; ++y) {
      for (std::size_t prev = 0; prev < L; ++prev) scratch[prev] = fb.alpha(t - 1, prev) + p.transitions(prev, y);
      fb.alpha(t, y) = log_sum_exp(scratch) + e(t, y);
    }
  }
  for (std::size_t y = 0; y < L; ++y) scratch[y] = fb.alpha(T - 1, y) + p.end[y];
  fb.log_z = log_sum_exp(scratch);
  if (!with_beta) return fb;

  fb.beta = Matrix(T, L);
  for (std::size_t y = 0; y < L; ++y) fb.beta(T - 1, y) = p.end[y];
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t y = 0; y < L; ++y) {
      for (std::size_t next = 0; next < L; ++next) {
        scratch[next] = p.transitions(y, next) + e(t + 1, next) + fb.beta(t + 1, next);
      }
      fb.beta(t, y) = log_sum_exp(scratch);
    }
  }
  return fb;
}

}  // namespace

TransitionMask TransitionMask::all_allowed(std::size_t labels) {
  TransitionMask m;
  m.labels = labels;
  m.allowed.assign(labels * labels, 1);
  m.allowed_start.assign(labels, 1);
  m.allowed_end.assign(labels, 1);
  return m;
}

CrfParams CrfParams::zeros(std::size_t labels) {
  return {Matrix(labels, labels), std::vector<double>(labels, 0.0), std::vector<double>(labels, 0.0)};
}

void CrfParams::apply_mask(const TransitionMask& mask) {
  const std::size_t L = label_count();
  if (mask.labels != L) throw ContractError("crf: mask size does not match parameters");
  for (std::size_t a = 0; a < L; ++a) {
    for (std::size_t b = 0; b < L; ++b) {
      if (!mask.transition(a, b)) transitions(a, b) = kMaskedScore;
    }
    if (!mask.allowed_start[a]) start[a] = kMaskedScore;
    if (!mask.allowed_end[a]) end[a] = kMaskedScore;
  }
}

TransitionMask iob2_constraint_mask(const LabelSet& labelset) {
  const std::size_t L = labelset.label_count();
  TransitionMask m = TransitionMask::all_allowed(L);
  for (std::size_t to = 0; to < L; ++to) {
    const int y = static_cast<int>(to);
    if (!LabelSet::is_inside(y)) continue;
    m.allowed_start[to] = 0;
    for (std::size_t from = 0; from < L; ++from) {
      if (LabelSet::tag_of(static_cast<int>(from)) != LabelSet::tag_of(y)) m.set_transition(from, to, false);
    }
  }
  return m;
}

TransitionMask continuation_mask(const LabelSet& labelset) {
  const std::size_t L = labelset.label_count();
  TransitionMask m = TransitionMask::all_allowed(L);
  for (std::size_t from = 0; from < L; ++from) {
    const int tag = LabelSet::tag_of(static_cast<int>(from));
    for (std::size_t to = 0; to < L; ++to) {
      const int y = static_cast<int>(to);
      const bool ok = tag < 0 ? y == LabelSet::outside() : y == LabelSet::inside_of(tag);
      m.set_transition(from, to, ok);
    }
  }
  return m;
}

double sequence_score(const EmissionMatrix& emissions, const CrfParams& params, std::span<const int> labels) {
  check_shapes(emissions, params);
  const std::size_t T = emissions.rows();
  check_labels(labels, T, params.label_count());
  double score = params.start[labels[0]] + params.end[labels[T - 1]];
  for (std::size_t t = 0; t < T; ++t) {
    score += emissions(t, labels[t]);
    if (t + 1 < T) score += params.transitions(labels[t], labels[t + 1]);
  }
  return score;
}

double log_partition(const EmissionMatrix& emissions, const CrfParams& params) {
  check_shapes(emissions, params);
  return forward_backward(emissions, params, false).log_z;
}

Matrix marginals(const EmissionMatrix& emissions, const CrfParams& params) {
  check_shapes(emissions, params);
  const auto fb = forward_backward(emissions, params, true);
  Matrix out(emissions.rows(), emissions.cols());
  for (std::size_t t = 0; t < out.rows(); ++t) {
    for (std::size_t y = 0; y < out.cols(); ++y) out(t, y) = std::exp(fb.alpha(t, y) + fb.beta(t, y) - fb.log_z);
  }
  return out;
}

NllResult nll_and_gradient(const EmissionMatrix& emissions, const CrfParams& params, std::span<const int> gold,
                           const TransitionMask* mask) {
  check_shapes(emissions, params);
  const std::size_t T = emissions.rows();
  const std::size_t L = params.label_count();
  check_labels(gold, T, L);
  const auto fb = forward_backward(emissions, params, true);

  NllResult r;
  r.loss = fb.log_z - sequence_score(emissions, params, gold);
  r.grad_emissions = Matrix(T, L);
  r.grad_params = CrfParams::zeros(L);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t y = 0; y < L; ++y) {
      r.grad_emissions(t, y) = std::exp(fb.alpha(t, y) + fb.beta(t, y) - fb.log_z);
    }
  }
  for (std::size_t y = 0; y < L; ++y) {
    r.grad_params.start[y] = r.grad_emissions(0, y);
    r.grad_params.end[y] = r.grad_emissions(T - 1, y);
  }
  for (std::size_t t = 0; t + 1 < T; ++t) {
    for (std::size_t a = 0; a < L; ++a) {
      const double left = fb.alpha(t, a) - fb.log_z;
      for (std::size_t b = 0; b < L; ++b) {
        r.grad_params.transitions(a, b) +=
            std::exp(left + params.transitions(a, b) + emissions(t + 1, b) + fb.beta(t + 1, b));
      }
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    r.grad_emissions(t, gold[t]) -= 1.0;
    if (t + 1 < T) r.grad_params.transitions(gold[t], gold[t + 1]) -= 1.0;
  }
  r.grad_params.start[gold[0]] -= 1.0;
  r.grad_params.end[gold[T - 1]] -= 1.0;

  if (mask) {
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = 0; b < L; ++b) {
        if (!mask->transition(a, b)) r.grad_params.transitions(a, b) = 0.0;
      }
      if (!mask->allowed_start[a]) r.grad_params.start[a] = 0.0;
      if (!mask->allowed_end[a]) r.grad_params.end[a] = 0.0;
    }
  }
  return r;
}

BatchNll nll_batch(std::span<const CrfInstance> batch, const CrfParams& params, const TransitionMask* mask) {
  BatchNll out;
  out.grad_params = CrfParams::zeros(params.label_count());
  for (const auto& inst : batch) {
    NllResult r = nll_and_gradient(*inst.emissions, params, inst.gold, mask);
    out.loss += r.loss;
    auto& acc = out.grad_params;
    for (std::size_t i = 0; i < acc.transitions.data().size(); ++i) {
      acc.transitions.data()[i] += r.grad_params.transitions.data()[i];
    }
    for (std::size_t y = 0; y < acc.start.size(); ++y) {
      acc.start[y] += r.grad_params.start[y];
      acc.end[y] += r.grad_params.end[y];
    }
    out.grad_emissions.push_back(std::move(r.grad_emissions));
  }
  return out;
}

namespace {

template <typename MaskAt>
Decoded viterbi_impl(const EmissionMatrix& e, const CrfParams& p, const TransitionMask* start_end_mask,
                     MaskAt mask_at) {
  check_shapes(e, p);
  const std::size_t T = e.rows();
  const std::size_t L = p.label_count();
  const double kDead = -std::numeric_limits<double>::infinity();
  Matrix best(T, L, kDead);
  std::vector<int> back(T * L, -1);
  for (std::size_t y = 0; y < L; ++y) {
    if (start_end_mask && !start_end_mask->allowed_start[y]) continue;
    best(0, y) = p.start[y] + e(0, y);
  }
  for (std::size_t t = 1; t < T; ++t) {
    const TransitionMask* mask = mask_at(t);
    for (std::size_t y = 0; y < L; ++y) {
      double top = kDead;
      int arg = -1;
      for (std::size_t prev = 0; prev < L; ++prev) {
        if (best(t - 1, prev) == kDead) continue;
        if (mask && !mask->transition(prev, y)) continue;
        const double s = best(t - 1, prev) + p.transitions(prev, y);
        if (arg < 0 || s > top) {
          top = s;
          arg = static_cast<int>(prev);
        }
      }
      if (arg >= 0) {
        best(t, y) = top + e(t, y);
        back[t * L + y] = arg;
      }
    }
  }
  double top = kDead;
  int arg = -1;
  for (std::size_t y = 0; y < L; ++y) {
    if (best(T - 1, y) == kDead) continue;
    if (start_end_mask && !start_end_mask->allowed_end[y]) continue;
    const double s = best(T - 1, y) + p.end[y];
    if (arg < 0 || s > top) {
      top = s;
      arg = static_cast<int>(y);
    }
  }
  if (arg < 0) throw ContractError("viterbi: the transition mask admits no label sequence");
  Decoded d;
  d.labels.assign(T, 0);
  d.labels[T - 1] = arg;
  for (std::size_t t = T - 1; t > 0; --t) d.labels[t - 1] = back[t * L + d.labels[t]];
  d.score = sequence_score(e, p, d.labels);
  return d;
}

}  // namespace

Decoded viterbi_decode(const EmissionMatrix& emissions, const CrfParams& params, const TransitionMask* mask) {
  if (mask && mask->labels != params.label_count()) throw ContractError("viterbi: mask size mismatch");
  return viterbi_impl(emissions, params, mask, [mask](std::size_t) { return mask; });
}

Decoded viterbi_decode(const EmissionMatrix& emissions, const CrfParams& params,
                       const TransitionMask& boundary_mask, const TransitionMask& continuation,
                       std::span<const char> is_continuation) {
  if (is_continuation.size() != emissions.rows()) {
    throw ContractError("viterbi: continuation flags do not match sequence length");
  }
  if (boundary_mask.labels != params.label_count() || continuation.labels != params.label_count()) {
    throw ContractError("viterbi: mask size mismatch");
  }
  return viterbi_impl(emissions, params, &boundary_mask, [&](std::size_t t) {
    return is_continuation[t] ? &continuation : &boundary_mask;
  });
}

}  // namespace xbrltag
