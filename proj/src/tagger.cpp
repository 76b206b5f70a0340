#include "xbrltag/tagger.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xbrltag/error.h"
#include "xbrltag/eval.h"
#include "xbrltag/hash.h"
#include "xbrltag/rng.h"

namespace xbrltag {

std::string_view to_string(Head head) { return head == Head::kSoftmax ? "softmax" : "crf"; }

Head parse_head(std::string_view name) {
  if (name == "softmax") return Head::kSoftmax;
  if (name == "crf") return Head::kCrf;
  throw ConfigError("unknown head '" + std::string(name) + "' (expected softmax|crf)");
}

// ---------------------------------------------------------------------------

std::uint32_t WeightTable::ensure(std::uint32_t feature) {
  auto [it, inserted] = slots_.emplace(feature, static_cast<std::uint32_t>(features_.size()));
  if (inserted) {
    features_.push_back(feature);
    values_.resize(values_.size() + labels_, 0.0);
  }
  return it->second;
}

std::optional<std::uint32_t> WeightTable::find(std::uint32_t feature) const {
  auto it = slots_.find(feature);
  if (it == slots_.end()) return std::nullopt;
  return it->second;
}

double WeightTable::weight(int label, std::uint32_t feature) const {
  auto slot = find(feature);
  return slot ? row(*slot)[static_cast<std::size_t>(label)] : 0.0;
}

void WeightTable::set_weight(int label, std::uint32_t feature, double value) {
  row(ensure(feature))[static_cast<std::size_t>(label)] = value;
}

std::vector<std::uint32_t> WeightTable::sorted_slots() const {
  std::vector<std::uint32_t> slots(features_.size());
  std::iota(slots.begin(), slots.end(), 0u);
  std::sort(slots.begin(), slots.end(), [&](std::uint32_t a, std::uint32_t b) { return features_[a] < features_[b]; });
  return slots;
}

// ---------------------------------------------------------------------------

TaggerModel TaggerModel::untrained(LabelSet labelset, FeatureConfig features, Head head, Granularity granularity,
                                   NumericPolicy policy, const SubwordVocab* vocab, const ShapeVocab* shapes) {
  features.validate();
  if (labelset.tag_count() == 0) throw ContractError("model: label set has no tags");
  TaggerModel m;
  m.labelset = std::move(labelset);
  m.features = features;
  m.head = head;
  m.granularity = granularity;
  m.policy = policy;
  if (granularity == Granularity::kSubword) {
    if (!vocab) throw ContractError("model: subword granularity requires a subword vocab");
    m.vocab_fingerprint = vocab->fingerprint();
  }
  if (policy == NumericPolicy::kShape) {
    if (!shapes) throw ContractError("model: shape policy requires a shape vocab");
    m.shape_fingerprint = shapes->fingerprint();
  }
  const std::size_t L = m.labelset.label_count();
  m.weights = WeightTable(L);
  if (head == Head::kCrf) {
    m.crf = CrfParams::zeros(L);
    m.crf->apply_mask(iob2_constraint_mask(m.labelset));
  }
  return m;
}

std::uint64_t TaggerModel::fingerprint() const { return fnv1a64(serialize_model(*this)); }

// ---------------------------------------------------------------------------

namespace {

PreparedSentence prepare_sentence(const TaggerModel& model, const SubwordVocab* vocab, const ShapeVocab* shapes,
                                  std::span<const std::string> tokens) {
  if (tokens.empty()) throw ContractError("empty sentence");
  PreparedSentence p;
  p.normalized = normalize_numeric(tokens, model.policy, shapes);
  if (model.granularity == Granularity::kWord) {
    p.units = p.normalized;
    p.piece_counts.assign(tokens.size(), 1);
  } else {
    auto pieces = wordpiece_tokenize_sentence(p.normalized, *vocab);
    p.units = std::move(pieces.pieces);
    p.piece_counts = std::move(pieces.piece_counts);
  }
  int offset = 0;
  for (int count : p.piece_counts) {
    p.first_unit.push_back(offset);
    p.is_continuation.push_back(0);
    for (int i = 1; i < count; ++i) p.is_continuation.push_back(1);
    offset += count;
  }
  return p;
}

std::vector<std::vector<std::uint32_t>> features_of(const TaggerModel& model, const PreparedSentence& p) {
  std::vector<std::vector<std::uint32_t>> out;
  out.reserve(p.units.size());
  for (std::size_t t = 0; t < p.units.size(); ++t) {
    out.push_back(extract_features(p.units, t, model.features, model.granularity));
  }
  return out;
}

std::vector<int> decode_units(const TaggerModel& model, const EmissionMatrix& e, const PreparedSentence& p,
                              const TransitionMask& boundary, const TransitionMask& continuation) {
  if (model.head == Head::kSoftmax) {
    std::vector<int> out(e.rows());
    for (std::size_t t = 0; t < e.rows(); ++t) {
      auto row = e.row(t);
      out[t] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
  }
  if (model.granularity == Granularity::kSubword) {
    return viterbi_decode(e, *model.crf, boundary, continuation, p.is_continuation).labels;
  }
  return viterbi_decode(e, *model.crf, &boundary).labels;
}

std::vector<std::string> to_strings(const LabelSet& labelset, std::span<const int> labels) {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (int y : labels) out.push_back(labelset.label(y));
  return out;
}

Prediction predict_with(const TaggerModel& model, const SubwordVocab* vocab, const ShapeVocab* shapes,
                        const TransitionMask& boundary, const TransitionMask& continuation,
                        std::span<const std::string> tokens) {
  Prediction out;
  out.prepared = prepare_sentence(model, vocab, shapes, tokens);
  const auto e = emissions_from_features(model, features_of(model, out.prepared));
  out.unit_labels = decode_units(model, e, out.prepared, boundary, continuation);
  out.labels = to_strings(model.labelset, collapse_to_words(out.unit_labels, out.prepared.piece_counts));
  return out;
}

void softmax_rows(Matrix& m) {
  for (std::size_t t = 0; t < m.rows(); ++t) {
    auto row = m.row(t);
    const double peak = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) sum += (v = std::exp(v - peak));
    for (double& v : row) v /= sum;
  }
}

}  // namespace

Tagger::Tagger(TaggerModel model, std::optional<SubwordVocab> vocab, std::optional<ShapeVocab> shapes)
    : model_(std::move(model)), vocab_(std::move(vocab)), shapes_(std::move(shapes)) {
  if (model_.granularity == Granularity::kSubword) {
    if (!vocab_) throw ConfigError("model was trained on subwords: a subword vocab is required");
    if (vocab_->fingerprint() != model_.vocab_fingerprint) {
      throw ConfigError("subword vocab fingerprint does not match the model");
    }
  }
  if (model_.policy == NumericPolicy::kShape) {
    if (!shapes_) throw ConfigError("model uses the shape policy: a shape vocab is required");
    if (shapes_->fingerprint() != model_.shape_fingerprint) {
      throw ConfigError("shape vocab fingerprint does not match the model");
    }
  }
  if (model_.head == Head::kCrf && !model_.crf) throw ConfigError("CRF-head model has no CRF block");
  if (model_.weights.label_count() != model_.labelset.label_count()) {
    throw ConfigError("model weight block does not match its label set");
  }
  boundary_mask_ = iob2_constraint_mask(model_.labelset);
  continuation_mask_ = xbrltag::continuation_mask(model_.labelset);
}

PreparedSentence Tagger::prepare(std::span<const std::string> tokens) const {
  return prepare_sentence(model_, vocab(), shapes(), tokens);
}

EmissionMatrix emissions_from_features(const TaggerModel& model,
                                       std::span<const std::vector<std::uint32_t>> unit_features) {
  const std::size_t L = model.labelset.label_count();
  EmissionMatrix e(unit_features.size(), L);
  for (std::size_t t = 0; t < unit_features.size(); ++t) {
    auto out = e.row(t);
    for (std::uint32_t f : unit_features[t]) {
      auto slot = model.weights.find(f);
      if (!slot) continue;
      auto w = model.weights.row(*slot);
      for (std::size_t y = 0; y < L; ++y) out[y] += w[y];
    }
  }
  return e;
}

EmissionMatrix emissions(const TaggerModel& model, std::span<const std::string> units) {
  if (units.empty()) throw ContractError("emissions: empty unit sequence");
  std::vector<std::vector<std::uint32_t>> feats;
  for (std::size_t t = 0; t < units.size(); ++t) {
    feats.push_back(extract_features(units, t, model.features, model.granularity));
  }
  return emissions_from_features(model, feats);
}

Prediction predict_detailed(const Tagger& tagger, std::span<const std::string> tokens) {
  return predict_with(tagger.model(), tagger.vocab(), tagger.shapes(), tagger.boundary_mask(),
                      tagger.continuation_mask(), tokens);
}

std::vector<std::string> predict(const Tagger& tagger, std::span<const std::string> tokens) {
  return predict_detailed(tagger, tokens).labels;
}

Matrix label_distribution(const Tagger& tagger, const PreparedSentence& prepared) {
  const auto& model = tagger.model();
  Matrix e = emissions_from_features(model, features_of(model, prepared));
  if (model.head == Head::kCrf) return marginals(e, *model.crf);
  softmax_rows(e);
  return e;
}

namespace {

std::vector<TagCandidate> rank_row(const LabelSet& labels, std::span<const double> row) {
  std::vector<TagCandidate> all;
  all.reserve(labels.tag_count());
  for (std::size_t t = 0; t < labels.tag_count(); ++t) {
    const int tag = static_cast<int>(t);
    const double mass = row[LabelSet::begin_of(tag)] + row[LabelSet::inside_of(tag)];
    all.push_back({labels.tags()[t], std::clamp(mass, 0.0, 1.0)});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const TagCandidate& a, const TagCandidate& b) { return a.probability > b.probability; });
  return all;
}

}  // namespace

std::vector<TagCandidate> topk_tags(const Tagger& tagger, std::span<const std::string> tokens, std::size_t index,
                                    std::size_t k) {
  const LabelSet& labels = tagger.labelset();
  if (tokens.empty()) throw ContractError("topk: empty sentence");
  if (index >= tokens.size()) throw ContractError("topk: index out of range");
  if (k < 1 || k > labels.tag_count()) {
    throw ContractError("topk: k must lie in [1, " + std::to_string(labels.tag_count()) + "]");
  }
  const auto prepared = tagger.prepare(tokens);
  const Matrix dist = label_distribution(tagger, prepared);
  auto ranked = rank_row(labels, dist.row(static_cast<std::size_t>(prepared.first_unit[index])));
  ranked.resize(k);
  return ranked;
}

std::vector<std::vector<TagCandidate>> rank_tags(const Tagger& tagger, std::span<const std::string> tokens) {
  const auto prepared = tagger.prepare(tokens);
  const Matrix dist = label_distribution(tagger, prepared);
  std::vector<std::vector<TagCandidate>> out;
  out.reserve(tokens.size());
  for (int first : prepared.first_unit) {
    out.push_back(rank_row(tagger.labelset(), dist.row(static_cast<std::size_t>(first))));
  }
  return out;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (!(l2_strength >= 0.0)) throw ConfigError("train: l2_strength must be >= 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
}

namespace {

constexpr double kAdagradEps = 1e-8;

// One training sentence with features resolved to weight-table slots.
struct TrainingExample {
  std::vector<int> gold;                  // per unit
  std::vector<std::uint32_t> slot_data;   // flattened slots
  std::vector<std::uint32_t> slot_start;  // units + 1 offsets
};

class Trainer {
 public:
  Trainer(const TrainSpec& spec, const SubwordVocab* vocab, const ShapeVocab* shapes)
      : spec_(spec),
        vocab_(vocab),
        shapes_(shapes),
        model_(TaggerModel::untrained(spec.labelset, spec.features, spec.head, spec.granularity, spec.policy, vocab,
                                      shapes)),
        boundary_(iob2_constraint_mask(model_.labelset)),
        continuation_(continuation_mask(model_.labelset)),
        labels_(model_.labelset.label_count()) {
    model_.training_seed = spec.train.seed;
  }

  TrainResult run(std::span<const AnnotatedSentence> train_set, std::span<const AnnotatedSentence> dev_set) {
    for (const auto& s : train_set) examples_.push_back(prepare_example(s));
    weight_grad_.assign(model_.weights.values().size(), 0.0);
    weight_hist_.assign(model_.weights.values().size(), 0.0);
    touched_.assign(model_.weights.row_count(), 0);
    if (model_.crf) {
      crf_hist_ = CrfParams::zeros(labels_);
    }

    TrainResult result;
    std::vector<std::size_t> order(examples_.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec_.train.seed);

    double best_f1 = -1.0;
    std::vector<double> best_weights;
    std::optional<CrfParams> best_crf;
    int stale = 0;
    for (int epoch = 1; epoch <= spec_.train.epochs; ++epoch) {
      rng.shuffle(std::span(order));
      double loss = 0.0;
      std::size_t units = 0;
      for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(spec_.train.batch_size)) {
        const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(spec_.train.batch_size));
        loss += step(std::span(order).subspan(b, e - b), units);
      }
      if (!std::isfinite(loss)) {
        throw Error("training diverged: non-finite loss in epoch " + std::to_string(epoch));
      }
      EpochReport report{epoch, loss / static_cast<double>(std::max<std::size_t>(units, 1)), -1.0};
      if (!dev_set.empty()) {
        report.dev_micro_f1 = dev_f1(dev_set);
        if (report.dev_micro_f1 > best_f1) {
          best_f1 = report.dev_micro_f1;
          best_weights = model_.weights.values();
          best_crf = model_.crf;
          result.best_epoch = epoch;
          stale = 0;
        } else {
          ++stale;
        }
      } else {
        result.best_epoch = epoch;
      }
      result.history.push_back(report);
      if (!dev_set.empty() && stale >= spec_.train.patience) break;
    }
    if (!dev_set.empty()) {
      model_.weights.values() = std::move(best_weights);
      model_.crf = std::move(best_crf);
    }
    result.model = std::move(model_);
    return result;
  }

 private:
  TrainingExample prepare_example(const AnnotatedSentence& s) {
    const auto prepared = prepare_sentence(model_, vocab_, shapes_, s.tokens);
    std::vector<int> word_labels;
    for (const auto& l : s.labels) {
      auto y = model_.labelset.label_index(l);
      if (!y) throw ContractError("train: label '" + l + "' is not in the label set");
      word_labels.push_back(*y);
    }
    TrainingExample ex;
    ex.gold = align_to_subwords(word_labels, prepared.piece_counts);
    ex.slot_start.push_back(0);
    for (std::size_t t = 0; t < prepared.units.size(); ++t) {
      for (std::uint32_t f : extract_features(prepared.units, t, model_.features, model_.granularity)) {
        ex.slot_data.push_back(model_.weights.ensure(f));
      }
      ex.slot_start.push_back(static_cast<std::uint32_t>(ex.slot_data.size()));
    }
    return ex;
  }

  EmissionMatrix example_emissions(const TrainingExample& ex) const {
    const std::size_t T = ex.gold.size();
    EmissionMatrix e(T, labels_);
    for (std::size_t t = 0; t < T; ++t) {
      auto out = e.row(t);
      for (std::uint32_t i = ex.slot_start[t]; i < ex.slot_start[t + 1]; ++i) {
        auto w = model_.weights.row(ex.slot_data[i]);
        for (std::size_t y = 0; y < labels_; ++y) out[y] += w[y];
      }
    }
    return e;
  }

  void accumulate(const TrainingExample& ex, std::size_t t, std::span<const double> grad, double scale) {
    for (std::uint32_t i = ex.slot_start[t]; i < ex.slot_start[t + 1]; ++i) {
      const std::uint32_t slot = ex.slot_data[i];
      if (!touched_[slot]) {
        touched_[slot] = 1;
        touched_list_.push_back(slot);
      }
      double* g = weight_grad_.data() + static_cast<std::size_t>(slot) * labels_;
      for (std::size_t y = 0; y < labels_; ++y) g[y] += scale * grad[y];
    }
  }

  // Returns the summed loss of the batch.
  double step(std::span<const std::size_t> batch, std::size_t& units) {
    double loss = 0.0;
    std::size_t batch_units = 0;
    for (std::size_t idx : batch) batch_units += examples_[idx].gold.size();
    const double scale = 1.0 / static_cast<double>(batch_units);
    CrfParams crf_grad;
    if (model_.crf) crf_grad = CrfParams::zeros(labels_);

    std::vector<double> grad(labels_);
    for (std::size_t idx : batch) {
      const TrainingExample& ex = examples_[idx];
      EmissionMatrix e = example_emissions(ex);
      if (spec_.head == Head::kSoftmax) {
        for (std::size_t t = 0; t < e.rows(); ++t) {
          auto row = e.row(t);
          const double peak = *std::max_element(row.begin(), row.end());
          double sum = 0.0;
          for (std::size_t y = 0; y < labels_; ++y) sum += (grad[y] = std::exp(row[y] - peak));
          loss -= row[ex.gold[t]] - peak - std::log(sum);
          for (double& g : grad) g /= sum;
          grad[ex.gold[t]] -= 1.0;
          accumulate(ex, t, grad, scale);
        }
      } else {
        NllResult r = nll_and_gradient(e, *model_.crf, ex.gold, &boundary_);
        loss += r.loss;
        for (std::size_t t = 0; t < e.rows(); ++t) accumulate(ex, t, r.grad_emissions.row(t), scale);
        auto& acc = crf_grad.transitions.data();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * r.grad_params.transitions.data()[i];
        for (std::size_t y = 0; y < labels_; ++y) {
          crf_grad.start[y] += scale * r.grad_params.start[y];
          crf_grad.end[y] += scale * r.grad_params.end[y];
        }
      }
    }
    units += batch_units;

    const double lr = spec_.train.learning_rate;
    const double l2 = spec_.train.l2_strength;
    auto& w = model_.weights.values();
    for (std::uint32_t slot : touched_list_) {
      const std::size_t base = static_cast<std::size_t>(slot) * labels_;
      for (std::size_t y = 0; y < labels_; ++y) {
        const double g = weight_grad_[base + y] + l2 * w[base + y];
        weight_hist_[base + y] += g * g;
        w[base + y] -= lr * g / (std::sqrt(weight_hist_[base + y]) + kAdagradEps);
        weight_grad_[base + y] = 0.0;
      }
      touched_[slot] = 0;
    }
    touched_list_.clear();

    if (model_.crf) {
      auto update = [&](double& param, double& hist, double g) {
        if (g == 0.0) return;
        hist += g * g;
        param -= lr * g / (std::sqrt(hist) + kAdagradEps);
      };
      auto& p = *model_.crf;
      for (std::size_t i = 0; i < p.transitions.data().size(); ++i) {
        update(p.transitions.data()[i], crf_hist_.transitions.data()[i], crf_grad.transitions.data()[i]);
      }
      for (std::size_t y = 0; y < labels_; ++y) {
        update(p.start[y], crf_hist_.start[y], crf_grad.start[y]);
        update(p.end[y], crf_hist_.end[y], crf_grad.end[y]);
      }
    }
    return loss;
  }

  double dev_f1(std::span<const AnnotatedSentence> dev_set) const {
    std::vector<std::vector<std::string>> predicted;
    predicted.reserve(dev_set.size());
    for (const auto& s : dev_set) {
      predicted.push_back(predict_with(model_, vocab_, shapes_, boundary_, continuation_, s.tokens).labels);
    }
    return entity_prf(dev_set, predicted, model_.labelset).micro.f1;
  }

  const TrainSpec& spec_;
  const SubwordVocab* vocab_;
  const ShapeVocab* shapes_;
  TaggerModel model_;
  TransitionMask boundary_;
  TransitionMask continuation_;
  std::size_t labels_;
  std::vector<TrainingExample> examples_;
  std::vector<double> weight_grad_;
  std::vector<double> weight_hist_;
  std::vector<char> touched_;
  std::vector<std::uint32_t> touched_list_;
  CrfParams crf_hist_;
};

}  // namespace

TrainResult train(std::span<const AnnotatedSentence> train_set, std::span<const AnnotatedSentence> dev_set,
                  const TrainSpec& spec, const SubwordVocab* vocab, const ShapeVocab* shapes) {
  if (train_set.empty()) throw ContractError("train: empty training set");
  spec.train.validate();
  Trainer trainer(spec, vocab, shapes);
  return trainer.run(train_set, dev_set);
}

}  // namespace xbrltag
