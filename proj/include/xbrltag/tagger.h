#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xbrltag/corpus.h"
#include "xbrltag/crf.h"
#include "xbrltag/features.h"
#include "xbrltag/labels.h"
#include "xbrltag/tokenize.h"

namespace xbrltag {

enum class Head { kSoftmax, kCrf };

std::string_view to_string(Head head);
Head parse_head(std::string_view name);

// Sparse L x hash_dimension weight matrix stored as one dense row of L label
// weights per feature index that has been seen.
class WeightTable {
 public:
  WeightTable() = default;
  explicit WeightTable(std::size_t labels) : labels_(labels) {}

  std::size_t label_count() const { return labels_; }
  std::size_t row_count() const { return features_.size(); }

  // Row slot for `feature`, created zero-filled if missing.
  std::uint32_t ensure(std::uint32_t feature);
  std::optional<std::uint32_t> find(std::uint32_t feature) const;

  std::span<double> row(std::uint32_t slot) { return {values_.data() + slot * labels_, labels_}; }
  std::span<const double> row(std::uint32_t slot) const { return {values_.data() + slot * labels_, labels_}; }
  std::uint32_t feature_of(std::uint32_t slot) const { return features_[slot]; }

  double weight(int label, std::uint32_t feature) const;
  void set_weight(int label, std::uint32_t feature, double value);

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  // Slots ordered by feature index (the serialization order).
  std::vector<std::uint32_t> sorted_slots() const;

 private:
  std::size_t labels_ = 0;
  std::unordered_map<std::uint32_t, std::uint32_t> slots_;
  std::vector<std::uint32_t> features_;
  std::vector<double> values_;
};

struct TaggerModel {
  LabelSet labelset;
  FeatureConfig features;
  Head head = Head::kSoftmax;
  Granularity granularity = Granularity::kWord;
  NumericPolicy policy = NumericPolicy::kNone;
  std::uint64_t vocab_fingerprint = 0;  // 0 unless granularity == subword
  std::uint64_t shape_fingerprint = 0;  // 0 unless policy == shape
  std::uint64_t training_seed = 0;
  WeightTable weights;
  std::optional<CrfParams> crf;

  // Zero-weight model (transitions masked for the CRF head).
  static TaggerModel untrained(LabelSet labelset, FeatureConfig features, Head head, Granularity granularity,
                               NumericPolicy policy, const SubwordVocab* vocab, const ShapeVocab* shapes);

  std::uint64_t fingerprint() const;
};

// Model file layout (all integers little-endian):
//   "XBRLTAGM" magic, u32 version, u8 head, u8 granularity, u8 policy, u8 0,
//   u64 training seed, u64 label-set / vocab / shape fingerprints,
//   u32 hash_dimension, i32 context_window, u64 hash_seed, i32 affix_length,
//   u32 tag count + (u32 length, bytes) per tag,
//   u32 label count, u64 row count + (u32 feature, label-count f64) per row in
//   ascending feature order, u8 crf flag [+ L*L transitions, L start, L end as f64],
//   u64 FNV-1a checksum of every preceding byte.
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::string serialize_model(const TaggerModel& model);
TaggerModel deserialize_model(const std::string& bytes);
void save_model(const TaggerModel& model, const std::string& path);
TaggerModel load_model(const std::string& path);

// Tokens prepared for scoring under a model's policy and granularity.
struct PreparedSentence {
  std::vector<std::string> normalized;  // one per word
  std::vector<std::string> units;
  std::vector<int> piece_counts;        // one per word
  std::vector<int> first_unit;          // index of each word's first unit
  std::vector<char> is_continuation;    // one per unit
};

// A model together with the vocabularies it was trained against. Construction
// refuses mismatched fingerprints.
class Tagger {
 public:
  Tagger(TaggerModel model, std::optional<SubwordVocab> vocab, std::optional<ShapeVocab> shapes);

  const TaggerModel& model() const { return model_; }
  const LabelSet& labelset() const { return model_.labelset; }
  const SubwordVocab* vocab() const { return vocab_ ? &*vocab_ : nullptr; }
  const ShapeVocab* shapes() const { return shapes_ ? &*shapes_ : nullptr; }

  PreparedSentence prepare(std::span<const std::string> tokens) const;

  const TransitionMask& boundary_mask() const { return boundary_mask_; }
  const TransitionMask& continuation_mask() const { return continuation_mask_; }

 private:
  TaggerModel model_;
  std::optional<SubwordVocab> vocab_;
  std::optional<ShapeVocab> shapes_;
  TransitionMask boundary_mask_;
  TransitionMask continuation_mask_;
};

// scores[t, y] = sum of weights[y, f] over the features of unit t.
EmissionMatrix emissions(const TaggerModel& model, std::span<const std::string> units);
EmissionMatrix emissions_from_features(const TaggerModel& model,
                                       std::span<const std::vector<std::uint32_t>> unit_features);

struct Prediction {
  std::vector<std::string> labels;  // one per word
  std::vector<int> unit_labels;     // one per unit, before pooling
  PreparedSentence prepared;
};

Prediction predict_detailed(const Tagger& tagger, std::span<const std::string> tokens);
std::vector<std::string> predict(const Tagger& tagger, std::span<const std::string> tokens);

struct TagCandidate {
  std::string tag;
  double probability = 0.0;

  bool operator==(const TagCandidate&) const = default;
};

// Per-unit label distributions: softmax rows for the softmax head, CRF
// marginals for the CRF head.
Matrix label_distribution(const Tagger& tagger, const PreparedSentence& prepared);

// Top-k tags for the word at `index`, B-/I- mass summed per tag, O excluded.
// Sorted by probability, ties in tag order.
std::vector<TagCandidate> topk_tags(const Tagger& tagger, std::span<const std::string> tokens, std::size_t index,
                                    std::size_t k);

// Full tag ranking for every word, computed from one distribution pass.
std::vector<std::vector<TagCandidate>> rank_tags(const Tagger& tagger, std::span<const std::string> tokens);

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.1;
  double l2_strength = 1e-6;
  int batch_size = 16;
  std::uint64_t seed = 1;
  int patience = 3;  // epochs without dev micro-F1 gain; needs a dev set

  void validate() const;
};

struct EpochReport {
  int epoch = 0;
  double train_loss_per_unit = 0.0;
  double dev_micro_f1 = -1.0;  // -1 without a dev set
};

struct TrainResult {
  TaggerModel model;
  std::vector<EpochReport> history;
  int best_epoch = 0;
};

struct TrainSpec {
  LabelSet labelset;
  FeatureConfig features;
  TrainConfig train;
  Head head = Head::kSoftmax;
  Granularity granularity = Granularity::kWord;
  NumericPolicy policy = NumericPolicy::kNone;
};

// Mini-batch AdaGrad on per-unit cross-entropy (softmax head) or sentence NLL
// (CRF head) with L2 on the rows touched by each batch. Returns the epoch with
// the best dev micro-F1 (the last epoch when dev is empty). Throws Error when
// the loss stops being finite.
TrainResult train(std::span<const AnnotatedSentence> train_set, std::span<const AnnotatedSentence> dev_set,
                  const TrainSpec& spec, const SubwordVocab* vocab, const ShapeVocab* shapes);

}  // namespace xbrltag
