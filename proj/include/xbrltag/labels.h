#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xbrltag {

inline constexpr std::string_view kOutside = "O";

// Entity tags plus the derived IOB2 label inventory.
//
// Label indices are fixed: "O" is 0, and tag i owns B-<tag> at 1 + 2i and
// I-<tag> at 2 + 2i. Every component (emissions, CRF, model files) relies on
// this layout.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> tags);

  static LabelSet load(const std::string& path);
  void save(const std::string& path) const;

  const std::vector<std::string>& tags() const { return tags_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t tag_count() const { return tags_.size(); }
  std::size_t label_count() const { return labels_.size(); }

  std::optional<int> tag_index(std::string_view tag) const;
  std::optional<int> label_index(std::string_view label) const;
  const std::string& label(int index) const { return labels_.at(index); }

  static constexpr int outside() { return 0; }
  static constexpr int begin_of(int tag) { return 1 + 2 * tag; }
  static constexpr int inside_of(int tag) { return 2 + 2 * tag; }
  static constexpr bool is_begin(int label) { return label > 0 && label % 2 == 1; }
  static constexpr bool is_inside(int label) { return label > 0 && label % 2 == 0; }
  // Tag index of a B-/I- label, -1 for O.
  static constexpr int tag_of(int label) { return label == 0 ? -1 : (label - 1) / 2; }

  std::uint64_t fingerprint() const;

  bool operator==(const LabelSet& other) const { return tags_ == other.tags_; }

 private:
  std::vector<std::string> tags_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> tag_lookup_;
  std::unordered_map<std::string, int> label_lookup_;
};

// Half-open word range [start, end) carrying one entity tag.
struct Span {
  int start = 0;
  int end = 0;
  std::string tag;

  auto operator<=>(const Span&) const = default;
};

enum class PoolingStrategy { kFirst, kAll };

enum class ViolationKind {
  kUnknownLabel,
  kInsideAtStart,
  kInsideAfterOutside,
  kInsideTagMismatch,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  int position = 0;
  ViolationKind kind = ViolationKind::kUnknownLabel;

  bool operator==(const Violation&) const = default;
};

// Parsed form of a label string; nullopt for anything that is not O, B-x or I-x.
struct ParsedLabel {
  char prefix = 'O';  // 'O', 'B' or 'I'
  std::string_view tag;
};
std::optional<ParsedLabel> parse_label(std::string_view label);

// Empty result means the sequence is valid IOB2 over `labelset`.
std::vector<Violation> validate_iob2(std::span<const std::string> labels,
                                     const LabelSet& labelset);
// Same rules over label indices (indices outside the set are unknown labels).
std::vector<Violation> validate_iob2(std::span<const int> labels,
                                     const LabelSet& labelset);

// Maximal B-t (I-t)* runs. Throws FormatError naming the first violation.
std::vector<Span> spans_from_labels(std::span<const std::string> labels);

// Span decoding for model output that may violate IOB2: an I- label that does
// not continue an open span of the same tag closes any open span and is
// otherwise ignored (a span must start with B-).
std::vector<Span> spans_from_labels_lenient(std::span<const std::string> labels);

// Inverse of spans_from_labels. Throws ContractError on overlap or range errors.
std::vector<std::string> labels_from_spans(std::span<const Span> spans, int length);

// Projects word labels onto subword pieces: B-t -> B-t, I-t, ...; I-t -> I-t on
// every piece; O -> O on every piece.
std::vector<std::string> align_to_subwords(std::span<const std::string> word_labels,
                                           std::span<const int> piece_counts);
std::vector<int> align_to_subwords(std::span<const int> word_labels,
                                   std::span<const int> piece_counts);

struct CollapsedLabels {
  std::vector<std::string> labels;
  // Per word: true when its pieces carry different tags (only filled for kAll).
  std::vector<bool> disagreement;
  int disagreement_count = 0;
};

// Word label = label of the word's first piece. With kAll the per-word
// disagreement flags are computed as well.
CollapsedLabels collapse_to_words(std::span<const std::string> piece_labels,
                                  std::span<const int> piece_counts,
                                  PoolingStrategy pooling);

// Index-space variant used on the prediction path.
std::vector<int> collapse_to_words(std::span<const int> piece_labels,
                                   std::span<const int> piece_counts);

}  // namespace xbrltag
