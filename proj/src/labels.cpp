#include "xbrltag/labels.h"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "xbrltag/error.h"
#include "xbrltag/hash.h"

namespace xbrltag {

LabelSet::LabelSet(std::vector<std::string> tags) : tags_(std::move(tags)) {
  if (tags_.empty()) throw ContractError("label set: no tags");
  labels_.reserve(2 * tags_.size() + 1);
  labels_.emplace_back(kOutside);
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    const std::string& tag = tags_[i];
    if (tag.empty()) throw ContractError("label set: empty tag name");
    if (!tag_lookup_.emplace(tag, static_cast<int>(i)).second) {
      throw ContractError("label set: duplicate tag '" + tag + "'");
    }
    labels_.push_back("B-" + tag);
    labels_.push_back("I-" + tag);
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    label_lookup_.emplace(labels_[i], static_cast<int>(i));
  }
}

LabelSet LabelSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open label set file: " + path);
  std::vector<std::string> tags;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    tags.push_back(line);
  }
  return LabelSet(std::move(tags));
}

void LabelSet::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write label set file: " + path);
  out << "#xbrltag-tags v1\n";
  for (const auto& tag : tags_) out << tag << '\n';
}

std::optional<int> LabelSet::tag_index(std::string_view tag) const {
  auto it = tag_lookup_.find(std::string(tag));
  if (it == tag_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> LabelSet::label_index(std::string_view label) const {
  auto it = label_lookup_.find(std::string(label));
  if (it == label_lookup_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t LabelSet::fingerprint() const {
  Fingerprint fp;
  fp.add("labelset-v1");
  for (const auto& tag : tags_) fp.add(tag);
  return fp.value();
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kUnknownLabel: return "unknown_label";
    case ViolationKind::kInsideAtStart: return "inside_at_start";
    case ViolationKind::kInsideAfterOutside: return "inside_after_outside";
    case ViolationKind::kInsideTagMismatch: return "inside_tag_mismatch";
  }
  return "unknown";
}

std::optional<ParsedLabel> parse_label(std::string_view label) {
  if (label == kOutside) return ParsedLabel{'O', {}};
  if (label.size() < 3 || label[1] != '-') return std::nullopt;
  if (label[0] != 'B' && label[0] != 'I') return std::nullopt;
  return ParsedLabel{label[0], label.substr(2)};
}

namespace {

// Shared IOB2 rule engine. `prev` is the previous position's label when it was
// a known label, nullopt at position 0 or after an unknown label.
template <typename Classify>
std::vector<Violation> run_validation(std::size_t length, Classify classify) {
  std::vector<Violation> out;
  std::optional<ParsedLabel> prev;
  bool at_start = true;
  for (std::size_t i = 0; i < length; ++i) {
    std::optional<ParsedLabel> cur = classify(i);
    const int pos = static_cast<int>(i);
    if (!cur) {
      out.push_back({pos, ViolationKind::kUnknownLabel});
    } else if (cur->prefix == 'I') {
      if (at_start) {
        out.push_back({pos, ViolationKind::kInsideAtStart});
      } else if (prev && prev->prefix == 'O') {
        out.push_back({pos, ViolationKind::kInsideAfterOutside});
      } else if (prev && prev->tag != cur->tag) {
        out.push_back({pos, ViolationKind::kInsideTagMismatch});
      }
    }
    prev = cur;
    at_start = false;
  }
  return out;
}

}  // namespace

std::vector<Violation> validate_iob2(std::span<const std::string> labels,
                                     const LabelSet& labelset) {
  return run_validation(labels.size(), [&](std::size_t i) -> std::optional<ParsedLabel> {
    if (!labelset.label_index(labels[i])) return std::nullopt;
    return parse_label(labels[i]);
  });
}

std::vector<Violation> validate_iob2(std::span<const int> labels,
                                     const LabelSet& labelset) {
  return run_validation(labels.size(), [&](std::size_t i) -> std::optional<ParsedLabel> {
    const int y = labels[i];
    if (y < 0 || y >= static_cast<int>(labelset.label_count())) return std::nullopt;
    return parse_label(labelset.label(y));
  });
}

std::vector<Span> spans_from_labels(std::span<const std::string> labels) {
  std::vector<Span> spans;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto parsed = parse_label(labels[i]);
    const std::string where = "position " + std::to_string(i);
    if (!parsed) throw FormatError("invalid IOB2 at " + where + ": unknown label '" + labels[i] + "'");
    if (parsed->prefix == 'O') continue;
    if (parsed->prefix == 'B') {
      spans.push_back({static_cast<int>(i), static_cast<int>(i) + 1, std::string(parsed->tag)});
      continue;
    }
    if (spans.empty() || spans.back().end != static_cast<int>(i)) {
      throw FormatError("invalid IOB2 at " + where + ": " +
                        (i == 0 ? "I- at sequence start" : "I- after O"));
    }
    if (spans.back().tag != parsed->tag) {
      throw FormatError("invalid IOB2 at " + where + ": I-" + std::string(parsed->tag) +
                        " continues " + spans.back().tag);
    }
    spans.back().end = static_cast<int>(i) + 1;
  }
  return spans;
}

std::vector<Span> spans_from_labels_lenient(std::span<const std::string> labels) {
  std::vector<Span> spans;
  bool open = false;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto parsed = parse_label(labels[i]);
    const int pos = static_cast<int>(i);
    if (!parsed || parsed->prefix == 'O') {
      open = false;
    } else if (parsed->prefix == 'B') {
      spans.push_back({pos, pos + 1, std::string(parsed->tag)});
      open = true;
    } else if (open && spans.back().tag == parsed->tag) {
      spans.back().end = pos + 1;
    } else {
      open = false;
    }
  }
  return spans;
}

std::vector<std::string> labels_from_spans(std::span<const Span> spans, int length) {
  if (length < 0) throw ContractError("labels_from_spans: negative length");
  std::vector<std::string> labels(static_cast<std::size_t>(length), std::string(kOutside));
  std::vector<bool> used(static_cast<std::size_t>(length), false);
  for (const Span& s : spans) {
    const std::string desc = "(" + std::to_string(s.start) + "," + std::to_string(s.end) + "," + s.tag + ")";
    if (s.start < 0 || s.end > length || s.start >= s.end) {
      throw ContractError("labels_from_spans: span out of range " + desc);
    }
    if (s.tag.empty()) throw ContractError("labels_from_spans: empty tag in span " + desc);
    for (int i = s.start; i < s.end; ++i) {
      if (used[i]) throw ContractError("labels_from_spans: overlapping span " + desc);
      used[i] = true;
      labels[i] = (i == s.start ? "B-" : "I-") + s.tag;
    }
  }
  return labels;
}

namespace {

void check_piece_counts(std::size_t words, std::span<const int> piece_counts) {
  if (words != piece_counts.size()) {
    throw ContractError("piece count vector length " + std::to_string(piece_counts.size()) +
                        " does not match " + std::to_string(words) + " words");
  }
  for (std::size_t i = 0; i < piece_counts.size(); ++i) {
    if (piece_counts[i] < 1) {
      throw ContractError("piece count < 1 for word " + std::to_string(i));
    }
  }
}

std::size_t total_pieces(std::span<const int> piece_counts) {
  return static_cast<std::size_t>(std::accumulate(piece_counts.begin(), piece_counts.end(), 0LL));
}

}  // namespace

std::vector<std::string> align_to_subwords(std::span<const std::string> word_labels,
                                           std::span<const int> piece_counts) {
  check_piece_counts(word_labels.size(), piece_counts);
  std::vector<std::string> out;
  out.reserve(total_pieces(piece_counts));
  for (std::size_t w = 0; w < word_labels.size(); ++w) {
    const std::string& label = word_labels[w];
    auto parsed = parse_label(label);
    if (!parsed) throw ContractError("align_to_subwords: unknown label '" + label + "'");
    out.push_back(label);
    const std::string rest = parsed->prefix == 'O' ? std::string(kOutside) : "I-" + std::string(parsed->tag);
    for (int p = 1; p < piece_counts[w]; ++p) out.push_back(rest);
  }
  return out;
}

std::vector<int> align_to_subwords(std::span<const int> word_labels,
                                   std::span<const int> piece_counts) {
  check_piece_counts(word_labels.size(), piece_counts);
  std::vector<int> out;
  out.reserve(total_pieces(piece_counts));
  for (std::size_t w = 0; w < word_labels.size(); ++w) {
    const int y = word_labels[w];
    out.push_back(y);
    const int rest = y == LabelSet::outside() ? y : LabelSet::inside_of(LabelSet::tag_of(y));
    for (int p = 1; p < piece_counts[w]; ++p) out.push_back(rest);
  }
  return out;
}

CollapsedLabels collapse_to_words(std::span<const std::string> piece_labels,
                                  std::span<const int> piece_counts,
                                  PoolingStrategy pooling) {
  check_piece_counts(piece_counts.size(), piece_counts);
  if (piece_labels.size() != total_pieces(piece_counts)) {
    throw ContractError("collapse_to_words: " + std::to_string(piece_labels.size()) +
                        " piece labels for " + std::to_string(total_pieces(piece_counts)) + " pieces");
  }
  CollapsedLabels out;
  out.labels.reserve(piece_counts.size());
  out.disagreement.assign(piece_counts.size(), false);
  std::size_t offset = 0;
  for (std::size_t w = 0; w < piece_counts.size(); ++w) {
    out.labels.push_back(piece_labels[offset]);
    if (pooling == PoolingStrategy::kAll) {
      auto tag_view = [](const std::string& label) -> std::string_view {
        auto parsed = parse_label(label);
        return parsed ? parsed->tag : std::string_view(label);
      };
      const std::string_view head = tag_view(piece_labels[offset]);
      for (int p = 1; p < piece_counts[w]; ++p) {
        if (tag_view(piece_labels[offset + p]) != head) {
          out.disagreement[w] = true;
          ++out.disagreement_count;
          break;
        }
      }
    }
    offset += static_cast<std::size_t>(piece_counts[w]);
  }
  return out;
}

std::vector<int> collapse_to_words(std::span<const int> piece_labels,
                                   std::span<const int> piece_counts) {
  check_piece_counts(piece_counts.size(), piece_counts);
  if (piece_labels.size() != total_pieces(piece_counts)) {
    throw ContractError("collapse_to_words: piece label count mismatch");
  }
  std::vector<int> out;
  out.reserve(piece_counts.size());
  std::size_t offset = 0;
  for (int count : piece_counts) {
    out.push_back(piece_labels[offset]);
    offset += static_cast<std::size_t>(count);
  }
  return out;
}

}  // namespace xbrltag
