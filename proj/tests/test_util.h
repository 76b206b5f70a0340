#pragma once

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "xbrltag/labels.h"
#include "xbrltag/rng.h"

namespace xbrltag::testing {

inline std::string data_path(const std::string& name) { return std::string(XBRLTAG_DATA_DIR) + "/" + name; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("xbrltag-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline LabelSet abc_labels() { return LabelSet({"A", "B", "C"}); }

// Non-overlapping spans over [0, length) with tags from `labelset`.
inline std::vector<Span> random_spans(Rng& rng, int length, const LabelSet& labelset) {
  std::vector<Span> spans;
  int pos = 0;
  while (pos < length) {
    if (rng.chance(0.4)) {
      const int len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(3, length - pos))));
      spans.push_back({pos, pos + len, labelset.tags()[rng.below(labelset.tag_count())]});
      pos += len;
    } else {
      ++pos;
    }
  }
  return spans;
}

// Arbitrary label strings (IOB2 valid or not).
inline std::vector<std::string> random_label_noise(Rng& rng, int length, const LabelSet& labelset) {
  std::vector<std::string> out;
  for (int i = 0; i < length; ++i) out.push_back(labelset.labels()[rng.below(labelset.label_count())]);
  return out;
}

inline std::vector<int> random_piece_counts(Rng& rng, int words, int max_pieces = 4) {
  std::vector<int> counts;
  for (int i = 0; i < words; ++i) counts.push_back(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_pieces))));
  return counts;
}

}  // namespace xbrltag::testing
