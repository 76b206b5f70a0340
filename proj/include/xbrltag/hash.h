#pragma once

#include <cstdint>
#include <string_view>

namespace xbrltag {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// 64-bit FNV-1a. This is the pinned hash used for feature hashing and for
// vocabulary / label-set fingerprints; changing it invalidates model files.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t state = kFnvOffsetBasis) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

// Incremental fingerprint over a sequence of strings. Each item is followed by
// a 0x1f separator so ("ab","c") and ("a","bc") differ.
class Fingerprint {
 public:
  void add(std::string_view item) {
    state_ = fnv1a64(item, state_);
    state_ = fnv1a64(std::string_view("\x1f", 1), state_);
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = kFnvOffsetBasis;
};

}  // namespace xbrltag
