#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xbrltag {

enum class Granularity { kWord, kSubword };

std::string_view to_string(Granularity granularity);
Granularity parse_granularity(std::string_view name);

struct FeatureConfig {
  std::uint32_t hash_dimension = 1u << 20;  // power of two, >= 2^10
  int context_window = 2;
  std::uint64_t hash_seed = 0;
  int affix_length = 3;

  // Throws ConfigError when out of range.
  void validate() const;
  bool operator==(const FeatureConfig&) const = default;
};

// Word shape used as a feature: letters collapse to runs of 'x'/'X', digits
// map to 'd' one-for-one, other characters are kept. Pseudo-tokens map to
// themselves.
std::string surface_shape(std::string_view unit);

// Sorted, de-duplicated hashed feature indices for position i. Feature
// strings are hashed with 64-bit FNV-1a (seeded by hash_seed) and reduced
// modulo hash_dimension.
std::vector<std::uint32_t> extract_features(std::span<const std::string> units, std::size_t i,
                                            const FeatureConfig& config,
                                            Granularity granularity = Granularity::kWord);

// The raw feature strings behind extract_features, in generation order.
std::vector<std::string> feature_strings(std::span<const std::string> units, std::size_t i,
                                         const FeatureConfig& config,
                                         Granularity granularity = Granularity::kWord);

std::uint32_t hash_feature(std::string_view feature, const FeatureConfig& config);

}  // namespace xbrltag
