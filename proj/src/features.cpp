#include "xbrltag/features.h"

#include <algorithm>
#include <cctype>

#include "xbrltag/error.h"
#include "xbrltag/hash.h"
#include "xbrltag/tokenize.h"

namespace xbrltag {

std::string_view to_string(Granularity granularity) {
  return granularity == Granularity::kWord ? "word" : "subword";
}

Granularity parse_granularity(std::string_view name) {
  if (name == "word") return Granularity::kWord;
  if (name == "subword") return Granularity::kSubword;
  throw ConfigError("unknown granularity '" + std::string(name) + "' (expected word|subword)");
}

void FeatureConfig::validate() const {
  if (hash_dimension < (1u << 10) || (hash_dimension & (hash_dimension - 1)) != 0) {
    throw ConfigError("feature config: hash_dimension must be a power of two >= 1024");
  }
  if (context_window < 0) throw ConfigError("feature config: context_window must be >= 0");
  if (affix_length < 0) throw ConfigError("feature config: affix_length must be >= 0");
}

std::string surface_shape(std::string_view unit) {
  if (is_pseudo_token(unit)) return std::string(unit);
  std::string out;
  for (unsigned char c : unit) {
    char mapped;
    if (std::isdigit(c)) {
      out.push_back('d');
      continue;
    }
    if (std::isupper(c)) {
      mapped = 'X';
    } else if (std::islower(c)) {
      mapped = 'x';
    } else {
      mapped = static_cast<char>(c);
    }
    if ((mapped == 'x' || mapped == 'X') && !out.empty() && out.back() == mapped) continue;
    out.push_back(mapped);
  }
  return out;
}

std::uint32_t hash_feature(std::string_view feature, const FeatureConfig& config) {
  std::uint64_t state = kFnvOffsetBasis ^ (config.hash_seed * kFnvPrime);
  return static_cast<std::uint32_t>(fnv1a64(feature, state) & (config.hash_dimension - 1));
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<std::string> feature_strings(std::span<const std::string> units, std::size_t i,
                                         const FeatureConfig& config, Granularity granularity) {
  if (i >= units.size()) throw ContractError("extract_features: position out of range");
  const std::string& unit = units[i];
  const bool pseudo = is_pseudo_token(unit);
  const bool continuation = granularity == Granularity::kSubword && unit.rfind(kContinuationPrefix, 0) == 0;
  std::string_view core = unit;
  if (continuation) core.remove_prefix(kContinuationPrefix.size());

  std::vector<std::string> out;
  out.reserve(16 + 2 * static_cast<std::size_t>(config.context_window));
  out.emplace_back("bias");
  out.push_back(std::string("gran=") + (granularity == Granularity::kWord ? "w" : "s") +
                (continuation ? "|cont" : "|head"));
  out.push_back("u=" + unit);
  out.push_back("l=" + lower(unit));
  out.push_back(std::string("num=") + (pseudo || detect_number(core) ? "1" : "0"));
  out.push_back("shape=" + surface_shape(unit));
  if (!pseudo) {
    const std::size_t max_affix = std::min<std::size_t>(static_cast<std::size_t>(config.affix_length), core.size());
    for (std::size_t k = 1; k <= max_affix; ++k) {
      out.push_back("pre" + std::to_string(k) + "=" + lower(core.substr(0, k)));
      out.push_back("suf" + std::to_string(k) + "=" + lower(core.substr(core.size() - k)));
    }
  }
  const long n = static_cast<long>(units.size());
  for (int d = -config.context_window; d <= config.context_window; ++d) {
    if (d == 0) continue;
    const long j = static_cast<long>(i) + d;
    std::string value;
    if (j < 0) {
      value = "<s>";
    } else if (j >= n) {
      value = "</s>";
    } else {
      value = lower(units[static_cast<std::size_t>(j)]);
    }
    out.push_back("w[" + std::to_string(d) + "]=" + value);
  }
  if (i == 0) out.emplace_back("bos");
  if (static_cast<long>(i) == n - 1) out.emplace_back("eos");
  return out;
}

std::vector<std::uint32_t> extract_features(std::span<const std::string> units, std::size_t i,
                                            const FeatureConfig& config, Granularity granularity) {
  const auto strings = feature_strings(units, i, config, granularity);
  std::vector<std::uint32_t> out;
  out.reserve(strings.size());
  for (const auto& s : strings) out.push_back(hash_feature(s, config));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace xbrltag
