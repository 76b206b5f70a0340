#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xbrltag/corpus.h"
#include "xbrltag/labels.h"

namespace xbrltag {

// Desk-scale corpus generator. Every mention is an amount whose gold tag is
// fixed by a cue phrase; paired tags share a "group" cue word and differ in
// both a tag-specific cue word and the shape family of their amounts
// (money / percent / count).
struct SyntheticConfig {
  int n_sentences = 1000;
  int n_tags = 12;
  std::uint64_t seed = 1;

  // Fraction of mentions whose tag-specific cue word sits outside a small
  // context window around the amount (only the shared group word is close).
  double hidden_cue_rate = 0.35;
  // Fraction of mentions with the cue phrase after the amount.
  double post_cue_rate = 0.5;
  double second_mention_rate = 0.4;
  double distractor_rate = 0.5;
  // Ceiling on the share of gold spans that are spelled-out numbers.
  double max_word_number_share = 0.08;
  int sentences_per_doc = 10;
  int docs_per_period = 4;
};

enum class AmountFamily { kMoney, kPercent, kCount };

struct TagProfile {
  std::string tag;
  AmountFamily family = AmountFamily::kMoney;
  std::string group_word;
  std::string cue_word;
};

// Tag names for a synthetic run, drawn from a built-in catalog of XBRL-style
// names (synthetic placeholders past the catalog size).
LabelSet synthetic_labelset(int n_tags);

// Profiles for the first n_tags tags of `labelset`.
std::vector<TagProfile> synthetic_profiles(const LabelSet& labelset, int n_tags);

// Deterministic in (config, labelset). Throws ContractError when n_tags < 4,
// n_sentences < 1, or the label set has fewer than n_tags tags.
std::vector<AnnotatedSentence> generate_synthetic(const SyntheticConfig& config,
                                                  const LabelSet& labelset);

}  // namespace xbrltag
