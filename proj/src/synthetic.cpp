#include "xbrltag/synthetic.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>

#include "xbrltag/error.h"
#include "xbrltag/rng.h"

namespace xbrltag {

namespace {

struct CatalogEntry {
  const char* tag;
  AmountFamily family;
  const char* group;
  const char* cue;
};

// Consecutive entries form a pair sharing a group word.
constexpr std::array<CatalogEntry, 16> kCatalog{{
    {"InterestExpense", AmountFamily::kMoney, "interest", "expense"},
    {"DebtInstrumentInterestRateStatedPercentage", AmountFamily::kPercent, "interest", "rate"},
    {"IncomeTaxExpenseBenefit", AmountFamily::kMoney, "tax", "provision"},
    {"EffectiveIncomeTaxRateContinuingOperations", AmountFamily::kPercent, "tax", "effective"},
    {"OperatingLeaseLiability", AmountFamily::kMoney, "lease", "liability"},
    {"LesseeOperatingLeaseTermOfContract", AmountFamily::kCount, "lease", "term"},
    {"Revenues", AmountFamily::kMoney, "revenue", "sales"},
    {"ConcentrationRiskPercentage1", AmountFamily::kPercent, "revenue", "concentration"},
    {"ShareBasedCompensation", AmountFamily::kMoney, "award", "compensation"},
    {"ShareBasedCompensationArrangementAwardVestingPeriod", AmountFamily::kCount, "award", "vesting"},
    {"LongTermDebt", AmountFamily::kMoney, "debt", "borrowings"},
    {"DebtInstrumentBasisSpreadOnVariableRate1", AmountFamily::kPercent, "debt", "spread"},
    {"BusinessAcquisitionTransactionCosts", AmountFamily::kMoney, "acquisition", "costs"},
    {"BusinessAcquisitionPercentageOfVotingInterestsAcquired", AmountFamily::kPercent, "acquisition", "voting"},
    {"DepreciationDepletionAndAmortization", AmountFamily::kMoney, "depreciation", "charge"},
    {"PropertyPlantAndEquipmentUsefulLife", AmountFamily::kCount, "depreciation", "useful"},
}};

constexpr std::array<const char*, 14> kLeadWords{
    "the", "total", "our", "consolidated", "during", "fiscal", "year", "company", "net",
    "quarter", "annual", "reported", "as", "such"};
constexpr std::array<const char*, 12> kGapWords{
    "as", "reported", "for", "the", "period", "under", "related", "to", "recognized", "within",
    "its", "applicable"};
constexpr std::array<const char*, 6> kPostVerbs{"recognized", "recorded", "reported", "incurred",
                                                "disclosed", "measured"};
constexpr std::array<const char*, 10> kTailWords{
    "in", "the", "accompanying", "statements", "which", "were", "primarily", "attributable", "to",
    "operations"};
constexpr std::array<const char*, 8> kWordNumbers{"two", "three", "four", "five",
                                                  "six", "seven", "eight", "ten"};
constexpr std::array<const char*, 4> kMonths{"december", "september", "june", "march"};

template <typename T, std::size_t N>
const T& pick(Rng& rng, const std::array<T, N>& items) {
  return items[rng.below(N)];
}

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string first_camel_word(const std::string& tag) {
  std::size_t end = 1;
  while (end < tag.size() && !std::isupper(static_cast<unsigned char>(tag[end]))) ++end;
  return lowercase(tag.substr(0, end));
}

std::string digits(Rng& rng, int count, bool leading_nonzero) {
  std::string out;
  for (int i = 0; i < count; ++i) {
    const bool lead = i == 0 && leading_nonzero;
    out.push_back(static_cast<char>('0' + (lead ? 1 + rng.below(9) : rng.below(10))));
  }
  return out;
}

std::string grouped(Rng& rng, int groups) {
  std::string out = digits(rng, 1 + static_cast<int>(rng.below(3)), true);
  for (int g = 0; g < groups; ++g) out += "," + digits(rng, 3, false);
  return out;
}

struct Amount {
  std::string token;
  std::vector<std::string> after;  // unit words, labeled O
  bool currency = false;
};

Amount sample_amount(Rng& rng, AmountFamily family) {
  Amount a;
  switch (family) {
    case AmountFamily::kMoney: {
      a.currency = rng.chance(0.6);
      if (rng.chance(0.7)) {
        a.token = grouped(rng, 1 + static_cast<int>(rng.below(2)));
        if (rng.chance(0.3)) a.token += "." + digits(rng, 1, false);
      } else {
        a.token = digits(rng, 1 + static_cast<int>(rng.below(3)), true) + "." + digits(rng, 1, false);
        a.after.emplace_back(rng.chance(0.7) ? "million" : "billion");
      }
      break;
    }
    case AmountFamily::kPercent: {
      const int whole = 1 + static_cast<int>(rng.below(2));
      a.token = digits(rng, whole, true);
      if (rng.chance(0.85)) a.token += "." + digits(rng, 1 + static_cast<int>(rng.below(2)), false);
      if (rng.chance(0.3)) a.after.emplace_back("%");
      break;
    }
    case AmountFamily::kCount: {
      a.token = rng.chance(0.7) ? std::to_string(1 + rng.below(9)) : std::to_string(10 + rng.below(31));
      a.after.emplace_back(rng.chance(0.5) ? "years" : "months");
      break;
    }
  }
  return a;
}

struct Builder {
  std::vector<std::string> tokens;
  std::vector<Span> spans;

  void word(std::string w) { tokens.push_back(std::move(w)); }
  void words(Rng& rng, std::span<const char* const> pool, int min_count, int max_count) {
    const int n = min_count + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_count - min_count + 1)));
    for (int i = 0; i < n; ++i) word(pool[rng.below(pool.size())]);
  }
  void tagged(std::string w, const std::string& tag) {
    const int pos = static_cast<int>(tokens.size());
    spans.push_back({pos, pos + 1, tag});
    word(std::move(w));
  }
};

}  // namespace

LabelSet synthetic_labelset(int n_tags) {
  if (n_tags < 1) throw ContractError("synthetic_labelset: n_tags must be positive");
  std::vector<std::string> tags;
  for (int i = 0; i < n_tags; ++i) {
    if (i < static_cast<int>(kCatalog.size())) {
      tags.emplace_back(kCatalog[i].tag);
    } else {
      char name[48];
      std::snprintf(name, sizeof(name), "SyntheticConcept%03d", i);
      tags.emplace_back(name);
    }
  }
  return LabelSet(std::move(tags));
}

std::vector<TagProfile> synthetic_profiles(const LabelSet& labelset, int n_tags) {
  if (static_cast<int>(labelset.tag_count()) < n_tags) {
    throw ContractError("synthetic: label set has " + std::to_string(labelset.tag_count()) +
                        " tags, need " + std::to_string(n_tags));
  }
  std::vector<TagProfile> out;
  for (int i = 0; i < n_tags; ++i) {
    const std::string& tag = labelset.tags()[i];
    auto it = std::find_if(kCatalog.begin(), kCatalog.end(),
                           [&](const CatalogEntry& e) { return tag == e.tag; });
    if (it != kCatalog.end()) {
      out.push_back({tag, it->family, it->group, it->cue});
      continue;
    }
    // Unknown names: pairs alternate money with percent/count, the group word is
    // shared within a pair and the cue word is the lowercased tag name.
    const int pair = i / 2;
    AmountFamily family = AmountFamily::kMoney;
    if (i % 2 == 1) family = pair % 3 == 2 ? AmountFamily::kCount : AmountFamily::kPercent;
    const std::string& pair_head = labelset.tags()[2 * pair];
    out.push_back({tag, family, "grp" + first_camel_word(pair_head) + std::to_string(pair), lowercase(tag)});
  }
  return out;
}

std::vector<AnnotatedSentence> generate_synthetic(const SyntheticConfig& config, const LabelSet& labelset) {
  if (config.n_tags < 4) throw ContractError("synthetic: n_tags must be >= 4");
  if (config.n_sentences < 1) throw ContractError("synthetic: n_sentences must be >= 1");
  if (config.sentences_per_doc < 1 || config.docs_per_period < 1) {
    throw ContractError("synthetic: document layout must be positive");
  }
  for (double p : {config.hidden_cue_rate, config.post_cue_rate, config.second_mention_rate,
                   config.distractor_rate, config.max_word_number_share}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("synthetic: rates must lie in [0,1]");
  }
  const auto profiles = synthetic_profiles(labelset, config.n_tags);

  // Mildly skewed tag frequencies.
  std::vector<double> cumulative;
  double total = 0.0;
  for (int i = 0; i < config.n_tags; ++i) {
    total += 1.0 / (1.0 + 0.1 * i);
    cumulative.push_back(total);
  }

  Rng rng(config.seed);
  std::size_t span_total = 0;
  std::size_t word_number_spans = 0;
  std::vector<AnnotatedSentence> out;
  out.reserve(static_cast<std::size_t>(config.n_sentences));

  for (int s = 0; s < config.n_sentences; ++s) {
    Builder b;
    const int mentions = rng.chance(config.second_mention_rate) ? 2 : 1;
    for (int m = 0; m < mentions; ++m) {
      const double u = rng.unit() * total;
      const auto tag_index = static_cast<std::size_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      const TagProfile& profile = profiles[std::min(tag_index, profiles.size() - 1)];

      Amount amount = sample_amount(rng, profile.family);
      if (profile.family == AmountFamily::kCount && rng.chance(0.4) &&
          static_cast<double>(word_number_spans + 1) <=
              config.max_word_number_share * static_cast<double>(span_total + 1)) {
        amount.token = pick(rng, kWordNumbers);
        ++word_number_spans;
      }
      ++span_total;

      const bool hidden = rng.chance(config.hidden_cue_rate);
      const bool post = rng.chance(config.post_cue_rate);
      if (m > 0) {
        b.word(",");
        b.word("and");
      } else {
        b.words(rng, kLeadWords, 0, 3);
      }
      if (!post) {
        if (hidden) {
          b.word(profile.cue_word);
          b.words(rng, kGapWords, 3, 5);
          b.word(profile.group_word);
        } else {
          b.word(profile.group_word);
          b.word(profile.cue_word);
        }
        if (amount.currency) b.word("$");
        b.tagged(amount.token, profile.tag);
        for (auto& w : amount.after) b.word(w);
      } else {
        b.word(pick(rng, kPostVerbs));
        if (amount.currency) b.word("$");
        b.tagged(amount.token, profile.tag);
        for (auto& w : amount.after) b.word(w);
        if (hidden) {
          b.word(profile.group_word);
          b.words(rng, kGapWords, 3, 5);
          b.word(profile.cue_word);
        } else {
          b.word(profile.cue_word);
          b.word(profile.group_word);
        }
      }
    }
    if (rng.chance(config.distractor_rate)) {
      switch (rng.below(3)) {
        case 0:
          b.word("as");
          b.word("of");
          b.word(pick(rng, kMonths));
          b.word(std::to_string(1 + rng.below(31)));
          b.word(",");
          b.word(std::to_string(2016 + rng.below(5)));
          break;
        case 1:
          b.word("see");
          b.word("note");
          b.word(std::to_string(1 + rng.below(20)));
          break;
        default:
          b.word("compared");
          b.word("to");
          b.word("fiscal");
          b.word(std::to_string(2015 + rng.below(6)));
          break;
      }
    }
    b.words(rng, kTailWords, 0, 3);
    b.word(".");

    AnnotatedSentence sentence;
    sentence.labels = labels_from_spans(b.spans, static_cast<int>(b.tokens.size()));
    sentence.tokens = std::move(b.tokens);
    const int doc = s / config.sentences_per_doc;
    sentence.doc_id = "synth-" + std::to_string(config.seed) + "-d" + std::to_string(doc);
    sentence.period_index = doc / config.docs_per_period;
    out.push_back(std::move(sentence));
  }
  return out;
}

}  // namespace xbrltag
