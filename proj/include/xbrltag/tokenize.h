#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace xbrltag {

struct AnnotatedSentence;

inline constexpr std::string_view kNumToken = "[NUM]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kContinuationPrefix = "##";

enum class NumericPolicy { kNone, kNum, kShape };

std::string_view to_string(NumericPolicy policy);
NumericPolicy parse_numeric_policy(std::string_view name);

// Number grammar: optional sign, then either a plain digit run or 1-3 digits
// followed by one or more ",ddd" groups, then an optional "." and digit run.
bool detect_number(std::string_view token);

// "53.2" -> "[XX.X]". Throws ContractError when detect_number(token) is false.
std::string shape_of(std::string_view token);

// True for strings of the form "[...]" over {X , .} with at least one X.
bool is_shape_token(std::string_view token);

// Closed set of shape pseudo-tokens; anything outside falls back to [NUM].
class ShapeVocab {
 public:
  ShapeVocab() = default;
  explicit ShapeVocab(std::set<std::string> shapes);

  static ShapeVocab from_sentences(std::span<const AnnotatedSentence> sentences);
  static ShapeVocab load(const std::string& path);
  void save(const std::string& path) const;

  bool contains(std::string_view shape) const { return shapes_.count(std::string(shape)) != 0; }
  const std::set<std::string>& shapes() const { return shapes_; }
  std::size_t size() const { return shapes_.size(); }
  std::string_view fallback() const { return kNumToken; }
  std::uint64_t fingerprint() const;

 private:
  std::set<std::string> shapes_;
};

// Replaces numbers 1:1 according to `policy`. shape_vocab is required for kShape.
std::vector<std::string> normalize_numeric(std::span<const std::string> tokens,
                                           NumericPolicy policy,
                                           const ShapeVocab* shape_vocab = nullptr);

// True for [NUM] and any shape token; these never go through greedy matching.
bool is_pseudo_token(std::string_view token);

// Greedy longest-match-first subword inventory.
class SubwordVocab {
 public:
  static constexpr std::size_t kDefaultMaxWordChars = 100;

  SubwordVocab() = default;
  SubwordVocab(std::vector<std::string> pieces, std::vector<std::string> pseudo_tokens,
               std::string unk_token = std::string(kUnkToken),
               std::size_t max_word_chars = kDefaultMaxWordChars);

  static SubwordVocab load(const std::string& path);
  void save(const std::string& path) const;

  // Every byte as an initial and a continuation piece, every digit string of
  // length <= max_digit_chunk in both forms, and every non-numeric word seen at
  // least min_count times in the corpus.
  static SubwordVocab build(std::span<const AnnotatedSentence> sentences, int min_count = 3,
                            int max_digit_chunk = 3);

  bool contains(std::string_view piece) const { return lookup_.count(std::string(piece)) != 0; }
  std::optional<int> id(std::string_view piece) const;
  const std::vector<std::string>& pieces() const { return pieces_; }
  const std::vector<std::string>& pseudo_tokens() const { return pseudo_; }
  const std::string& unk_token() const { return unk_; }
  std::size_t max_word_chars() const { return max_word_chars_; }
  bool is_pseudo(std::string_view token) const;
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> pieces_;
  std::vector<std::string> pseudo_;
  std::unordered_set<std::string> pseudo_lookup_;
  std::unordered_map<std::string, int> lookup_;
  std::string unk_;
  std::size_t max_word_chars_ = kDefaultMaxWordChars;
};

std::vector<std::string> wordpiece_tokenize(std::string_view word, const SubwordVocab& vocab);

// Pieces of a whole sentence plus how many pieces each word produced.
struct PieceSequence {
  std::vector<std::string> pieces;
  std::vector<int> piece_counts;
};
PieceSequence wordpiece_tokenize_sentence(std::span<const std::string> words,
                                          const SubwordVocab& vocab);

struct FragmentationStats {
  double avg_pieces_per_gold_span = 0.0;
  double avg_words_per_gold_span = 0.0;
  std::size_t span_count = 0;
};

// Throws FormatError when the corpus has no gold spans.
FragmentationStats fragmentation_stats(std::span<const AnnotatedSentence> sentences,
                                       const SubwordVocab& vocab, NumericPolicy policy,
                                       const ShapeVocab* shape_vocab = nullptr);

// Raw-text word splitter: whitespace, then leading/trailing punctuation is split
// into separate tokens. Numbers keep their inner separators and pseudo-tokens
// stay intact.
std::vector<std::string> split_words(std::string_view text);

}  // namespace xbrltag
