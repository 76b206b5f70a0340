#include "xbrltag/tokenize.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "xbrltag/corpus.h"
#include "xbrltag/error.h"
#include "xbrltag/hash.h"

namespace xbrltag {

namespace {

constexpr std::string_view kVocabHeader = "#xbrltag-vocab v1";
constexpr std::string_view kPseudoSection = "#pseudo-tokens";
constexpr std::string_view kShapeHeader = "#xbrltag-shapes v1";

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

// Byte offsets of UTF-8 code point starts, plus the end offset.
std::vector<std::size_t> codepoint_boundaries(std::string_view s) {
  std::vector<std::size_t> out;
  out.reserve(s.size() + 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) out.push_back(i);
  }
  out.push_back(s.size());
  return out;
}

}  // namespace

std::string_view to_string(NumericPolicy policy) {
  switch (policy) {
    case NumericPolicy::kNone: return "none";
    case NumericPolicy::kNum: return "num";
    case NumericPolicy::kShape: return "shape";
  }
  return "none";
}

NumericPolicy parse_numeric_policy(std::string_view name) {
  if (name == "none") return NumericPolicy::kNone;
  if (name == "num") return NumericPolicy::kNum;
  if (name == "shape") return NumericPolicy::kShape;
  throw ConfigError("unknown numeric policy '" + std::string(name) + "' (expected none|num|shape)");
}

bool detect_number(std::string_view token) {
  std::size_t i = 0;
  const std::size_t n = token.size();
  if (i < n && (token[i] == '+' || token[i] == '-')) ++i;
  const std::size_t int_start = i;
  while (i < n && is_digit(token[i])) ++i;
  const std::size_t lead = i - int_start;
  if (lead == 0) return false;
  if (i < n && token[i] == ',') {
    if (lead > 3) return false;
    while (i < n && token[i] == ',') {
      ++i;
      std::size_t group = 0;
      while (i < n && is_digit(token[i])) ++i, ++group;
      if (group != 3) return false;
    }
  }
  if (i < n && token[i] == '.') {
    ++i;
    std::size_t frac = 0;
    while (i < n && is_digit(token[i])) ++i, ++frac;
    if (frac == 0) return false;
  }
  return i == n;
}

std::string shape_of(std::string_view token) {
  if (!detect_number(token)) {
    throw ContractError("shape_of called on non-number '" + std::string(token) + "'");
  }
  std::string shape = "[";
  for (char c : token) {
    if (is_digit(c)) {
      shape.push_back('X');
    } else if (c == ',' || c == '.') {
      shape.push_back(c);
    }
  }
  shape.push_back(']');
  return shape;
}

bool is_shape_token(std::string_view token) {
  if (token.size() < 3 || token.front() != '[' || token.back() != ']') return false;
  bool has_x = false;
  for (char c : token.substr(1, token.size() - 2)) {
    if (c == 'X') {
      has_x = true;
    } else if (c != ',' && c != '.') {
      return false;
    }
  }
  return has_x;
}

bool is_pseudo_token(std::string_view token) {
  return token == kNumToken || is_shape_token(token);
}

// ---------------------------------------------------------------------------

ShapeVocab::ShapeVocab(std::set<std::string> shapes) : shapes_(std::move(shapes)) {
  for (const auto& s : shapes_) {
    if (!is_shape_token(s)) throw ContractError("shape vocab: malformed shape '" + s + "'");
  }
}

ShapeVocab ShapeVocab::from_sentences(std::span<const AnnotatedSentence> sentences) {
  std::set<std::string> shapes;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) {
      if (detect_number(t)) shapes.insert(shape_of(t));
    }
  }
  return ShapeVocab(std::move(shapes));
}

ShapeVocab ShapeVocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open shape vocab: " + path);
  std::string line;
  if (!read_line(in, line) || line != kShapeHeader) {
    throw FormatError("shape vocab " + path + ": missing header '" + std::string(kShapeHeader) + "'");
  }
  std::set<std::string> shapes;
  std::size_t lineno = 1;
  while (read_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!is_shape_token(line)) {
      throw FormatError("shape vocab " + path + ":" + std::to_string(lineno) + ": malformed shape '" + line + "'");
    }
    shapes.insert(line);
  }
  return ShapeVocab(std::move(shapes));
}

void ShapeVocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write shape vocab: " + path);
  out << kShapeHeader << '\n';
  for (const auto& s : shapes_) out << s << '\n';
}

std::uint64_t ShapeVocab::fingerprint() const {
  Fingerprint fp;
  fp.add("shapes-v1");
  for (const auto& s : shapes_) fp.add(s);
  return fp.value();
}

std::vector<std::string> normalize_numeric(std::span<const std::string> tokens,
                                           NumericPolicy policy, const ShapeVocab* shape_vocab) {
  if (policy == NumericPolicy::kShape && shape_vocab == nullptr) {
    throw ContractError("normalize_numeric: shape policy requires a shape vocab");
  }
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (policy == NumericPolicy::kNone || !detect_number(t)) {
      out.push_back(t);
    } else if (policy == NumericPolicy::kNum) {
      out.emplace_back(kNumToken);
    } else {
      std::string shape = shape_of(t);
      out.push_back(shape_vocab->contains(shape) ? std::move(shape) : std::string(kNumToken));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

SubwordVocab::SubwordVocab(std::vector<std::string> pieces, std::vector<std::string> pseudo_tokens,
                           std::string unk_token, std::size_t max_word_chars)
    : pieces_(std::move(pieces)),
      pseudo_(std::move(pseudo_tokens)),
      unk_(std::move(unk_token)),
      max_word_chars_(max_word_chars) {
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].empty()) throw FormatError("subword vocab: empty piece at id " + std::to_string(i));
    if (!lookup_.emplace(pieces_[i], static_cast<int>(i)).second) {
      throw FormatError("subword vocab: duplicate piece '" + pieces_[i] + "'");
    }
  }
  if (!lookup_.count(unk_)) throw FormatError("subword vocab: unk token '" + unk_ + "' is not a piece");
  for (const auto& p : pseudo_) pseudo_lookup_.insert(p);
}

std::optional<int> SubwordVocab::id(std::string_view piece) const {
  auto it = lookup_.find(std::string(piece));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

bool SubwordVocab::is_pseudo(std::string_view token) const {
  return is_pseudo_token(token) || pseudo_lookup_.count(std::string(token)) != 0;
}

std::uint64_t SubwordVocab::fingerprint() const {
  Fingerprint fp;
  fp.add("vocab-v1");
  fp.add(unk_);
  fp.add(std::to_string(max_word_chars_));
  for (const auto& p : pieces_) fp.add(p);
  fp.add(kPseudoSection);
  for (const auto& p : pseudo_) fp.add(p);
  return fp.value();
}

SubwordVocab SubwordVocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open subword vocab: " + path);
  std::string line;
  if (!read_line(in, line) || line.rfind(kVocabHeader, 0) != 0) {
    throw FormatError("subword vocab " + path + ": missing header '" + std::string(kVocabHeader) + "'");
  }
  std::string unk(kUnkToken);
  std::size_t max_chars = kDefaultMaxWordChars;
  std::istringstream header(line.substr(kVocabHeader.size()));
  for (std::string field; header >> field;) {
    if (field.rfind("unk=", 0) == 0) {
      unk = field.substr(4);
    } else if (field.rfind("max_word_chars=", 0) == 0) {
      max_chars = std::stoul(field.substr(15));
    }
  }
  std::vector<std::string> pieces;
  std::vector<std::string> pseudo;
  bool in_pseudo = false;
  while (read_line(in, line)) {
    if (line.empty()) continue;
    if (line == kPseudoSection) {
      in_pseudo = true;
      continue;
    }
    (in_pseudo ? pseudo : pieces).push_back(line);
  }
  return SubwordVocab(std::move(pieces), std::move(pseudo), std::move(unk), max_chars);
}

void SubwordVocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write subword vocab: " + path);
  out << kVocabHeader << " unk=" << unk_ << " max_word_chars=" << max_word_chars_ << '\n';
  for (const auto& p : pieces_) out << p << '\n';
  out << kPseudoSection << '\n';
  for (const auto& p : pseudo_) out << p << '\n';
}

SubwordVocab SubwordVocab::build(std::span<const AnnotatedSentence> sentences, int min_count,
                                 int max_digit_chunk) {
  std::set<std::string> chars;
  std::map<std::string, int> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) {
      const auto bounds = codepoint_boundaries(t);
      for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        chars.insert(t.substr(bounds[i], bounds[i + 1] - bounds[i]));
      }
      if (!detect_number(t) && !is_pseudo_token(t)) ++counts[t];
    }
  }
  for (char c : std::string_view("0123456789,.")) chars.insert(std::string(1, c));

  std::vector<std::string> pieces{std::string(kUnkToken)};
  std::set<std::string> seen{pieces.front()};
  auto add = [&](std::string piece) {
    if (seen.insert(piece).second) pieces.push_back(std::move(piece));
  };
  for (const auto& c : chars) add(c);
  for (const auto& c : chars) add("##" + c);
  const std::string digits = "0123456789";
  std::vector<std::string> chunks{""};
  for (int len = 1; len <= max_digit_chunk; ++len) {
    std::vector<std::string> next;
    for (const auto& prefix : chunks) {
      for (char d : digits) next.push_back(prefix + d);
    }
    for (const auto& chunk : next) add(chunk);
    for (const auto& chunk : next) add("##" + chunk);
    chunks = std::move(next);
  }
  std::vector<std::pair<std::string, int>> words(counts.begin(), counts.end());
  std::stable_sort(words.begin(), words.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [word, count] : words) {
    if (count >= min_count) add(word);
  }
  return SubwordVocab(std::move(pieces), {std::string(kNumToken)});
}

std::vector<std::string> wordpiece_tokenize(std::string_view word, const SubwordVocab& vocab) {
  if (vocab.is_pseudo(word)) return {std::string(word)};
  const auto bounds = codepoint_boundaries(word);
  const std::size_t chars = bounds.size() - 1;
  if (chars == 0 || chars > vocab.max_word_chars()) return {vocab.unk_token()};

  std::vector<std::string> pieces;
  std::size_t start = 0;  // index into bounds
  std::string candidate;
  while (start < chars) {
    std::size_t end = chars;
    bool found = false;
    while (end > start) {
      candidate.clear();
      if (start > 0) candidate.append(kContinuationPrefix);
      candidate.append(word.substr(bounds[start], bounds[end] - bounds[start]));
      if (vocab.contains(candidate)) {
        found = true;
        break;
      }
      --end;
    }
    if (!found) return {vocab.unk_token()};
    pieces.push_back(candidate);
    start = end;
  }
  return pieces;
}

PieceSequence wordpiece_tokenize_sentence(std::span<const std::string> words,
                                          const SubwordVocab& vocab) {
  PieceSequence out;
  out.piece_counts.reserve(words.size());
  for (const auto& w : words) {
    auto pieces = wordpiece_tokenize(w, vocab);
    out.piece_counts.push_back(static_cast<int>(pieces.size()));
    for (auto& p : pieces) out.pieces.push_back(std::move(p));
  }
  return out;
}

FragmentationStats fragmentation_stats(std::span<const AnnotatedSentence> sentences,
                                       const SubwordVocab& vocab, NumericPolicy policy,
                                       const ShapeVocab* shape_vocab) {
  std::size_t spans = 0;
  std::size_t pieces = 0;
  std::size_t words = 0;
  for (const auto& s : sentences) {
    const auto gold = spans_from_labels(s.labels);
    if (gold.empty()) continue;
    const auto normalized = normalize_numeric(s.tokens, policy, shape_vocab);
    for (const auto& span : gold) {
      ++spans;
      words += static_cast<std::size_t>(span.end - span.start);
      for (int i = span.start; i < span.end; ++i) {
        pieces += wordpiece_tokenize(normalized[i], vocab).size();
      }
    }
  }
  if (spans == 0) throw FormatError("fragmentation_stats: corpus has no gold spans");
  return {static_cast<double>(pieces) / static_cast<double>(spans),
          static_cast<double>(words) / static_cast<double>(spans), spans};
}

namespace {

// Length of a pseudo-token at the start of `chunk`, 0 when there is none.
std::size_t leading_pseudo(std::string_view chunk) {
  if (chunk.empty() || chunk.front() != '[') return 0;
  const auto close = chunk.find(']');
  if (close == std::string_view::npos || !is_pseudo_token(chunk.substr(0, close + 1))) return 0;
  return close + 1;
}

void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (!chunk.empty()) {
    if (const auto n = leading_pseudo(chunk)) {
      out.emplace_back(chunk.substr(0, n));
      chunk.remove_prefix(n);
      continue;
    }
    if (is_punct(chunk.front())) {
      out.emplace_back(chunk.substr(0, 1));
      chunk.remove_prefix(1);
      continue;
    }
    std::vector<std::string> trailing;
    while (!chunk.empty() && is_punct(chunk.back())) {
      trailing.emplace_back(chunk.substr(chunk.size() - 1));
      chunk.remove_suffix(1);
    }
    out.emplace_back(chunk);
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
    return;
  }
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j == i) break;
    split_chunk(text.substr(i, j - i), out);
    i = j;
  }
  return out;
}

}  // namespace xbrltag
