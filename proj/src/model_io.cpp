#include <cstring>
#include <fstream>
#include <sstream>

#include "xbrltag/error.h"
#include "xbrltag/hash.h"
#include "xbrltag/tagger.h"

namespace xbrltag {

namespace {

constexpr char kMagic[8] = {'X', 'B', 'R', 'L', 'T', 'A', 'G', 'M'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<char>(u & 0xff));
      if constexpr (sizeof(T) > 1) u >>= 8;
    }
  }
  void put_double(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put(bits);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void put_raw(const char* data, std::size_t n) { out_.append(data, n); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  double get_double() {
    const auto bits = get<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw FormatError("model file truncated");
  }
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const TaggerModel& model) {
  Writer w;
  w.put_raw(kMagic, sizeof(kMagic));
  w.put(kModelFormatVersion);
  w.put(static_cast<std::uint8_t>(model.head));
  w.put(static_cast<std::uint8_t>(model.granularity));
  w.put(static_cast<std::uint8_t>(model.policy));
  w.put(std::uint8_t{0});
  w.put(model.training_seed);
  w.put(model.labelset.fingerprint());
  w.put(model.vocab_fingerprint);
  w.put(model.shape_fingerprint);
  w.put(model.features.hash_dimension);
  w.put(static_cast<std::int32_t>(model.features.context_window));
  w.put(model.features.hash_seed);
  w.put(static_cast<std::int32_t>(model.features.affix_length));
  w.put(static_cast<std::uint32_t>(model.labelset.tag_count()));
  for (const auto& tag : model.labelset.tags()) w.put_string(tag);
  const std::size_t L = model.labelset.label_count();
  w.put(static_cast<std::uint32_t>(L));
  w.put(static_cast<std::uint64_t>(model.weights.row_count()));
  for (std::uint32_t slot : model.weights.sorted_slots()) {
    w.put(model.weights.feature_of(slot));
    for (double v : model.weights.row(slot)) w.put_double(v);
  }
  w.put(static_cast<std::uint8_t>(model.crf ? 1 : 0));
  if (model.crf) {
    for (double v : model.crf->transitions.data()) w.put_double(v);
    for (double v : model.crf->start) w.put_double(v);
    for (double v : model.crf->end) w.put_double(v);
  }
  const std::uint64_t checksum = fnv1a64(w.bytes());
  w.put(checksum);
  return std::move(w.bytes());
}

TaggerModel deserialize_model(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not an xbrltag model file (bad magic)");
  }
  const std::size_t body = bytes.size() - 8;
  {
    const std::string trailer = bytes.substr(body);
    Reader tail(trailer, 8);
    if (tail.get<std::uint64_t>() != fnv1a64(std::string_view(bytes).substr(0, body))) {
      throw FormatError("model file checksum mismatch");
    }
  }
  Reader r(bytes, body);
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.get<std::uint8_t>();
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version));
  }
  TaggerModel m;
  const auto head = r.get<std::uint8_t>();
  const auto granularity = r.get<std::uint8_t>();
  const auto policy = r.get<std::uint8_t>();
  r.get<std::uint8_t>();
  if (head > 1 || granularity > 1 || policy > 2) throw FormatError("model header holds an unknown enum value");
  m.head = static_cast<Head>(head);
  m.granularity = static_cast<Granularity>(granularity);
  m.policy = static_cast<NumericPolicy>(policy);
  m.training_seed = r.get<std::uint64_t>();
  const auto labelset_fp = r.get<std::uint64_t>();
  m.vocab_fingerprint = r.get<std::uint64_t>();
  m.shape_fingerprint = r.get<std::uint64_t>();
  m.features.hash_dimension = r.get<std::uint32_t>();
  m.features.context_window = r.get<std::int32_t>();
  m.features.hash_seed = r.get<std::uint64_t>();
  m.features.affix_length = r.get<std::int32_t>();
  try {
    m.features.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("model header: ") + e.what());
  }
  const auto tag_count = r.get<std::uint32_t>();
  std::vector<std::string> tags;
  for (std::uint32_t i = 0; i < tag_count; ++i) tags.push_back(r.get_string());
  try {
    m.labelset = LabelSet(std::move(tags));
  } catch (const Error& e) {
    throw FormatError(std::string("model label set: ") + e.what());
  }
  if (m.labelset.fingerprint() != labelset_fp) throw FormatError("model label-set fingerprint mismatch");
  const auto L = r.get<std::uint32_t>();
  if (L != m.labelset.label_count()) throw FormatError("model label count mismatch");
  m.weights = WeightTable(L);
  const auto rows = r.get<std::uint64_t>();
  std::int64_t previous = -1;
  for (std::uint64_t i = 0; i < rows; ++i) {
    const auto feature = r.get<std::uint32_t>();
    if (static_cast<std::int64_t>(feature) <= previous || feature >= m.features.hash_dimension) {
      throw FormatError("model weight rows out of order or out of range");
    }
    previous = feature;
    auto row = m.weights.row(m.weights.ensure(feature));
    for (double& v : row) v = r.get_double();
  }
  const auto has_crf = r.get<std::uint8_t>();
  if (has_crf > 1) throw FormatError("model CRF flag is invalid");
  if (has_crf) {
    CrfParams p = CrfParams::zeros(L);
    for (double& v : p.transitions.data()) v = r.get_double();
    for (double& v : p.start) v = r.get_double();
    for (double& v : p.end) v = r.get_double();
    m.crf = std::move(p);
  }
  if ((m.head == Head::kCrf) != m.crf.has_value()) throw FormatError("model head and CRF block disagree");
  if (r.position() != body) throw FormatError("model file has trailing bytes");
  return m;
}

void save_model(const TaggerModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path);
  const std::string bytes = serialize_model(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing model file " + path);
}

TaggerModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace xbrltag
