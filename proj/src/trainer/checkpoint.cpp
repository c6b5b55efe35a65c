// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "fdsh/errors.hpp"
#include "fdsh/trainer.hpp"

namespace fdsh {
namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'D', 'S', 'H'};
constexpr std::uint8_t kVersion = 0x01;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const noexcept { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("checkpoint: truncated tensor table");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

Tensor scalars(std::vector<double> v) { return Tensor::vector(std::move(v)); }

std::vector<double> split_u64(std::uint64_t v) {
  return {static_cast<double>(v >> 32), static_cast<double>(v & 0xffffffffULL)};
}

std::uint64_t join_u64(const Tensor& t) {
  require_shape(t, {2}, "checkpoint u64 field");
  return (static_cast<std::uint64_t>(t[0]) << 32) | static_cast<std::uint64_t>(t[1]);
}

const Tensor& get(const NamedTensors& m, const std::string& name) {
  const auto it = m.find(name);
  if (it == m.end()) throw FormatError("checkpoint: missing tensor '" + name + "'");
  return it->second;
}

const Tensor& get_sized(const NamedTensors& m, const std::string& name, std::size_t n) {
  const Tensor& t = get(m, name);
  if (t.rank() != 1 || t.size() != n) throw FormatError("checkpoint: bad shape for '" + name + "'");
  return t;
}

template <class Model>
void add_model(NamedTensors& out, const Model& m, std::string_view prefix) {
  for (const auto& [name, t] : named_tensors_of(m, prefix)) out.emplace(name, *t);
}

template <class Model>
void fill_model(const NamedTensors& in, Model& m, std::string_view prefix, std::size_t& used) {
  Model::visit(m, [&](std::string_view name, Tensor& t) {
    const std::string full = std::string(prefix) + std::string(name);
    const Tensor& src = get(in, full);
    if (src.dims() != t.dims()) {
      throw FormatError("checkpoint: '" + full + "' has shape " + shape_string(src.dims()) +
                        ", expected " + shape_string(t.dims()));
    }
    t = src;
    ++used;
  });
}

std::size_t dim_of(const NamedTensors& m, const std::string& name, std::size_t axis) {
  const Tensor& t = get(m, name);
  if (t.rank() <= axis) throw FormatError("checkpoint: bad rank for '" + name + "'");
  return t.dims()[axis];
}

}  // namespace

std::vector<std::uint8_t> encode_tensors(const NamedTensors& tensors) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u8(kVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xffff) throw FormatError("checkpoint: tensor name too long");
    if (t.rank() > 0xff) throw FormatError("checkpoint: tensor rank too large");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.dims()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.values()) w.f64(v);
  }
  const std::uint32_t crc = crc_of(w.buffer());
  w.u32(crc);
  return std::move(w.buffer());
}

NamedTensors decode_tensors(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 1 + 4 + 4) throw FormatError("checkpoint: file too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
  if (bytes[4] != kVersion) {
    throw VersionError("checkpoint: unsupported version " + std::to_string(bytes[4]));
  }
  const auto payload = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (crc_of(payload) != tail.u32()) throw ChecksumError("checkpoint: CRC32 mismatch");

  Reader r(payload.subspan(5));
  const std::uint32_t count = r.u32();
  NamedTensors out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.u16());
    const std::uint8_t rank = r.u8();
    std::vector<std::size_t> dims(rank);
    std::size_t n = 1;
    for (auto& d : dims) {
      d = r.u32();
      n *= d;
    }
    std::vector<double> values(n);
    for (double& v : values) v = r.f64();
    if (!out.emplace(std::move(name), Tensor(dims, std::move(values))).second) {
      throw FormatError("checkpoint: duplicate tensor name");
    }
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes after tensor table");
  return out;
}

NamedTensors bundle_tensors(const ModelBundle& b) {
  const DetectorStack& st = b.detectors;
  NamedTensors out;
  add_model(out, st.encoder, "encoder.");
  add_model(out, st.svm, "svm.");
  add_model(out, st.ae, "ae.");
  add_model(out, st.vae, "vae.");
  add_model(out, b.predictor, "predictor.");
  out.emplace("q.values", b.q.values());
  out.emplace("q.config", scalars({b.q.config().alpha, b.q.config().gamma}));
  out.emplace("meta.seed", scalars(split_u64(b.seed)));
  out.emplace("meta.fingerprint", scalars(split_u64(b.config_fingerprint)));
  out.emplace("meta.features",
              scalars({static_cast<double>(st.features.window),
                       static_cast<double>(st.features.embed_dim),
                       static_cast<double>(st.features.horizon)}));
  out.emplace("meta.scalars", scalars({st.svm.C, st.ae.lambda, b.predictor.decision_threshold}));
  out.emplace("normalizer.min", scalars({st.normalizer.min().begin(), st.normalizer.min().end()}));
  out.emplace("normalizer.max", scalars({st.normalizer.max().begin(), st.normalizer.max().end()}));
  out.emplace("calibration", scalars({st.calibration.ae_reference, st.calibration.vae_reference}));
  out.emplace("fusion", scalars({st.fusion.w_ae, st.fusion.w_vae, st.fusion.threshold,
                                 st.fusion.quantile}));
  return out;
}

ModelBundle bundle_from_tensors(const NamedTensors& m) {
  const std::size_t hidden = dim_of(m, "encoder.w_h", 1);
  const std::size_t input = dim_of(m, "svm.weights", 1);
  const std::size_t latent = dim_of(m, "vae.enc_mu.weight", 0);
  const std::size_t ae_wide = dim_of(m, "ae.enc1.weight", 0);
  const std::size_t ae_narrow = dim_of(m, "ae.enc2.weight", 0);
  const std::size_t vae_hidden = dim_of(m, "vae.enc_hidden.weight", 0);
  const std::size_t head = dim_of(m, "predictor.hidden.weight", 0);
  const Tensor& feat = get_sized(m, "meta.features", 3);
  const Tensor& sc = get_sized(m, "meta.scalars", 3);
  const Tensor& qc = get_sized(m, "q.config", 2);
  if (input <= hidden) throw FormatError("checkpoint: inconsistent feature width");

  ModelBundle b;
  DetectorStack& st = b.detectors;
  st.features = {static_cast<std::size_t>(feat[0]), static_cast<std::size_t>(feat[1]),
                 static_cast<std::size_t>(feat[2])};
  if (st.features.embed_dim != input - hidden) {
    throw FormatError("checkpoint: embedding width does not match the classifier");
  }
  Rng scratch(0);
  try {
    st.encoder = LstmCellParams::zeros(kMetricCount, hidden);
    st.svm = SvmModel::zeros(kClassCount, input, sc[0]);
    st.ae = AeModel::init(input, sc[1], scratch, ae_wide, ae_narrow);
    st.vae = VaeModel::init(input, latent, scratch, vae_hidden);
    b.predictor = PredictorModel::zeros(hidden, st.features.embed_dim, head);
    b.predictor.decision_threshold = sc[2];
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }

  std::size_t used = 0;
  fill_model(m, st.encoder, "encoder.", used);
  fill_model(m, st.svm, "svm.", used);
  fill_model(m, st.ae, "ae.", used);
  fill_model(m, st.vae, "vae.", used);
  fill_model(m, b.predictor, "predictor.", used);

  try {
    b.q = QTable({qc[0], qc[1]}, get(m, "q.values"));
    const Tensor& lo = get_sized(m, "normalizer.min", kMetricCount);
    const Tensor& hi = get_sized(m, "normalizer.max", kMetricCount);
    Metrics mn{}, mx{};
    std::copy(lo.values().begin(), lo.values().end(), mn.begin());
    std::copy(hi.values().begin(), hi.values().end(), mx.begin());
    st.normalizer = Normalizer(mn, mx);
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  const Tensor& cal = get_sized(m, "calibration", 2);
  st.calibration = {cal[0], cal[1]};
  const Tensor& fu = get_sized(m, "fusion", 4);
  st.fusion = {fu[0], fu[1], fu[2], fu[3]};
  b.seed = join_u64(get(m, "meta.seed"));
  b.config_fingerprint = join_u64(get(m, "meta.fingerprint"));

  constexpr std::size_t kMetaTensors = 10;
  if (used + kMetaTensors != m.size()) throw FormatError("checkpoint: unexpected extra tensors");
  return b;
}

std::vector<std::uint8_t> encode_checkpoint(const ModelBundle& bundle) {
  return encode_tensors(bundle_tensors(bundle));
}

ModelBundle decode_checkpoint(std::span<const std::uint8_t> bytes) {
  return bundle_from_tensors(decode_tensors(bytes));
}

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(bundle);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw InputError("failed writing '" + path.string() + "'");
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open checkpoint '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                        std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

ModelBundle checkpoint_roundtrip(const ModelBundle& bundle, const std::filesystem::path& path) {
  save_checkpoint(bundle, path);
  return load_checkpoint(path);
}

bool bundles_bit_equal(const ModelBundle& a, const ModelBundle& b) {
  const NamedTensors ta = bundle_tensors(a);
  const NamedTensors tb = bundle_tensors(b);
  if (ta.size() != tb.size()) return false;
  for (auto ia = ta.begin(), ib = tb.begin(); ia != ta.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !bit_equal(ia->second, ib->second)) return false;
  }
  return true;
}

}  // namespace fdsh
