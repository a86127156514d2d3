#include "a2dmrg/serialization.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "a2dmrg/errors.hpp"

namespace a2dmrg {
namespace {

constexpr std::array<char, 4> kMagic{'T', 'T', 'C', 'F'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindTT = 1;
constexpr std::uint32_t kKindMPO = 2;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot open '" + path + "' for writing");
  }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void finish(const std::string& path) {
    out_.flush();
    if (!out_) throw Error("write to '" + path + "' failed");
  }

 private:
  template <class U>
  void le(U v) {
    std::array<char, sizeof(U)> b{};
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(b.data(), b.size());
  }
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw Error("cannot open '" + path + "'");
  }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(le<std::uint64_t>()); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  void raw(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (!in_) throw ParseError("'" + path_ + "' is truncated");
  }
  std::uint64_t remaining() {
    const auto here = in_.tellg();
    in_.seekg(0, std::ios::end);
    const auto end = in_.tellg();
    in_.seekg(here);
    return static_cast<std::uint64_t>(end - here);
  }

 private:
  template <class U>
  U le() {
    std::array<unsigned char, sizeof(U)> b{};
    raw(reinterpret_cast<char*>(b.data()), b.size());
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }
  std::ifstream in_;
  std::string path_;
};

struct Header {
  std::uint32_t kind = 0;
  std::vector<std::uint64_t> dims;
  std::vector<std::uint64_t> ranks;
  std::int64_t tag = 0;
};

void write_header(Writer& w, const Header& h) {
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kVersion);
  w.u32(h.kind);
  w.u32(static_cast<std::uint32_t>(h.dims.size()));
  for (auto v : h.dims) w.u64(v);
  for (auto v : h.ranks) w.u64(v);
  w.i64(h.tag);
}

Header read_header(Reader& r, std::uint32_t expected_kind, const std::string& path) {
  std::array<char, 4> magic{};
  r.raw(magic.data(), magic.size());
  if (magic != kMagic) throw ParseError("'" + path + "' is not a tensor container");
  if (r.u32() != kVersion) throw ParseError("'" + path + "' has an unsupported version");
  Header h;
  h.kind = r.u32();
  if (h.kind != expected_kind) throw ParseError("'" + path + "' holds the wrong object kind");
  const std::uint32_t d = r.u32();
  if (d == 0 || d > 4096) throw ParseError("'" + path + "' has an invalid order");
  h.dims.resize(d);
  for (auto& v : h.dims) v = r.u64();
  h.ranks.resize(d + 1);
  for (auto& v : h.ranks) v = r.u64();
  h.tag = r.i64();
  if (h.ranks.front() != 1 || h.ranks.back() != 1) {
    throw ParseError("'" + path + "' has boundary ranks different from 1");
  }
  return h;
}

// Checks that the payload described by the header is exactly what is left in
// the file, before anything is allocated.
void check_payload(Reader& r, const Header& h, bool operator_cores, const std::string& path) {
  constexpr std::uint64_t limit = std::uint64_t{1} << 40;
  std::uint64_t entries = 0;
  for (std::size_t j = 0; j < h.dims.size(); ++j) {
    std::uint64_t n = 1;
    for (std::uint64_t f : {h.ranks[j], h.dims[j], operator_cores ? h.dims[j] : 1, h.ranks[j + 1]}) {
      if (f == 0 || f > limit / n) throw ParseError("'" + path + "' has invalid core dimensions");
      n *= f;
    }
    entries += n;
    if (entries > limit) throw ParseError("'" + path + "' has invalid core dimensions");
  }
  const std::uint64_t left = r.remaining();
  if (left < 8 * entries) throw ParseError("'" + path + "' is truncated");
  if (left > 8 * entries) throw ParseError("'" + path + "' has trailing bytes");
}

void write_values(Writer& w, const Tensor& t) {
  for (double v : t.values()) w.f64(v);
}

Tensor read_values(Reader& r, Shape shape) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = r.f64();
  return t;
}

}  // namespace

void save_tt(const TensorTrain& tt, const std::string& path) {
  Header h;
  h.kind = kKindTT;
  for (auto v : tt.dims()) h.dims.push_back(v);
  for (auto v : tt.ranks()) h.ranks.push_back(v);
  h.tag = tt.gauge().kind == Gauge::Kind::site ? static_cast<std::int64_t>(tt.gauge().center) + 1 : 0;
  Writer w(path);
  write_header(w, h);
  for (const auto& c : tt.cores()) write_values(w, c);
  w.finish(path);
}

TensorTrain load_tt(const std::string& path) {
  Reader r(path);
  Header h = read_header(r, kKindTT, path);
  check_payload(r, h, false, path);
  const std::size_t d = h.dims.size();
  std::vector<Tensor> cores;
  for (std::size_t j = 0; j < d; ++j) {
    cores.push_back(read_values(r, {h.ranks[j], h.dims[j], h.ranks[j + 1]}));
  }
  if (h.tag < 0 || h.tag > static_cast<std::int64_t>(d)) throw ParseError("'" + path + "' has an invalid gauge tag");
  const Gauge g = h.tag == 0 ? Gauge::none() : Gauge::site(static_cast<std::size_t>(h.tag - 1));
  return TensorTrain(std::move(cores), g);
}

void save_mpo(const MpOperator& op, const std::string& path) {
  Header h;
  h.kind = kKindMPO;
  for (auto v : op.dims()) h.dims.push_back(v);
  for (auto v : op.ranks()) h.ranks.push_back(v);
  h.tag = op.symmetric() ? 1 : 0;
  Writer w(path);
  write_header(w, h);
  for (const auto& c : op.cores()) write_values(w, c);
  w.finish(path);
}

MpOperator load_mpo(const std::string& path) {
  Reader r(path);
  Header h = read_header(r, kKindMPO, path);
  check_payload(r, h, true, path);
  std::vector<Tensor> cores;
  for (std::size_t j = 0; j < h.dims.size(); ++j) {
    cores.push_back(read_values(r, {h.ranks[j], h.dims[j], h.dims[j], h.ranks[j + 1]}));
  }
  if (h.tag != 0 && h.tag != 1) throw ParseError("'" + path + "' has an invalid symmetry flag");
  return MpOperator(std::move(cores), h.tag == 1);
}

}  // namespace a2dmrg
