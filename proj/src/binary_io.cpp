#include "stc/binary_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "stc/error.hpp"

namespace stc {
namespace {

class ByteWriter {
 public:
  void raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw Error("failed writing '" + path.string() + "'");
  }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::filesystem::path& path) : name_(path.filename().string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(name_, "missing or unreadable");
    bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  void expect_magic(const char (&magic)[5]) {
    need(4, "header");
    if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0) {
      throw LoadError(name_, std::string("bad magic bytes, expected \"") + magic + "\"");
    }
    pos_ += 4;
  }
  std::uint8_t u8() {
    need(1, "header");
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32(const char* what = "header") {
    need(4, what);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    }
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32("data")); }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw LoadError(name_, std::string("truncated ") + what);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void expect_end() const {
    if (pos_ != bytes_.size()) throw LoadError(name_, "unexpected trailing bytes");
  }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  ByteWriter w;
  w.raw("PVDM", 4);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (float x : m.data()) w.f32(x);
  w.save(path);
}

Matrix read_matrix(const std::filesystem::path& path) {
  ByteReader r(path);
  r.expect_magic("PVDM");
  const std::uint64_t rows = r.u32();
  const std::uint64_t cols = r.u32();
  r.need(rows * cols * 4, "data");
  std::vector<float> data(rows * cols);
  for (auto& x : data) x = r.f32();
  r.expect_end();
  return Matrix(rows, cols, std::move(data));
}

void write_ranker(const std::filesystem::path& path, const RankerParams& params) {
  params.validate();
  ByteWriter w;
  w.raw("RNKR", 4);
  w.u32(static_cast<std::uint32_t>(params.m));
  w.u32(static_cast<std::uint32_t>(params.d_q));
  w.u32(static_cast<std::uint32_t>(params.d_r));
  w.u8(static_cast<std::uint8_t>(params.activation));
  for (double x : params.W) w.f32(static_cast<float>(x));
  for (double x : params.b) w.f32(static_cast<float>(x));
  for (double x : params.s) w.f32(static_cast<float>(x));
  w.f32(static_cast<float>(params.c));
  w.save(path);
}

RankerParams read_ranker(const std::filesystem::path& path) {
  ByteReader r(path);
  r.expect_magic("RNKR");
  const std::size_t m = r.u32();
  const std::size_t d_q = r.u32();
  const std::size_t d_r = r.u32();
  const auto code = r.u8();
  if (code > 1) throw LoadError(r.name(), "unknown activation code " + std::to_string(code));
  if (m == 0 || d_q == 0 || d_r == 0) throw LoadError(r.name(), "zero dimension");
  const std::uint64_t count = static_cast<std::uint64_t>(m) * d_q * d_r + 2 * m + 1;
  r.need(count * 4, "data");
  auto params = RankerParams::zeros(m, d_q, d_r, static_cast<Activation>(code));
  for (auto& x : params.W) x = r.f32();
  for (auto& x : params.b) x = r.f32();
  for (auto& x : params.s) x = r.f32();
  params.c = r.f32();
  r.expect_end();
  try {
    params.validate();
  } catch (const Error& e) {
    throw LoadError(r.name(), e.what());
  }
  return params;
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.filename().string(), "missing or unreadable");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
      h *= 0x100000001b3ULL;
    }
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k) {
    out[static_cast<std::size_t>(k)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace stc
