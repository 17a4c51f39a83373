#include "cdfag/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <limits>

#include "cdfag/error.hpp"

namespace cdfag::io {

void Writer::u32(std::uint32_t v) {
  for (int b = 0; b < 4; ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void Writer::u64(std::uint64_t v) {
  for (int b = 0; b < 8; ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void Writer::i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void Writer::str(std::string_view s) {
  u64(s.size());
  buf_.append(s);
}

void Writer::vector(const Vector& v) {
  u64(static_cast<std::uint64_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) f64(v(i));
}

void Writer::matrix(const Matrix& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
}

void Writer::labels(const Labels& l) {
  u64(l.size());
  for (int v : l) i64(v);
}

void Writer::section(std::string_view tag, const Writer& body) {
  if (tag.size() != 4) throw Error(ErrorCode::BadConfig, "section tags are 4 bytes");
  buf_.append(tag);
  u64(body.buf_.size());
  buf_.append(body.buf_);
}

std::string_view Reader::take(std::size_t n) {
  if (n > data_.size() - pos_) {
    throw Error(ErrorCode::CorruptModel, "truncated model data");
  }
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint32_t Reader::u32() {
  const auto s = take(4);
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[b])) << (8 * b);
  return v;
}

std::uint64_t Reader::u64() {
  const auto s = take(8);
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[b])) << (8 * b);
  return v;
}

std::int64_t Reader::i64() { return static_cast<std::int64_t>(u64()); }

double Reader::f64() { return std::bit_cast<double>(u64()); }

bool Reader::boolean() {
  const auto v = u32();
  if (v > 1) throw Error(ErrorCode::CorruptModel, "bad boolean");
  return v == 1;
}

std::string Reader::str() {
  const auto n = u64();
  if (n > data_.size() - pos_) throw Error(ErrorCode::CorruptModel, "string overruns data");
  return std::string(take(static_cast<std::size_t>(n)));
}

Vector Reader::vector() {
  const auto n = u64();
  if (n > (data_.size() - pos_) / 8) throw Error(ErrorCode::CorruptModel, "vector overruns data");
  Vector v(static_cast<Index>(n));
  for (Index i = 0; i < v.size(); ++i) v(i) = f64();
  return v;
}

Matrix Reader::matrix() {
  const auto rows = u64();
  const auto cols = u64();
  if (cols != 0 && rows > (data_.size() - pos_) / 8 / cols) {
    throw Error(ErrorCode::CorruptModel, "matrix overruns data");
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
  }
  return m;
}

Labels Reader::labels() {
  const auto n = u64();
  if (n > (data_.size() - pos_) / 8) throw Error(ErrorCode::CorruptModel, "labels overrun data");
  Labels l(static_cast<std::size_t>(n));
  for (auto& v : l) {
    const auto x = i64();
    if (x < kUnlabeled || x > std::numeric_limits<int>::max()) {
      throw Error(ErrorCode::CorruptModel, "label out of range");
    }
    v = static_cast<int>(x);
  }
  return l;
}

bool Reader::next_is(std::string_view tag) const {
  return data_.size() - pos_ >= 4 && data_.substr(pos_, 4) == tag;
}

Reader Reader::section(std::string_view tag) {
  const auto got = take(4);
  if (got != tag) {
    throw Error(ErrorCode::CorruptModel,
                "expected section '" + std::string(tag) + "', found '" + std::string(got) + "'");
  }
  const auto n = u64();
  if (n > data_.size() - pos_) throw Error(ErrorCode::CorruptModel, "truncated section");
  return Reader(take(static_cast<std::size_t>(n)));
}

void Reader::expect_done() const {
  if (!done()) throw Error(ErrorCode::CorruptModel, "trailing bytes in model data");
}

std::string encode_file(std::string_view kind, const Writer& body) {
  Writer head;
  head.u32(kFormatVersion);
  head.str(kind);
  std::string out(kMagic);
  out += head.bytes();
  out += body.bytes();
  return out;
}

Reader decode_file(std::string_view bytes, std::string_view kind) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw Error(ErrorCode::CorruptModel, "missing CDFAG1 magic");
  }
  Reader r(bytes.substr(kMagic.size()));
  const auto version = r.u32();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::VersionMismatch,
                "file version " + std::to_string(version) + ", expected " +
                    std::to_string(kFormatVersion));
  }
  const auto got = r.str();
  if (got != kind) {
    throw Error(ErrorCode::CorruptModel,
                "file holds a '" + got + "' model, expected '" + std::string(kind) + "'");
  }
  return r;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path);
}

}  // namespace cdfag::io
