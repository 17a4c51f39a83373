#pragma once

// Section-tagged little-endian container used by every persisted model:
//   "CDFAG1" | u32 version | string kind | sections...
// A section is a 4-byte tag, a u64 payload length and the payload.

#include <cstdint>
#include <string>
#include <string_view>

#include "cdfag/types.hpp"

namespace cdfag::io {

inline constexpr std::string_view kMagic = "CDFAG1";
inline constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v);
  void f64(double v);
  void boolean(bool v) { u32(v ? 1 : 0); }
  void str(std::string_view s);
  void vector(const Vector& v);
  void matrix(const Matrix& m);  // rows, cols, row-major values
  void labels(const Labels& l);
  /// Appends `body` as a tagged section.
  void section(std::string_view tag, const Writer& body);

  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

/// Bounds-checked reader; every malformed read throws CorruptModel.
class Reader {
 public:
  explicit Reader(std::string_view bytes) : data_(bytes) {}

  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64();
  double f64();
  bool boolean();
  std::string str();
  Vector vector();
  Matrix matrix();
  Labels labels();
  /// Reads the next section, which must carry `tag`.
  Reader section(std::string_view tag);
  /// True when the next section carries `tag`.
  bool next_is(std::string_view tag) const;

  bool done() const { return pos_ == data_.size(); }
  void expect_done() const;

 private:
  std::string_view take(std::size_t n);

  std::string_view data_;
  std::size_t pos_ = 0;
};

/// Wraps `body` with the magic, version and kind header.
std::string encode_file(std::string_view kind, const Writer& body);
/// Validates the header (CorruptModel / VersionMismatch) and returns the
/// body reader. `kind` must match.
Reader decode_file(std::string_view bytes, std::string_view kind);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace cdfag::io
