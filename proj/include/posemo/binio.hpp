#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace posemo {

// Little-endian byte buffer used by every binary artifact.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void f64s(std::span<const double> values);
  void str(std::string_view s);

  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::vector<double> f64s(std::size_t count);
  std::string str();

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::string_view data_;
  std::size_t pos_ = 0;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

// Common header carried by every artifact: magic, artifact type tag, format
// version, the config hash of the run that produced it, and its seed.
struct ArtifactHeader {
  std::string type;
  std::uint32_t version = 1;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

void write_header(ByteWriter& out, const ArtifactHeader& header);
ArtifactHeader read_header(ByteReader& in, std::string_view expected_type);

// Throws ConfigMismatch when the artifact was produced under another config.
void require_config(const ArtifactHeader& header, std::uint64_t config_hash, std::string_view what);

std::string read_file(const std::filesystem::path& path);
// Writes through a sibling temporary file and renames, so a failed write never
// leaves a truncated artifact behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace posemo
