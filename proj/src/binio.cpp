#include "posemo/binio.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "posemo/error.hpp"

namespace posemo {
namespace {

constexpr std::string_view kMagic = "PSMO";

}  // namespace

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::f64s(std::span<const double> values) {
  buf_.reserve(buf_.size() + 8 * values.size());
  for (double v : values) f64(v);
}

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.append(s);
}

void ByteReader::need(std::size_t n) const {
  if (data_.size() - pos_ < n) throw Error(ErrorCode::MalformedFile, "truncated binary data");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::vector<double> ByteReader::f64s(std::size_t count) {
  if (count > remaining() / 8) throw Error(ErrorCode::MalformedFile, "truncated real array");
  std::vector<double> out(count);
  for (auto& v : out) v = f64();
  return out;
}

std::string ByteReader::str() {
  const auto n = u32();
  need(n);
  std::string s(data_.substr(pos_, n));
  pos_ += n;
  return s;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_header(ByteWriter& out, const ArtifactHeader& header) {
  for (char c : kMagic) out.u8(static_cast<std::uint8_t>(c));
  out.str(header.type);
  out.u32(header.version);
  out.u64(header.config_hash);
  out.u64(header.seed);
}

ArtifactHeader read_header(ByteReader& in, std::string_view expected_type) {
  for (char c : kMagic) {
    if (in.u8() != static_cast<std::uint8_t>(c)) throw Error(ErrorCode::MalformedFile, "bad artifact magic");
  }
  ArtifactHeader h;
  h.type = in.str();
  if (h.type != expected_type) {
    throw Error(ErrorCode::MalformedFile,
                "expected artifact '" + std::string(expected_type) + "', found '" + h.type + "'");
  }
  h.version = in.u32();
  if (h.version != 1) throw Error(ErrorCode::MalformedFile, "unsupported artifact version");
  h.config_hash = in.u64();
  h.seed = in.u64();
  return h;
}

void require_config(const ArtifactHeader& header, std::uint64_t config_hash, std::string_view what) {
  if (header.config_hash != config_hash) {
    std::ostringstream msg;
    msg << what << " was produced with config " << std::hex << header.config_hash << ", current config is "
        << config_hash;
    throw Error(ErrorCode::ConfigMismatch, msg.str());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::IoError, "short write to " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot rename into " + path.string());
  }
}

}  // namespace posemo
