#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "md/camera.hpp"

namespace md {

/// Malformed file content. offset is the byte position where parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Unreadable or inconsistent checkpoint (bad magic, version, CRC).
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Grayscale PFM, little-endian, rows bottom to top. Invalid pixels are written as 0.
std::vector<std::uint8_t> encode_pfm(const DepthMap& depth);
/// Accepts either endianness. Pixels > 0 are marked valid.
DepthMap decode_pfm(const std::vector<std::uint8_t>& bytes);
void write_pfm(const DepthMap& depth, const std::filesystem::path& path);
DepthMap read_pfm(const std::filesystem::path& path);

/// Binary PPM (P6, maxval 255). Channel values are rounded to k/255.
std::vector<std::uint8_t> encode_ppm(const Image& image);
Image decode_ppm(const std::vector<std::uint8_t>& bytes);
void write_ppm(const Image& image, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

/// `manifest.tsv` plus one PPM and one PFM per frame, in list order.
void write_dataset(const std::vector<Frame>& frames, const std::filesystem::path& dir);
std::vector<Frame> read_dataset(const std::filesystem::path& dir);

enum class DType : std::uint32_t { f32 = 0, u64 = 1 };

struct CheckpointEntry {
  std::string name;
  DType dtype = DType::f32;
  std::vector<std::uint64_t> dims;
  std::vector<float> f32;
  std::vector<std::uint64_t> u64;
};

/// Named tensors in the MDC1 container. Entries keep insertion order on disk.
class Checkpoint {
 public:
  void put(const std::string& name, std::vector<std::uint64_t> dims, std::vector<float> values);
  void put_u64(const std::string& name, std::uint64_t value);

  bool has(const std::string& name) const;
  const CheckpointEntry& get(const std::string& name) const;
  std::uint64_t get_u64(const std::string& name) const;
  const std::vector<CheckpointEntry>& entries() const { return entries_; }

  std::vector<std::uint8_t> encode() const;
  static Checkpoint decode(const std::vector<std::uint8_t>& bytes);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::vector<CheckpointEntry> entries_;
  std::map<std::string, std::size_t> index_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace md
