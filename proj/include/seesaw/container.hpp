#pragma once

// Little-endian weight container: magic "SSWN", format version u32,
// spec hash u64, then per-parameter records
// (u32 name length, name bytes, u8 dtype, u8 rank, u32 dims, raw values).

#include <cstdint>
#include <string>
#include <vector>

namespace seesaw::container {

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint8_t kDtypeF64 = 1;

inline std::size_t dtype_size(std::uint8_t dtype) { return dtype == kDtypeF64 ? 8 : 4; }

struct Record {
  std::string name;
  std::uint8_t dtype = kDtypeF32;
  std::vector<std::uint32_t> dims;
  std::vector<char> bytes;

  std::int64_t element_count() const {
    std::int64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

struct File {
  std::uint32_t version = kFormatVersion;
  std::uint64_t spec_hash = 0;
  std::vector<Record> records;

  const Record* find(const std::string& name) const {
    for (const auto& r : records)
      if (r.name == name) return &r;
    return nullptr;
  }
};

void write_file(const std::string& path, std::uint64_t spec_hash, const std::vector<Record>& records);

// Throws on bad magic, unsupported version, or a truncated stream.
File read_file(const std::string& path);

}  // namespace seesaw::container
