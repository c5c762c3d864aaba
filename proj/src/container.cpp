#include "seesaw/container.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace seesaw::container {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'W', 'N'};

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const char* what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error(std::string("weight container: truncated stream reading ") + what);
  return value;
}

}  // namespace

void write_file(const std::string& path, std::uint64_t spec_hash, const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("weight container: cannot open " + path + " for writing");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint64_t>(out, spec_hash);
  for (const auto& r : records) {
    if (std::int64_t(r.bytes.size()) != r.element_count() * std::int64_t(dtype_size(r.dtype)))
      throw std::runtime_error("weight container: record byte size mismatch for " + r.name);
    put<std::uint32_t>(out, std::uint32_t(r.name.size()));
    out.write(r.name.data(), std::streamsize(r.name.size()));
    put<std::uint8_t>(out, r.dtype);
    put<std::uint8_t>(out, std::uint8_t(r.dims.size()));
    for (auto d : r.dims) put<std::uint32_t>(out, d);
    out.write(r.bytes.data(), std::streamsize(r.bytes.size()));
  }
  if (!out) throw std::runtime_error("weight container: write failed for " + path);
}

File read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("weight container: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("weight container: bad magic in " + path);
  File file;
  file.version = take<std::uint32_t>(in, "version");
  if (file.version != kFormatVersion)
    throw std::runtime_error("weight container: unsupported format version " +
                             std::to_string(file.version));
  file.spec_hash = take<std::uint64_t>(in, "spec hash");

  while (true) {
    std::uint32_t name_len;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    if (in.eof()) break;
    if (!in) throw std::runtime_error("weight container: truncated stream reading record header");
    Record r;
    r.name.resize(name_len);
    in.read(r.name.data(), name_len);
    if (!in) throw std::runtime_error("weight container: truncated record name");
    r.dtype = take<std::uint8_t>(in, "dtype");
    if (r.dtype != kDtypeF32 && r.dtype != kDtypeF64)
      throw std::runtime_error("weight container: unknown dtype tag in record " + r.name);
    const auto rank = take<std::uint8_t>(in, "rank");
    r.dims.resize(rank);
    for (int i = 0; i < rank; ++i) r.dims[i] = take<std::uint32_t>(in, "dims");
    r.bytes.resize(std::size_t(r.element_count()) * dtype_size(r.dtype));
    in.read(r.bytes.data(), std::streamsize(r.bytes.size()));
    if (!in) throw std::runtime_error("weight container: truncated values in record " + r.name);
    file.records.push_back(std::move(r));
  }
  return file;
}

}  // namespace seesaw::container
