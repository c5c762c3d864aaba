#pragma once

#include <cstring>
#include <set>

#include "seesaw/container.hpp"
#include "seesaw/model.hpp"

namespace seesaw {

template <typename S>
constexpr std::uint8_t dtype_of() {
  return sizeof(S) == 8 ? container::kDtypeF64 : container::kDtypeF32;
}

template <typename S>
container::Record record_from(const std::string& name, const S* data, std::vector<int> dims) {
  container::Record r;
  r.name = name;
  r.dtype = dtype_of<S>();
  for (int d : dims) r.dims.push_back(std::uint32_t(d));
  r.bytes.resize(std::size_t(r.element_count()) * sizeof(S));
  std::memcpy(r.bytes.data(), data, r.bytes.size());
  return r;
}

template <typename S>
void record_into(const container::Record& r, S* data, const std::vector<int>& dims,
                 const std::string& name) {
  if (r.dtype != dtype_of<S>())
    throw std::runtime_error("weights: dtype mismatch for " + name);
  if (int(r.dims.size()) != int(dims.size()))
    throw std::runtime_error("weights: shape mismatch for " + name);
  for (size_t i = 0; i < dims.size(); ++i)
    if (int(r.dims[i]) != dims[i]) throw std::runtime_error("weights: shape mismatch for " + name);
  std::memcpy(data, r.bytes.data(), r.bytes.size());
}

// Parameter and buffer records for a model, in graph order.
template <typename S>
std::vector<container::Record> model_records(Model<S>& model) {
  std::vector<container::Record> records;
  std::set<std::string> seen;
  for (const auto& p : model.graph.params()) {
    if (!seen.insert(p.name).second)
      throw std::logic_error("weights: duplicate parameter name " + p.name);
    records.push_back(record_from(p.name, p.value, p.dims));
  }
  return records;
}

template <typename S>
void save_weights(Model<S>& model, const std::string& path) {
  container::write_file(path, spec_hash(model.spec), model_records(model));
}

// Round-trip exactness: raw little-endian values, so a load restores
// bit-identical parameters.
template <typename S>
void load_weights(Model<S>& model, const std::string& path) {
  const container::File file = container::read_file(path);
  if (file.spec_hash != spec_hash(model.spec))
    throw std::runtime_error("weights: spec mismatch (file was saved for a different model spec)");
  for (auto& p : model.graph.params()) {
    const container::Record* r = file.find(p.name);
    if (!r) throw std::runtime_error("weights: missing record " + p.name);
    record_into(*r, p.value, p.dims, p.name);
  }
}

}  // namespace seesaw
