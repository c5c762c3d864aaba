#include "seesaw/data.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace seesaw {

namespace {

std::int64_t record_size(CifarKind kind) { return kind == CifarKind::Cifar10 ? 3073 : 3074; }

}  // namespace

void append_cifar_file(Dataset& out, const std::string& path, CifarKind kind) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cifar: cannot open " + path);
  const std::int64_t size = in.tellg();
  const std::int64_t rec = record_size(kind);
  if (size == 0 || size % rec != 0)
    throw std::runtime_error("cifar: " + path + " size " + std::to_string(size) +
                             " is not a multiple of the record size " + std::to_string(rec));
  in.seekg(0);
  const std::int64_t n = size / rec;
  std::vector<char> record(rec);
  out.pixels.reserve(out.pixels.size() + n * kCifarPixels);
  out.labels.reserve(out.labels.size() + n);
  for (std::int64_t i = 0; i < n; ++i) {
    in.read(record.data(), rec);
    if (!in) throw std::runtime_error("cifar: truncated read in " + path);
    // CIFAR-100 records carry (coarse, fine) label bytes; the fine label is
    // the class. CIFAR-10 records carry a single label byte.
    const std::uint8_t label =
        std::uint8_t(kind == CifarKind::Cifar10 ? record[0] : record[1]);
    if (label >= out.num_classes)
      throw std::runtime_error("cifar: label " + std::to_string(int(label)) + " out of range in " + path);
    out.labels.push_back(label);
    const char* px = record.data() + (rec - kCifarPixels);
    out.pixels.insert(out.pixels.end(), px, px + kCifarPixels);
  }
}

Dataset load_cifar(const std::string& dir, const std::string& split, CifarKind kind) {
  namespace fs = std::filesystem;
  Dataset ds;
  ds.num_classes = kind == CifarKind::Cifar10 ? 10 : 100;

  std::vector<std::string> files;
  if (kind == CifarKind::Cifar10) {
    if (split == "train") {
      for (int i = 1; i <= 5; ++i) {
        const std::string p = dir + "/data_batch_" + std::to_string(i) + ".bin";
        if (fs::exists(p)) files.push_back(p);
      }
    } else {
      const std::string p = dir + "/test_batch.bin";
      if (fs::exists(p)) files.push_back(p);
    }
  } else {
    const std::string p = dir + "/" + (split == "train" ? "train.bin" : "test.bin");
    if (fs::exists(p)) files.push_back(p);
  }
  if (files.empty())
    throw std::runtime_error("cifar: no " + split + " batch files found under " + dir);
  for (const auto& f : files) append_cifar_file(ds, f, kind);
  compute_normalization(ds);
  return ds;
}

void compute_normalization(Dataset& ds) {
  if (ds.count() == 0) return;
  for (int c = 0; c < 3; ++c) {
    double sum = 0, sumsq = 0;
    const std::int64_t plane = std::int64_t(kCifarDim) * kCifarDim;
    for (std::int64_t i = 0; i < ds.count(); ++i) {
      const std::uint8_t* p = ds.record(i) + c * plane;
      for (std::int64_t j = 0; j < plane; ++j) {
        const double v = p[j] / 255.0;
        sum += v;
        sumsq += v * v;
      }
    }
    const double n = double(ds.count()) * plane;
    const double mean = sum / n;
    const double var = std::max(0.0, sumsq / n - mean * mean);
    ds.mean[c] = float(mean);
    ds.stddev[c] = float(std::max(1e-6, std::sqrt(var)));
  }
}

Dataset subset(const Dataset& ds, std::int64_t n) {
  if (n <= 0 || n >= ds.count()) return ds;
  Dataset out = ds;
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + n);
  out.pixels.assign(ds.pixels.begin(), ds.pixels.begin() + n * kCifarPixels);
  compute_normalization(out);
  return out;
}

}  // namespace seesaw
