#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "seesaw/tensor.hpp"

namespace seesaw {

// CIFAR-style image set: 32x32 RGB stored as plane-major bytes
// (R plane, G plane, B plane, each row-major), one record per image.
struct Dataset {
  int num_classes = 10;
  std::vector<std::uint8_t> pixels;  // count * 3072
  std::vector<std::uint8_t> labels;
  std::array<float, 3> mean{0.f, 0.f, 0.f};    // on the [0,1] scale
  std::array<float, 3> stddev{1.f, 1.f, 1.f};

  std::int64_t count() const { return std::int64_t(labels.size()); }
  const std::uint8_t* record(std::int64_t i) const { return pixels.data() + i * 3072; }
};

enum class CifarKind { Cifar10, Cifar100 };

constexpr int kCifarDim = 32;
constexpr int kCifarPixels = 3 * kCifarDim * kCifarDim;  // 3072

// Reads the standard binary layout from `dir`: data_batch_*.bin /
// test_batch.bin for CIFAR-10 (3073-byte records), train.bin / test.bin for
// CIFAR-100 (3074-byte records, fine label used). Computes per-channel
// normalization stats from the loaded data.
Dataset load_cifar(const std::string& dir, const std::string& split, CifarKind kind);

// Single-file reader, exposed for fixtures and tests.
void append_cifar_file(Dataset& out, const std::string& path, CifarKind kind);

void compute_normalization(Dataset& ds);

// First n records (the deterministic training subset).
Dataset subset(const Dataset& ds, std::int64_t n);

struct AugmentDraw {
  int dy = 4, dx = 4;  // crop offset into the 4-pixel zero padding; (4,4) = identity
  bool flip = false;
};

inline AugmentDraw draw_augment(std::mt19937_64& rng) {
  AugmentDraw d;
  d.dy = int(rng() % 9);
  d.dx = int(rng() % 9);
  d.flip = (rng() % 2) == 1;
  return d;
}

// Pad 4, crop 32x32 at (dy, dx), mirror horizontally if flip; then
// per-channel mean/std normalization. Writes 3 planes of 32x32 floats.
inline void load_image(const Dataset& ds, std::int64_t index, const AugmentDraw& draw, float* dst) {
  const std::uint8_t* src = ds.record(index);
  for (int c = 0; c < 3; ++c) {
    const std::uint8_t* plane = src + c * kCifarDim * kCifarDim;
    float* out = dst + c * kCifarDim * kCifarDim;
    const float m = ds.mean[c], inv = 1.0f / ds.stddev[c];
    for (int y = 0; y < kCifarDim; ++y) {
      const int sy = y + draw.dy - 4;
      for (int x = 0; x < kCifarDim; ++x) {
        // Crop first, then mirror the cropped image.
        const int cx = draw.flip ? (kCifarDim - 1 - x) : x;
        const int sx = cx + draw.dx - 4;
        float v = 0.f;
        if (sy >= 0 && sy < kCifarDim && sx >= 0 && sx < kCifarDim)
          v = float(plane[sy * kCifarDim + sx]) / 255.f;
        out[y * kCifarDim + x] = (v - m) * inv;
      }
    }
  }
}

struct Batch {
  Tensor<float> x{1, 1, 1, 1};
  std::vector<int> labels;
};

// Batch composition is a pure function of (indices, augment flag, rng_seed):
// augmentation draws come from one generator seeded per (run seed, epoch,
// step), consumed in sample order.
inline Batch make_batch(const Dataset& ds, std::span<const std::int64_t> indices, bool augment,
                        std::uint64_t rng_seed) {
  Batch batch;
  batch.x = Tensor<float>(Shape{int(indices.size()), 3, kCifarDim, kCifarDim});
  batch.labels.resize(indices.size());
  std::mt19937_64 rng(rng_seed);
  for (size_t i = 0; i < indices.size(); ++i) {
    const AugmentDraw draw = augment ? draw_augment(rng) : AugmentDraw{};
    load_image(ds, indices[i], draw, batch.x.data() + std::int64_t(i) * kCifarPixels);
    batch.labels[i] = ds.labels[indices[i]];
  }
  return batch;
}

}  // namespace seesaw
