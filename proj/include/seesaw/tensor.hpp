#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace seesaw {

template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using ArrX = Eigen::Array<S, Eigen::Dynamic, 1>;

// (batch, channels, rows, cols); data is row-major in (n, c, h, w) order,
// so each channel plane is contiguous and each sample is a contiguous
// block of `c` planes.
struct Shape {
  int n = 0, c = 0, h = 0, w = 0;

  std::int64_t count() const {
    return std::int64_t(n) * c * h * w;
  }
  std::int64_t hw() const { return std::int64_t(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

template <typename S>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(shape) {
    if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1)
      throw std::invalid_argument("Tensor: all dimensions must be >= 1, got " + shape.str());
    data_ = ArrX<S>::Zero(shape.count());
  }
  Tensor(int n, int c, int h, int w) : Tensor(Shape{n, c, h, w}) {}

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::int64_t size() const { return data_.size(); }
  std::int64_t hw() const { return shape_.hw(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  ArrX<S>& array() { return data_; }
  const ArrX<S>& array() const { return data_; }

  S& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  S at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

  std::int64_t index(int n, int c, int h, int w) const {
    return ((std::int64_t(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  // Sample n viewed as a (h*w) x c column-major matrix: column c is the
  // contiguous plane of channel c.
  Eigen::Map<MatX<S>> slab(int n) {
    return {data_.data() + std::int64_t(n) * shape_.c * hw(), hw(), shape_.c};
  }
  Eigen::Map<const MatX<S>> slab(int n) const {
    return {data_.data() + std::int64_t(n) * shape_.c * hw(), hw(), shape_.c};
  }

  S* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  const S* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

  bool all_finite() const { return data_.isFinite().all(); }

  static Tensor constant(Shape shape, S value) {
    Tensor t(shape);
    t.data_.setConstant(value);
    return t;
  }

  // Allocation without the zeroing pass, for outputs that are fully
  // overwritten by the caller.
  static Tensor uninitialized(Shape shape) {
    Tensor t;
    if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1)
      throw std::invalid_argument("Tensor: all dimensions must be >= 1, got " + shape.str());
    t.shape_ = shape;
    t.data_.resize(shape.count());
    return t;
  }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out(shape_);
    out.array() = data_.template cast<T>();
    return out;
  }

 private:
  Shape shape_;
  ArrX<S> data_;
};

// Ordered list of positive group sizes summing to the channel count of the
// tensor it partitions. Even grouping is the special case of equal sizes.
class ChannelPartition {
 public:
  ChannelPartition() = default;
  explicit ChannelPartition(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw std::invalid_argument("ChannelPartition: empty size list");
    offsets_.reserve(sizes_.size());
    int off = 0;
    for (int s : sizes_) {
      if (s < 1) throw std::invalid_argument("ChannelPartition: group sizes must be >= 1");
      offsets_.push_back(off);
      off += s;
    }
    total_ = off;
  }

  int groups() const { return int(sizes_.size()); }
  int size(int g) const { return sizes_[g]; }
  int offset(int g) const { return offsets_[g]; }
  int total() const { return total_; }
  const std::vector<int>& sizes() const { return sizes_; }

  bool even() const {
    for (int s : sizes_)
      if (s != sizes_[0]) return false;
    return true;
  }

  bool operator==(const ChannelPartition&) const = default;

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  int total_ = 0;
};

inline void check_shapes_equal(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
}

}  // namespace seesaw
