#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "seesaw/tensor.hpp"
#include "seesaw/threading.hpp"

namespace seesaw {

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

namespace detail {

template <typename S>
void check_grouped_args(const Shape& xs, const std::vector<MatX<S>>& weights,
                        const std::vector<std::vector<int>>& in_idx, const ChannelPartition& pout) {
  if (int(in_idx.size()) != pout.groups())
    throw std::invalid_argument("grouped conv: partition length mismatch (" +
                                std::to_string(in_idx.size()) + " input groups vs " +
                                std::to_string(pout.groups()) + " output groups)");
  if (int(weights.size()) != pout.groups())
    throw std::invalid_argument("grouped conv: one kernel per group required");
  for (int g = 0; g < pout.groups(); ++g) {
    for (int ch : in_idx[g])
      if (ch < 0 || ch >= xs.c)
        throw std::invalid_argument("grouped conv: input channel index out of range");
    if (weights[g].rows() != pout.size(g) || weights[g].cols() != Eigen::Index(in_idx[g].size()))
      throw std::invalid_argument("grouped conv: kernel shape mismatch in group " + std::to_string(g) +
                                  " (want " + std::to_string(pout.size(g)) + "x" +
                                  std::to_string(in_idx[g].size()) + ")");
  }
}

inline std::vector<std::vector<int>> contiguous_indices(const ChannelPartition& pin) {
  std::vector<std::vector<int>> idx(pin.groups());
  for (int g = 0; g < pin.groups(); ++g) {
    idx[g].resize(pin.size(g));
    std::iota(idx[g].begin(), idx[g].end(), pin.offset(g));
  }
  return idx;
}

inline bool is_contiguous_run(const std::vector<int>& idx) {
  for (size_t i = 1; i < idx.size(); ++i)
    if (idx[i] != idx[i - 1] + 1) return false;
  return !idx.empty();
}

}  // namespace detail

namespace detail {

// Group-g input channels of every sample, stacked into one (n*hw x k)
// matrix: column j holds channel in_idx[j]'s planes for all samples. The
// copies are plane-sized memcpys and let one large GEMM cover the batch.
template <typename S>
void gather_group(const Tensor<S>& x, const std::vector<int>& in_idx, MatX<S>& out) {
  const std::int64_t hw = x.hw();
  out.resize(hw * x.n(), Eigen::Index(in_idx.size()));
  parallel_for(std::int64_t(in_idx.size()), [&](std::int64_t jb, std::int64_t je) {
    for (std::int64_t j = jb; j < je; ++j) {
      S* col = out.col(Eigen::Index(j)).data();
      for (int n = 0; n < x.n(); ++n)
        std::memcpy(col + n * hw, x.plane(n, in_idx[j]), hw * sizeof(S));
    }
  });
}

// GEMM out = lhs * rhs^T with deterministic row-chunk parallelism.
template <typename S>
void gemm_rows(const MatX<S>& lhs, const MatX<S>& rhs_t, MatX<S>& out) {
  out.resize(lhs.rows(), rhs_t.rows());
  parallel_for(lhs.rows(), [&](std::int64_t rb, std::int64_t re) {
    out.middleRows(rb, re - rb).noalias() = lhs.middleRows(rb, re - rb) * rhs_t.transpose();
  });
}

}  // namespace detail

// 1x1 group convolution with arbitrary per-group input channel sets (used
// directly by the channel-share variant, where group input sets overlap).
// weights[g]: (pout.size(g) x in_idx[g].size()). No bias: batch norm owns it.
template <typename S>
Tensor<S> conv1x1_grouped_forward_indexed(const Tensor<S>& x, const std::vector<MatX<S>>& weights,
                                          const std::vector<std::vector<int>>& in_idx,
                                          const ChannelPartition& pout) {
  detail::check_grouped_args<S>(x.shape(), weights, in_idx, pout);
  Tensor<S> y = Tensor<S>::uninitialized(Shape{x.n(), pout.total(), x.h(), x.w()});
  const std::int64_t hw = x.hw();
  MatX<S> gathered, product;
  for (int g = 0; g < pout.groups(); ++g) {
    detail::gather_group(x, in_idx[g], gathered);
    detail::gemm_rows(gathered, weights[g], product);
    parallel_for(pout.size(g), [&](std::int64_t jb, std::int64_t je) {
      for (std::int64_t j = jb; j < je; ++j) {
        const S* col = product.col(Eigen::Index(j)).data();
        for (int n = 0; n < x.n(); ++n)
          std::memcpy(y.plane(n, pout.offset(g) + int(j)), col + n * hw, hw * sizeof(S));
      }
    });
  }
  return y;
}

// Uneven pointwise group convolution: group g maps input channels of
// pin group g onto output channels of pout group g, contiguously.
template <typename S>
Tensor<S> conv1x1_grouped_forward(const Tensor<S>& x, const std::vector<MatX<S>>& weights,
                                  const ChannelPartition& pin, const ChannelPartition& pout) {
  if (pin.groups() != pout.groups())
    throw std::invalid_argument("grouped conv: partition length mismatch");
  if (pin.total() != x.c())
    throw std::invalid_argument("grouped conv: input partition sums to " + std::to_string(pin.total()) +
                                " but tensor has " + std::to_string(x.c()) + " channels");
  return conv1x1_grouped_forward_indexed(x, weights, detail::contiguous_indices(pin), pout);
}

// Depthwise 3x3, padding fixed at 1, stride 1 or 2. weights: (c x 9),
// row-major taps (ky*3+kx). Activation excluded.
template <typename S>
Tensor<S> depthwise_conv3x3_forward(const Tensor<S>& x, const MatX<S>& weights, int stride) {
  if (stride != 1 && stride != 2) throw std::invalid_argument("depthwise conv: stride must be 1 or 2");
  if (weights.rows() != x.c() || weights.cols() != 9)
    throw std::invalid_argument("depthwise conv: weight shape mismatch (want " + std::to_string(x.c()) + "x9)");
  const int h = x.h(), w = x.w();
  const int ho = conv_out_dim(h, 3, stride, 1), wo = conv_out_dim(w, 3, stride, 1);
  Tensor<S> y = Tensor<S>::uninitialized(Shape{x.n(), x.c(), ho, wo});
  parallel_for(std::int64_t(x.n()) * x.c(), [&](std::int64_t b, std::int64_t e) {
    VecX<S> acc(wo);
    for (std::int64_t i = b; i < e; ++i) {
      const int n = int(i / x.c()), c = int(i % x.c());
      const S* in = x.plane(n, c);
      S* out = y.plane(n, c);
      const S* wk = weights.data() + c;  // column-major: tap k at wk[k * rows]
      const Eigen::Index wstride = weights.rows();
      // One output row at a time, accumulating all taps in a row buffer.
      for (int oy = 0; oy < ho; ++oy) {
        acc.setZero();
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * stride - 1 + ky;
          if (iy < 0 || iy >= h) continue;
          const S* row = in + std::int64_t(iy) * w;
          for (int kx = 0; kx < 3; ++kx) {
            const S weight = wk[(ky * 3 + kx) * wstride];
            const int dx = kx - 1;
            if (stride == 1) {
              const int ox0 = std::max(0, -dx), ox1 = std::min(w, w - dx);
              if (ox1 <= ox0) continue;
              acc.segment(ox0, ox1 - ox0) +=
                  weight * Eigen::Map<const VecX<S>>(row + ox0 + dx, ox1 - ox0);
            } else {
              for (int ox = 0; ox < wo; ++ox) {
                const int ix = ox * 2 + dx;
                if (ix >= 0 && ix < w) acc[ox] += weight * row[ix];
              }
            }
          }
        }
        Eigen::Map<VecX<S>>(out + std::int64_t(oy) * wo, wo) = acc;
      }
    }
  });
  return y;
}

namespace detail {

// (h_out*w_out) x (cin*kh*kw) patch matrix for one sample, zero padded.
template <typename S>
void im2col(const Tensor<S>& x, int n, int kh, int kw, int stride, int pad, MatX<S>& cols) {
  const int h = x.h(), w = x.w();
  const int ho = conv_out_dim(h, kh, stride, pad), wo = conv_out_dim(w, kw, stride, pad);
  cols.resize(std::int64_t(ho) * wo, std::int64_t(x.c()) * kh * kw);
  for (int c = 0; c < x.c(); ++c) {
    const S* plane = x.plane(n, c);
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        S* col = cols.col((std::int64_t(c) * kh + ky) * kw + kx).data();
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          S* dst = col + std::int64_t(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, S(0));
            continue;
          }
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < w) ? plane[std::int64_t(iy) * w + ix] : S(0);
          }
        }
      }
    }
  }
}

}  // namespace detail

// Dense cross-correlation with zero padding. weights: (cout x cin*kh*kw),
// row o laid out (c, ky, kx). Optional per-output-channel bias.
template <typename S>
Tensor<S> conv2d_dense_forward(const Tensor<S>& x, const MatX<S>& weights, int cin, int kh, int kw,
                               int stride, int pad, const VecX<S>* bias = nullptr) {
  if (cin != x.c()) throw std::invalid_argument("dense conv: input channel mismatch");
  if (weights.cols() != std::int64_t(cin) * kh * kw)
    throw std::invalid_argument("dense conv: weight shape mismatch");
  if (kh > x.h() + 2 * pad || kw > x.w() + 2 * pad)
    throw std::invalid_argument("dense conv: kernel larger than padded input");
  const int cout = int(weights.rows());
  const int ho = conv_out_dim(x.h(), kh, stride, pad), wo = conv_out_dim(x.w(), kw, stride, pad);
  Tensor<S> y = Tensor<S>::uninitialized(Shape{x.n(), cout, ho, wo});
  const bool pointwise = (kh == 1 && kw == 1 && stride == 1 && pad == 0);
  parallel_for(x.n(), [&](std::int64_t nb, std::int64_t ne) {
    MatX<S> cols;
    for (std::int64_t n = nb; n < ne; ++n) {
      auto ys = y.slab(int(n));
      if (pointwise) {
        ys.noalias() = x.slab(int(n)) * weights.transpose();
      } else {
        detail::im2col(x, int(n), kh, kw, stride, pad, cols);
        ys.noalias() = cols * weights.transpose();
      }
      if (bias) ys.rowwise() += bias->transpose();
    }
  });
  return y;
}

template <typename S>
Tensor<S> relu6(const Tensor<S>& x) {
  Tensor<S> y = Tensor<S>::uninitialized(x.shape());
  y.array() = x.array().max(S(0)).min(S(6));
  return y;
}

enum class Mode { Train, Infer };

template <typename S>
struct BatchNormCache {
  Tensor<S> xhat;
  VecX<S> invstd;
};

// Per-channel batch normalization over (n, h, w). Train mode uses batch
// statistics (biased variance) and updates the running stats in place with
// momentum on the old value; infer mode uses the running stats.
template <typename S>
Tensor<S> batchnorm_forward(const Tensor<S>& x, const VecX<S>& gamma, const VecX<S>& beta,
                            VecX<S>& running_mean, VecX<S>& running_var, Mode mode,
                            S eps = S(1e-5), S momentum = S(0.9),
                            BatchNormCache<S>* cache = nullptr) {
  const int C = x.c();
  if (gamma.size() != C || beta.size() != C || running_mean.size() != C || running_var.size() != C)
    throw std::invalid_argument("batchnorm: per-channel parameter size mismatch");
  if (mode == Mode::Train && x.n() < 1) throw std::invalid_argument("batchnorm: zero-size batch");
  Tensor<S> y = Tensor<S>::uninitialized(x.shape());
  const std::int64_t hw = x.hw();
  const S count = S(std::int64_t(x.n()) * hw);

  VecX<S> mean(C), invstd(C);
  if (mode == Mode::Train) {
    parallel_for(C, [&](std::int64_t cb, std::int64_t ce) {
      for (std::int64_t c = cb; c < ce; ++c) {
        // Single fused pass; four independent accumulators keep the
        // (order-fixed) reduction from being latency bound.
        S s0 = 0, s1 = 0, s2 = 0, s3 = 0, q0 = 0, q1 = 0, q2 = 0, q3 = 0;
        for (int n = 0; n < x.n(); ++n) {
          const S* p = x.plane(n, int(c));
          std::int64_t j = 0;
          for (; j + 4 <= hw; j += 4) {
            s0 += p[j];     q0 += p[j] * p[j];
            s1 += p[j + 1]; q1 += p[j + 1] * p[j + 1];
            s2 += p[j + 2]; q2 += p[j + 2] * p[j + 2];
            s3 += p[j + 3]; q3 += p[j + 3] * p[j + 3];
          }
          for (; j < hw; ++j) {
            s0 += p[j];
            q0 += p[j] * p[j];
          }
        }
        const S sum = (s0 + s1) + (s2 + s3);
        const S sumsq = (q0 + q1) + (q2 + q3);
        const S m = sum / count;
        const S var = std::max(S(0), sumsq / count - m * m);
        mean[c] = m;
        invstd[c] = S(1) / std::sqrt(var + eps);
        running_mean[c] = momentum * running_mean[c] + (S(1) - momentum) * m;
        running_var[c] = momentum * running_var[c] + (S(1) - momentum) * var;
      }
    });
  } else {
    mean = running_mean;
    invstd = (running_var.array() + eps).rsqrt();
  }

  if (cache) {
    cache->xhat = Tensor<S>::uninitialized(x.shape());
    cache->invstd = invstd;
  }
  parallel_for(std::int64_t(x.n()) * C, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      const int n = int(i / C), c = int(i % C);
      const S* in = x.plane(n, c);
      S* out = y.plane(n, c);
      const S m = mean[c], inv = invstd[c];
      if (cache) {
        S* xh = cache->xhat.plane(n, c);
        const S a = gamma[c] * inv, shift = beta[c] - m * a;
        for (std::int64_t j = 0; j < hw; ++j) {
          xh[j] = (in[j] - m) * inv;
          out[j] = a * in[j] + shift;
        }
      } else {
        const S a = gamma[c] * inv, shift = beta[c] - m * a;
        for (std::int64_t j = 0; j < hw; ++j) out[j] = a * in[j] + shift;
      }
    }
  });
  return y;
}

// Spatial mean per channel -> (n, c, 1, 1).
template <typename S>
Tensor<S> global_avgpool(const Tensor<S>& x) {
  Tensor<S> y = Tensor<S>::uninitialized(Shape{x.n(), x.c(), 1, 1});
  for (int n = 0; n < x.n(); ++n) y.slab(n) = x.slab(n).colwise().mean();
  return y;
}

inline void check_permutation(const std::vector<int>& perm, int c) {
  if (int(perm.size()) != c) throw std::invalid_argument("permute: size mismatch");
  std::vector<bool> seen(c, false);
  for (int p : perm) {
    if (p < 0 || p >= c || seen[p]) throw std::invalid_argument("permute: not a bijection on [0, c)");
    seen[p] = true;
  }
}

inline std::vector<int> invert_permutation(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (int i = 0; i < int(perm.size()); ++i) inv[perm[i]] = i;
  return inv;
}

// Output channel i is input channel perm[i]; pure data movement.
template <typename S>
Tensor<S> channel_permute(const Tensor<S>& x, const std::vector<int>& perm) {
  check_permutation(perm, x.c());
  Tensor<S> y = Tensor<S>::uninitialized(x.shape());
  const std::int64_t bytes = x.hw() * sizeof(S);
  for (int n = 0; n < x.n(); ++n)
    for (int i = 0; i < x.c(); ++i) std::memcpy(y.plane(n, i), x.plane(n, perm[i]), bytes);
  return y;
}

template <typename S>
Tensor<S> residual_add(const Tensor<S>& x, const Tensor<S>& fx) {
  check_shapes_equal(x.shape(), fx.shape(), "residual_add");
  Tensor<S> y = Tensor<S>::uninitialized(x.shape());
  y.array() = x.array() + fx.array();
  return y;
}

}  // namespace seesaw
