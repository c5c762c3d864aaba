#pragma once

#include <vector>

#include "seesaw/kernels.hpp"

namespace seesaw {

// Gradient bundles mirror each op's forward inputs/parameters exactly.

template <typename S>
struct GroupedConvGrads {
  Tensor<S> input;
  std::vector<MatX<S>> weights;
};

template <typename S>
struct DepthwiseConvGrads {
  Tensor<S> input;
  MatX<S> weights;
};

template <typename S>
struct DenseConvGrads {
  Tensor<S> input;
  MatX<S> weights;
  VecX<S> bias;
};

template <typename S>
struct BatchNormGrads {
  Tensor<S> input;
  VecX<S> gamma;
  VecX<S> beta;
};

namespace detail {

// Deterministic parallel row-chunked accumulation of gw = sum_n gy_n^T x_n:
// each worker owns a fixed row range and sums over samples in order.
template <typename S, typename PerSampleLhs, typename PerSampleRhs>
void accumulate_weight_grad(MatX<S>& gw, int samples, const PerSampleLhs& lhs, const PerSampleRhs& rhs) {
  parallel_for(gw.rows(), [&](std::int64_t rb, std::int64_t re) {
    for (int n = 0; n < samples; ++n)
      gw.middleRows(rb, re - rb).noalias() += lhs(n).middleCols(rb, re - rb).transpose() * rhs(n);
  });
}

}  // namespace detail

template <typename S>
GroupedConvGrads<S> conv1x1_grouped_backward_indexed(const Tensor<S>& x,
                                                     const std::vector<MatX<S>>& weights,
                                                     const std::vector<std::vector<int>>& in_idx,
                                                     const ChannelPartition& pout,
                                                     const Tensor<S>& gy) {
  detail::check_grouped_args<S>(x.shape(), weights, in_idx, pout);
  if (gy.c() != pout.total() || gy.n() != x.n() || gy.h() != x.h() || gy.w() != x.w())
    throw std::invalid_argument("grouped conv backward: upstream gradient shape mismatch");
  GroupedConvGrads<S> g;
  g.input = Tensor<S>(x.shape());  // zeroed: share groups accumulate overlaps
  g.weights.resize(weights.size());
  const std::int64_t hw = x.hw();

  MatX<S> gathered_x, gathered_gy, dX;
  for (int grp = 0; grp < pout.groups(); ++grp) {
    std::vector<int> out_channels(pout.size(grp));
    std::iota(out_channels.begin(), out_channels.end(), pout.offset(grp));
    detail::gather_group(gy, out_channels, gathered_gy);

    // dW = dY^T X, split over output-channel chunks.
    detail::gather_group(x, in_idx[grp], gathered_x);
    MatX<S>& gw = g.weights[grp];
    gw.resize(weights[grp].rows(), weights[grp].cols());
    parallel_for(gw.rows(), [&](std::int64_t rb, std::int64_t re) {
      gw.middleRows(rb, re - rb).noalias() =
          gathered_gy.middleCols(rb, re - rb).transpose() * gathered_x;
    });

    // dX = dY W, scattered (added) back onto the group's input channels.
    // Groups may share input channels, so the scatter parallelizes over
    // samples (disjoint writes) rather than channels.
    detail::gemm_rows(gathered_gy, MatX<S>(weights[grp].transpose()), dX);
    parallel_for(x.n(), [&](std::int64_t nb, std::int64_t ne) {
      for (std::int64_t n = nb; n < ne; ++n)
        for (size_t j = 0; j < in_idx[grp].size(); ++j) {
          Eigen::Map<VecX<S>> plane(g.input.plane(int(n), in_idx[grp][j]), hw);
          plane += Eigen::Map<const VecX<S>>(dX.col(Eigen::Index(j)).data() + n * hw, hw);
        }
    });
  }
  return g;
}

template <typename S>
GroupedConvGrads<S> conv1x1_grouped_backward(const Tensor<S>& x, const std::vector<MatX<S>>& weights,
                                             const ChannelPartition& pin, const ChannelPartition& pout,
                                             const Tensor<S>& gy) {
  return conv1x1_grouped_backward_indexed(x, weights, detail::contiguous_indices(pin), pout, gy);
}

template <typename S>
DepthwiseConvGrads<S> depthwise_conv3x3_backward(const Tensor<S>& x, const MatX<S>& weights,
                                                 int stride, const Tensor<S>& gy) {
  if (stride != 1 && stride != 2) throw std::invalid_argument("depthwise conv: stride must be 1 or 2");
  const int h = x.h(), w = x.w();
  const int ho = conv_out_dim(h, 3, stride, 1), wo = conv_out_dim(w, 3, stride, 1);
  if (gy.n() != x.n() || gy.c() != x.c() || gy.h() != ho || gy.w() != wo)
    throw std::invalid_argument("depthwise conv backward: upstream gradient shape mismatch");
  DepthwiseConvGrads<S> g;
  g.input = Tensor<S>::uninitialized(x.shape());
  g.weights = MatX<S>::Zero(x.c(), 9);

  // One pass per (n, c) plane computes both the input gradient (row
  // accumulator) and this plane's weight-gradient contribution; planes of a
  // channel are summed in sample order by the channel-partitioned loop.
  parallel_for(x.c(), [&](std::int64_t cb, std::int64_t ce) {
    VecX<S> acc;
    for (std::int64_t c = cb; c < ce; ++c) {
      S wgrad[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
      for (int n = 0; n < x.n(); ++n) {
        const S* in = x.plane(n, int(c));
        const S* gout = gy.plane(n, int(c));
        S* gin = g.input.plane(n, int(c));
        if (stride == 1) {
          acc.resize(w);
          for (int iy = 0; iy < h; ++iy) {
            acc.setZero();
            for (int ky = 0; ky < 3; ++ky) {
              const int oy = iy - ky + 1;
              if (oy < 0 || oy >= ho) continue;
              const S* grow = gout + std::int64_t(oy) * wo;
              for (int kx = 0; kx < 3; ++kx) {
                const S wk = weights(c, ky * 3 + kx);
                const int ix0 = std::max(0, kx - 1), ix1 = std::min(w, w + kx - 1);
                if (ix1 <= ix0) continue;
                acc.segment(ix0, ix1 - ix0) +=
                    wk * Eigen::Map<const VecX<S>>(grow + ix0 - kx + 1, ix1 - ix0);
              }
            }
            Eigen::Map<VecX<S>>(gin + std::int64_t(iy) * w, w) = acc;
          }
          for (int oy = 0; oy < ho; ++oy) {
            Eigen::Map<const VecX<S>> grow(gout + std::int64_t(oy) * wo, wo);
            for (int ky = 0; ky < 3; ++ky) {
              const int iy = oy + ky - 1;
              if (iy < 0 || iy >= h) continue;
              const S* irow = in + std::int64_t(iy) * w;
              for (int kx = 0; kx < 3; ++kx) {
                const int dx = kx - 1;
                const int ox0 = std::max(0, -dx), ox1 = std::min(w, w - dx);
                if (ox1 <= ox0) continue;
                wgrad[ky * 3 + kx] += grow.segment(ox0, ox1 - ox0)
                                          .dot(Eigen::Map<const VecX<S>>(irow + ox0 + dx, ox1 - ox0));
              }
            }
          }
        } else {
          Eigen::Map<VecX<S>>(gin, std::int64_t(h) * w).setZero();
          for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
              const S go = gout[std::int64_t(oy) * wo + ox];
              const int iy0 = oy * stride - 1, ix0 = ox * stride - 1;
              for (int k = 0; k < 9; ++k) {
                const int iy = iy0 + k / 3, ix = ix0 + k % 3;
                if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
                  gin[std::int64_t(iy) * w + ix] += weights(c, k) * go;
                  wgrad[k] += in[std::int64_t(iy) * w + ix] * go;
                }
              }
            }
        }
      }
      for (int k = 0; k < 9; ++k) g.weights(c, k) = wgrad[k];
    }
  });
  return g;
}

namespace detail {

template <typename S>
void col2im_add(const MatX<S>& cols, Tensor<S>& gx, int n, int kh, int kw, int stride, int pad) {
  const int h = gx.h(), w = gx.w();
  const int ho = conv_out_dim(h, kh, stride, pad), wo = conv_out_dim(w, kw, stride, pad);
  for (int c = 0; c < gx.c(); ++c) {
    S* plane = gx.plane(n, c);
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        const S* col = cols.col((std::int64_t(c) * kh + ky) * kw + kx).data();
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          const S* src = col + std::int64_t(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) plane[std::int64_t(iy) * w + ix] += src[ox];
          }
        }
      }
  }
}

}  // namespace detail

template <typename S>
DenseConvGrads<S> conv2d_dense_backward(const Tensor<S>& x, const MatX<S>& weights, int cin, int kh,
                                        int kw, int stride, int pad, bool has_bias,
                                        const Tensor<S>& gy) {
  const int cout = int(weights.rows());
  const int ho = conv_out_dim(x.h(), kh, stride, pad), wo = conv_out_dim(x.w(), kw, stride, pad);
  if (gy.n() != x.n() || gy.c() != cout || gy.h() != ho || gy.w() != wo)
    throw std::invalid_argument("dense conv backward: upstream gradient shape mismatch");
  DenseConvGrads<S> g;
  g.input = Tensor<S>(x.shape());
  g.weights = MatX<S>::Zero(weights.rows(), weights.cols());
  if (has_bias) g.bias = VecX<S>::Zero(cout);
  const bool pointwise = (kh == 1 && kw == 1 && stride == 1 && pad == 0);

  parallel_for(x.n(), [&](std::int64_t nb, std::int64_t ne) {
    MatX<S> dcols;
    for (std::int64_t n = nb; n < ne; ++n) {
      auto gys = gy.slab(int(n));
      if (pointwise) {
        g.input.slab(int(n)).noalias() = gys * weights;
      } else {
        dcols.noalias() = gys * weights;
        detail::col2im_add(dcols, g.input, int(n), kh, kw, stride, pad);
      }
    }
  });

  if (pointwise) {
    detail::accumulate_weight_grad(
        g.weights, x.n(), [&](int n) { return gy.slab(n); }, [&](int n) { return x.slab(n); });
  } else {
    MatX<S> cols;
    for (int n = 0; n < x.n(); ++n) {
      detail::im2col(x, n, kh, kw, stride, pad, cols);
      g.weights.noalias() += gy.slab(n).transpose() * cols;
    }
  }
  if (has_bias)
    for (int n = 0; n < x.n(); ++n) g.bias += gy.slab(n).colwise().sum().transpose();
  return g;
}

// Subgradient at the kinks (x == 0, x == 6) is 0.
template <typename S>
Tensor<S> relu6_backward(const Tensor<S>& x, const Tensor<S>& gy) {
  check_shapes_equal(x.shape(), gy.shape(), "relu6 backward");
  Tensor<S> gx = Tensor<S>::uninitialized(x.shape());
  gx.array() = ((x.array() > S(0)) && (x.array() < S(6))).select(gy.array(), S(0));
  return gx;
}

// Full batch-statistics derivative (mean and variance terms included).
template <typename S>
BatchNormGrads<S> batchnorm_backward(const BatchNormCache<S>& cache, const VecX<S>& gamma,
                                     const Tensor<S>& gy) {
  const Tensor<S>& xhat = cache.xhat;
  check_shapes_equal(xhat.shape(), gy.shape(), "batchnorm backward");
  const int C = xhat.c();
  const std::int64_t hw = xhat.hw();
  const S count = S(std::int64_t(xhat.n()) * hw);
  BatchNormGrads<S> g;
  g.input = Tensor<S>::uninitialized(xhat.shape());
  g.gamma = VecX<S>::Zero(C);
  g.beta = VecX<S>::Zero(C);

  parallel_for(C, [&](std::int64_t cb, std::int64_t ce) {
    for (std::int64_t c = cb; c < ce; ++c) {
      S sg = 0, sgx = 0;
      for (int n = 0; n < xhat.n(); ++n) {
        Eigen::Map<const VecX<S>> go(gy.plane(n, int(c)), hw);
        Eigen::Map<const VecX<S>> xh(xhat.plane(n, int(c)), hw);
        sg += go.sum();
        sgx += go.dot(xh);
      }
      g.gamma[c] = sgx;
      g.beta[c] = sg;
      const S scale = gamma[c] * cache.invstd[c] / count;
      for (int n = 0; n < xhat.n(); ++n) {
        Eigen::Map<const VecX<S>> go(gy.plane(n, int(c)), hw);
        Eigen::Map<const VecX<S>> xh(xhat.plane(n, int(c)), hw);
        Eigen::Map<VecX<S>> gi(g.input.plane(n, int(c)), hw);
        gi = scale * (count * go.array() - sg - xh.array() * sgx).matrix();
      }
    }
  });
  return g;
}

template <typename S>
Tensor<S> global_avgpool_backward(const Shape& in_shape, const Tensor<S>& gy) {
  if (gy.h() != 1 || gy.w() != 1 || gy.n() != in_shape.n || gy.c() != in_shape.c)
    throw std::invalid_argument("avgpool backward: upstream gradient shape mismatch");
  Tensor<S> gx = Tensor<S>::uninitialized(in_shape);
  const S inv = S(1) / S(in_shape.hw());
  for (int n = 0; n < in_shape.n; ++n)
    for (int c = 0; c < in_shape.c; ++c)
      Eigen::Map<VecX<S>>(gx.plane(n, c), in_shape.hw()).setConstant(gy.at(n, c, 0, 0) * inv);
  return gx;
}

// Upstream flows back through the inverse permutation, exactly.
template <typename S>
Tensor<S> channel_permute_backward(const Tensor<S>& gy, const std::vector<int>& perm) {
  return channel_permute(gy, invert_permutation(perm));
}

}  // namespace seesaw
