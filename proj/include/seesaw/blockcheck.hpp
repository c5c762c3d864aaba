#pragma once

#include "seesaw/blocks.hpp"
#include "seesaw/gradcheck.hpp"
#include "seesaw/model.hpp"

namespace seesaw {

// Smallest distance of any ReLU6 input to its kinks under a train-mode
// forward. Central differences are only valid when every activation clears
// the kinks by much more than the step size.
template <typename S>
double min_kink_distance(LayerSeq<S>& layers, const Tensor<S>& x) {
  double dist = 1e30;
  Tensor<S> y = x;
  for (auto& layer : layers) {
    if (layer->kind() == LayerKind::ReLU6) {
      const auto& a = y.array();
      dist = std::min(dist, double(a.abs().minCoeff()));
      dist = std::min(dist, double((a - S(6)).abs().minCoeff()));
    }
    if (layer->kind() == LayerKind::Residual) {
      auto& res = static_cast<ResidualLayer<S>&>(*layer);
      Tensor<S> fy = y;
      for (auto& inner : res.body()) {
        if (inner->kind() == LayerKind::ReLU6) {
          const auto& a = fy.array();
          dist = std::min(dist, double(a.abs().minCoeff()));
          dist = std::min(dist, double((a - S(6)).abs().minCoeff()));
        }
        fy = inner->forward(fy, Mode::Train);
      }
      y = residual_add(y, fy);
    } else {
      y = layer->forward(y, Mode::Train);
    }
  }
  return dist;
}

// Double-precision finite-difference check of one block's analytic backward
// pass: every parameter plus the block input, against a random projection
// readout. Inputs are drawn from successive seeds until all ReLU6 inputs
// clear their kinks.
inline FdReport check_block_gradients(const BlockSpec& spec, double h = 1e-5,
                                      std::uint64_t first_seed = 1) {
  for (std::uint64_t seed = first_seed;; ++seed) {
    auto block = build_block<double>(spec, "block");
    std::mt19937_64 rng(seed);
    initialize_params(block, rng, "");
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor<double> x(2, spec.in_channels, 4, 4);
    for (std::int64_t i = 0; i < x.size(); ++i) x.data()[i] = dist(rng);
    const int out_hw = spec.stride == 1 ? 4 : 2;
    Tensor<double> proj(2, spec.out_channels, out_hw, out_hw);
    for (std::int64_t i = 0; i < proj.size(); ++i) proj.data()[i] = dist(rng);

    if (min_kink_distance(block, x) <= 2e-3) {
      if (seed > first_seed + 64)
        throw std::runtime_error("checkgrad: no kink-free draw found (unexpected)");
      continue;
    }

    (void)forward_seq(block, x, Mode::Train);
    Tensor<double> gin = backward_seq(block, proj);
    std::vector<FdSlot> slots{{"input", x.data(), x.size(), gin.data()}};
    for (auto& p : collect_params_seq(block))
      if (p.grad) slots.push_back({p.name, p.value, p.size(), p.grad});
    return finite_difference_check(
        slots,
        [&] {
          auto out = forward_seq(block, x, Mode::Train);
          return (out.array() * proj.array()).sum();
        },
        h);
  }
}

}  // namespace seesaw
