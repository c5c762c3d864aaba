#pragma once

#include <cmath>
#include <string>

#include "seesaw/graph.hpp"

namespace seesaw {

enum class Schedule { CifarStep, ImagenetExp, Constant };

inline const char* schedule_name(Schedule s) {
  switch (s) {
    case Schedule::CifarStep: return "cifar_step";
    case Schedule::ImagenetExp: return "imagenet_exp";
    case Schedule::Constant: return "constant";
  }
  return "?";
}

struct TrainConfig {
  Schedule schedule = Schedule::CifarStep;
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 64;
  int total_epochs = 400;
  std::uint64_t seed = 1;
  bool augment = true;
  int train_subset = 0;  // 0 = full split
  int eval_every = 1;    // test-set evaluation period in epochs; 0 = final only
};

// Recipe defaults: step schedule (lr 0.1, wd 1e-4, batch 64, /10 at epochs
// 200/300/350) and exponential schedule (lr 0.045 x0.98 per epoch, wd 4e-5,
// batch 96), both with momentum 0.9.
inline TrainConfig defaults_for(Schedule schedule) {
  TrainConfig c;
  c.schedule = schedule;
  if (schedule == Schedule::ImagenetExp) {
    c.base_lr = 0.045;
    c.weight_decay = 4e-5;
    c.batch_size = 96;
  }
  return c;
}

inline double lr_at(const TrainConfig& config, int epoch) {
  switch (config.schedule) {
    case Schedule::CifarStep: {
      double lr = config.base_lr;
      for (int drop : {200, 300, 350})
        if (epoch >= drop) lr *= 0.1;
      return lr;
    }
    case Schedule::ImagenetExp:
      return config.base_lr * std::pow(0.98, epoch);
    case Schedule::Constant:
      return config.base_lr;
  }
  return config.base_lr;
}

// v <- momentum * v + (grad + weight_decay * param); param <- param - lr * v.
// BN affine terms and biases are exempt from weight decay. Throws on a
// non-finite gradient so the caller can abort the step with context.
template <typename S>
void sgd_step(const ParamRef<S>& param, VecX<S>& velocity, S lr, S momentum, S weight_decay) {
  const std::int64_t n = param.size();
  if (velocity.size() != n) throw std::invalid_argument("sgd: velocity shape mismatch for " + param.name);
  const S wd = param_takes_weight_decay(param.kind) ? weight_decay : S(0);
  Eigen::Map<VecX<S>> p(param.value, n);
  Eigen::Map<const VecX<S>> g(param.grad, n);
  if (!g.array().isFinite().all())
    throw std::runtime_error("sgd: non-finite gradient in " + param.name);
  velocity = momentum * velocity + (g + wd * p);
  p -= lr * velocity;
}

template <typename S>
class SgdOptimizer {
 public:
  explicit SgdOptimizer(const std::vector<ParamRef<S>>& params) {
    for (const auto& p : params)
      if (p.grad) velocity_.push_back(VecX<S>::Zero(p.size()));
  }

  void step(const std::vector<ParamRef<S>>& params, S lr, S momentum, S weight_decay) {
    size_t v = 0;
    for (const auto& p : params) {
      if (!p.grad) continue;
      sgd_step(p, velocity_[v++], lr, momentum, weight_decay);
    }
  }

  std::vector<VecX<S>>& velocities() { return velocity_; }

 private:
  std::vector<VecX<S>> velocity_;
};

}  // namespace seesaw
