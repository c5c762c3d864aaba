#pragma once

#include <memory>
#include <string>
#include <vector>

#include "seesaw/autodiff.hpp"
#include "seesaw/kernels.hpp"

namespace seesaw {

enum class LayerKind { DenseConv, GroupedConv, DepthwiseConv, BatchNorm, ReLU6, Permute, GlobalPool, Residual };

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::DenseConv: return "conv";
    case LayerKind::GroupedConv: return "gconv";
    case LayerKind::DepthwiseConv: return "dwconv";
    case LayerKind::BatchNorm: return "bn";
    case LayerKind::ReLU6: return "relu6";
    case LayerKind::Permute: return "permute";
    case LayerKind::GlobalPool: return "avgpool";
    case LayerKind::Residual: return "residual";
  }
  return "?";
}

enum class ParamKind { ConvWeight, Bias, BnGamma, BnBeta, BnRunningMean, BnRunningVar };

inline bool param_is_trainable(ParamKind k) {
  return k != ParamKind::BnRunningMean && k != ParamKind::BnRunningVar;
}
// Weight decay applies to conv weights only; BN affine terms and biases are exempt.
inline bool param_takes_weight_decay(ParamKind k) { return k == ParamKind::ConvWeight; }

template <typename S>
struct ParamRef {
  std::string name;
  S* value = nullptr;
  S* grad = nullptr;  // null for buffers (running stats)
  std::vector<int> dims;
  ParamKind kind = ParamKind::ConvWeight;

  std::int64_t size() const {
    std::int64_t s = 1;
    for (int d : dims) s *= d;
    return s;
  }
};

struct LayerCost {
  std::int64_t params = 0;
  std::int64_t multi_adds = 0;
};

// Structural channel dependence: entry (o, i) true iff output channel o can
// depend on input channel i.
using BoolMat = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }
  virtual LayerKind kind() const = 0;
  virtual Shape out_shape(const Shape& in) const = 0;
  // Takes the input by value so train-mode layers can keep it for backward
  // without a copy; callers move activations down the chain.
  virtual Tensor<S> forward(Tensor<S> x, Mode mode) = 0;
  virtual Tensor<S> backward(const Tensor<S>& gy) = 0;
  virtual void collect_params(std::vector<ParamRef<S>>& out) { (void)out; }
  virtual LayerCost cost(const Shape& in) const {
    (void)in;
    return {};
  }
  virtual BoolMat channel_relation(int in_channels) const = 0;

 protected:
  std::string name_;
};

template <typename S>
using LayerPtr = std::unique_ptr<Layer<S>>;
template <typename S>
using LayerSeq = std::vector<LayerPtr<S>>;

namespace detail {

inline BoolMat identity_relation(int c) {
  BoolMat m = BoolMat::Constant(c, c, false);
  for (int i = 0; i < c; ++i) m(i, i) = true;
  return m;
}

// Boolean relation composition: out = b "after" a.
inline BoolMat compose_relations(const BoolMat& b, const BoolMat& a) {
  BoolMat m = BoolMat::Constant(b.rows(), a.cols(), false);
  for (int o = 0; o < b.rows(); ++o)
    for (int k = 0; k < b.cols(); ++k)
      if (b(o, k))
        for (int i = 0; i < a.cols(); ++i) m(o, i) = m(o, i) || a(k, i);
  return m;
}

}  // namespace detail

template <typename S>
class DenseConvLayer : public Layer<S> {
 public:
  DenseConvLayer(std::string name, int cin, int cout, int kh, int kw, int stride, int pad,
                 bool with_bias)
      : Layer<S>(std::move(name)), cin_(cin), cout_(cout), kh_(kh), kw_(kw), stride_(stride),
        pad_(pad), has_bias_(with_bias) {
    weight = MatX<S>::Zero(cout, std::int64_t(cin) * kh * kw);
    weight_grad = MatX<S>::Zero(weight.rows(), weight.cols());
    if (has_bias_) {
      bias = VecX<S>::Zero(cout);
      bias_grad = VecX<S>::Zero(cout);
    }
  }

  LayerKind kind() const override { return LayerKind::DenseConv; }

  Shape out_shape(const Shape& in) const override {
    return {in.n, cout_, conv_out_dim(in.h, kh_, stride_, pad_), conv_out_dim(in.w, kw_, stride_, pad_)};
  }

  Tensor<S> forward(Tensor<S> x, Mode mode) override {
    if (mode == Mode::Train) {
      input_ = std::move(x);
      has_cache_ = true;
      return conv2d_dense_forward(input_, weight, cin_, kh_, kw_, stride_, pad_,
                                  has_bias_ ? &bias : nullptr);
    }
    return conv2d_dense_forward(x, weight, cin_, kh_, kw_, stride_, pad_, has_bias_ ? &bias : nullptr);
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    require_cache(has_cache_, this->name_);
    auto g = conv2d_dense_backward(input_, weight, cin_, kh_, kw_, stride_, pad_, has_bias_, gy);
    weight_grad += g.weights;
    if (has_bias_) bias_grad += g.bias;
    return std::move(g.input);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({this->name_ + ".weight", weight.data(), weight_grad.data(),
                   {cout_, cin_, kh_, kw_}, ParamKind::ConvWeight});
    if (has_bias_)
      out.push_back({this->name_ + ".bias", bias.data(), bias_grad.data(), {cout_}, ParamKind::Bias});
  }

  LayerCost cost(const Shape& in) const override {
    const Shape out = out_shape(in);
    const std::int64_t w = std::int64_t(cout_) * cin_ * kh_ * kw_;
    // Bias counts as parameters but not multiply-adds.
    return {w + (has_bias_ ? cout_ : 0), w * out.hw()};
  }

  BoolMat channel_relation(int in_channels) const override {
    return BoolMat::Constant(cout_, in_channels, true);
  }

  static void require_cache(bool ok, const std::string& name) {
    if (!ok) throw std::logic_error(name + ": backward without a train-mode forward");
  }

  int cin() const { return cin_; }
  int cout() const { return cout_; }
  int stride() const { return stride_; }

  MatX<S> weight, weight_grad;
  VecX<S> bias, bias_grad;

 private:
  int cin_, cout_, kh_, kw_, stride_, pad_;
  bool has_bias_;
  Tensor<S> input_;
  bool has_cache_ = false;
};

template <typename S>
class GroupedConvLayer : public Layer<S> {
 public:
  // Plain uneven group conv: group g reads pin group g contiguously.
  GroupedConvLayer(std::string name, ChannelPartition pin, ChannelPartition pout)
      : GroupedConvLayer(std::move(name), detail::contiguous_indices(pin), std::move(pout), pin.total()) {}

  // Arbitrary per-group input channel sets (channel share).
  GroupedConvLayer(std::string name, std::vector<std::vector<int>> in_idx, ChannelPartition pout,
                   int cin)
      : Layer<S>(std::move(name)), cin_(cin), in_idx_(std::move(in_idx)), pout_(std::move(pout)) {
    weights.resize(pout_.groups());
    weight_grads.resize(pout_.groups());
    for (int g = 0; g < pout_.groups(); ++g) {
      weights[g] = MatX<S>::Zero(pout_.size(g), Eigen::Index(in_idx_[g].size()));
      weight_grads[g] = MatX<S>::Zero(weights[g].rows(), weights[g].cols());
    }
  }

  LayerKind kind() const override { return LayerKind::GroupedConv; }

  Shape out_shape(const Shape& in) const override { return {in.n, pout_.total(), in.h, in.w}; }

  Tensor<S> forward(Tensor<S> x, Mode mode) override {
    if (x.c() != cin_) throw std::invalid_argument(this->name_ + ": input channel mismatch");
    if (mode == Mode::Train) {
      input_ = std::move(x);
      has_cache_ = true;
      return conv1x1_grouped_forward_indexed(input_, weights, in_idx_, pout_);
    }
    return conv1x1_grouped_forward_indexed(x, weights, in_idx_, pout_);
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    DenseConvLayer<S>::require_cache(has_cache_, this->name_);
    auto g = conv1x1_grouped_backward_indexed(input_, weights, in_idx_, pout_, gy);
    for (int i = 0; i < pout_.groups(); ++i) weight_grads[i] += g.weights[i];
    return std::move(g.input);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    for (int g = 0; g < pout_.groups(); ++g)
      out.push_back({this->name_ + ".g" + std::to_string(g) + ".weight", weights[g].data(),
                     weight_grads[g].data(), {int(weights[g].rows()), int(weights[g].cols())},
                     ParamKind::ConvWeight});
  }

  LayerCost cost(const Shape& in) const override {
    std::int64_t p = 0;
    for (int g = 0; g < pout_.groups(); ++g) p += std::int64_t(pout_.size(g)) * in_idx_[g].size();
    return {p, p * in.hw()};
  }

  BoolMat channel_relation(int in_channels) const override {
    BoolMat m = BoolMat::Constant(pout_.total(), in_channels, false);
    for (int g = 0; g < pout_.groups(); ++g)
      for (int o = 0; o < pout_.size(g); ++o)
        for (int ch : in_idx_[g]) m(pout_.offset(g) + o, ch) = true;
    return m;
  }

  int cin() const { return cin_; }
  const ChannelPartition& pout() const { return pout_; }
  const std::vector<std::vector<int>>& in_idx() const { return in_idx_; }

  std::vector<MatX<S>> weights, weight_grads;

 private:
  int cin_;
  std::vector<std::vector<int>> in_idx_;
  ChannelPartition pout_;
  Tensor<S> input_;
  bool has_cache_ = false;
};

template <typename S>
class DepthwiseConvLayer : public Layer<S> {
 public:
  DepthwiseConvLayer(std::string name, int channels, int stride)
      : Layer<S>(std::move(name)), channels_(channels), stride_(stride) {
    weight = MatX<S>::Zero(channels, 9);
    weight_grad = MatX<S>::Zero(channels, 9);
  }

  LayerKind kind() const override { return LayerKind::DepthwiseConv; }

  Shape out_shape(const Shape& in) const override {
    return {in.n, in.c, conv_out_dim(in.h, 3, stride_, 1), conv_out_dim(in.w, 3, stride_, 1)};
  }

  Tensor<S> forward(Tensor<S> x, Mode mode) override {
    if (mode == Mode::Train) {
      input_ = std::move(x);
      has_cache_ = true;
      return depthwise_conv3x3_forward(input_, weight, stride_);
    }
    return depthwise_conv3x3_forward(x, weight, stride_);
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    DenseConvLayer<S>::require_cache(has_cache_, this->name_);
    auto g = depthwise_conv3x3_backward(input_, weight, stride_, gy);
    weight_grad += g.weights;
    return std::move(g.input);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({this->name_ + ".weight", weight.data(), weight_grad.data(), {channels_, 3, 3},
                   ParamKind::ConvWeight});
  }

  LayerCost cost(const Shape& in) const override {
    const Shape out = out_shape(in);
    const std::int64_t p = std::int64_t(channels_) * 9;
    return {p, p * out.hw()};
  }

  BoolMat channel_relation(int in_channels) const override {
    return detail::identity_relation(in_channels);
  }

  int stride() const { return stride_; }

  MatX<S> weight, weight_grad;

 private:
  int channels_, stride_;
  Tensor<S> input_;
  bool has_cache_ = false;
};

template <typename S>
class BatchNormLayer : public Layer<S> {
 public:
  BatchNormLayer(std::string name, int channels, S eps = S(1e-5), S momentum = S(0.9))
      : Layer<S>(std::move(name)), channels_(channels), eps_(eps), momentum_(momentum) {
    gamma = VecX<S>::Ones(channels);
    beta = VecX<S>::Zero(channels);
    gamma_grad = VecX<S>::Zero(channels);
    beta_grad = VecX<S>::Zero(channels);
    running_mean = VecX<S>::Zero(channels);
    running_var = VecX<S>::Ones(channels);
  }

  LayerKind kind() const override { return LayerKind::BatchNorm; }
  Shape out_shape(const Shape& in) const override { return in; }

  Tensor<S> forward(Tensor<S> x, Mode mode) override {
    if (mode == Mode::Train) {
      has_cache_ = true;
      return batchnorm_forward(x, gamma, beta, running_mean, running_var, Mode::Train, eps_,
                               momentum_, &cache_);
    }
    has_cache_ = false;
    return batchnorm_forward(x, gamma, beta, running_mean, running_var, Mode::Infer, eps_, momentum_);
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    if (!has_cache_) throw std::logic_error(this->name_ + ": batchnorm backward in infer mode");
    auto g = batchnorm_backward(cache_, gamma, gy);
    gamma_grad += g.gamma;
    beta_grad += g.beta;
    return std::move(g.input);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({this->name_ + ".gamma", gamma.data(), gamma_grad.data(), {channels_}, ParamKind::BnGamma});
    out.push_back({this->name_ + ".beta", beta.data(), beta_grad.data(), {channels_}, ParamKind::BnBeta});
    out.push_back({this->name_ + ".running_mean", running_mean.data(), nullptr, {channels_},
                   ParamKind::BnRunningMean});
    out.push_back({this->name_ + ".running_var", running_var.data(), nullptr, {channels_},
                   ParamKind::BnRunningVar});
  }

  LayerCost cost(const Shape&) const override { return {2 * std::int64_t(channels_), 0}; }

  BoolMat channel_relation(int in_channels) const override {
    return detail::identity_relation(in_channels);
  }

  VecX<S> gamma, beta, gamma_grad, beta_grad, running_mean, running_var;

 private:
  int channels_;
  S eps_, momentum_;
  BatchNormCache<S> cache_;
  bool has_cache_ = false;
};

template <typename S>
class ReLU6Layer : public Layer<S> {
 public:
  explicit ReLU6Layer(std::string name) : Layer<S>(std::move(name)) {}

  LayerKind kind() const override { return LayerKind::ReLU6; }
  Shape out_shape(const Shape& in) const override { return in; }

  Tensor<S> forward(Tensor<S> x, Mode mode) override {
    if (mode == Mode::Train) {
      input_ = std::move(x);
      has_cache_ = true;
      return relu6(input_);
    }
    return relu6(x);
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    DenseConvLayer<S>::require_cache(has_cache_, this->name_);
    return relu6_backward(input_, gy);
  }

  BoolMat channel_relation(int in_channels) const override {
    return detail::identity_relation(in_channels);
  }

 private:
  Tensor<S> input_;
  bool has_cache_ = false;
};

template <typename S>
class PermuteLayer : public Layer<S> {
 public:
  PermuteLayer(std::string name, std::vector<int> perm)
      : Layer<S>(std::move(name)), perm_(std::move(perm)) {
    check_permutation(perm_, int(perm_.size()));
  }

  LayerKind kind() const override { return LayerKind::Permute; }
  Shape out_shape(const Shape& in) const override { return in; }

  Tensor<S> forward(Tensor<S> x, Mode) override { return channel_permute(x, perm_); }
  Tensor<S> backward(const Tensor<S>& gy) override { return channel_permute_backward(gy, perm_); }

  BoolMat channel_relation(int in_channels) const override {
    BoolMat m = BoolMat::Constant(in_channels, in_channels, false);
    for (int o = 0; o < in_channels; ++o) m(o, perm_[o]) = true;
    return m;
  }

  const std::vector<int>& perm() const { return perm_; }

 private:
  std::vector<int> perm_;
};

template <typename S>
class GlobalPoolLayer : public Layer<S> {
 public:
  explicit GlobalPoolLayer(std::string name) : Layer<S>(std::move(name)) {}

  LayerKind kind() const override { return LayerKind::GlobalPool; }
  Shape out_shape(const Shape& in) const override { return {in.n, in.c, 1, 1}; }

  Tensor<S> forward(Tensor<S> x, Mode mode) override {
    if (mode == Mode::Train) {
      in_shape_ = x.shape();
      has_cache_ = true;
    }
    return global_avgpool(x);
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    DenseConvLayer<S>::require_cache(has_cache_, this->name_);
    return global_avgpool_backward(in_shape_, gy);
  }

  BoolMat channel_relation(int in_channels) const override {
    return detail::identity_relation(in_channels);
  }

 private:
  Shape in_shape_;
  bool has_cache_ = false;
};

// Identity shortcut around a body sequence: y = x + F(x). The shortcut path
// holds no parameterized layers, so backward adds the upstream gradient
// unchanged to the body's input gradient.
template <typename S>
class ResidualLayer : public Layer<S> {
 public:
  ResidualLayer(std::string name, LayerSeq<S> body)
      : Layer<S>(std::move(name)), body_(std::move(body)) {}

  LayerKind kind() const override { return LayerKind::Residual; }

  Shape out_shape(const Shape& in) const override {
    Shape s = in;
    for (const auto& l : body_) s = l->out_shape(s);
    check_shapes_equal(s, in, "residual block body");
    return in;
  }

  Tensor<S> forward(Tensor<S> x, Mode mode) override {
    Tensor<S> y = x;  // the body consumes a copy; x rides the shortcut
    for (auto& l : body_) y = l->forward(std::move(y), mode);
    return residual_add(x, y);
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> g = gy;
    for (auto it = body_.rbegin(); it != body_.rend(); ++it) g = (*it)->backward(g);
    return residual_add(gy, g);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    for (auto& l : body_) l->collect_params(out);
  }

  LayerCost cost(const Shape& in) const override {
    LayerCost total;
    Shape s = in;
    for (const auto& l : body_) {
      const LayerCost c = l->cost(s);
      total.params += c.params;
      total.multi_adds += c.multi_adds;
      s = l->out_shape(s);
    }
    return total;
  }

  BoolMat channel_relation(int in_channels) const override {
    BoolMat m = detail::identity_relation(in_channels);
    for (const auto& l : body_) m = detail::compose_relations(l->channel_relation(int(m.rows())), m);
    return m || detail::identity_relation(in_channels);
  }

  const LayerSeq<S>& body() const { return body_; }
  LayerSeq<S>& body() { return body_; }

 private:
  LayerSeq<S> body_;
};

template <typename S>
Tensor<S> forward_seq(LayerSeq<S>& layers, Tensor<S> x, Mode mode) {
  for (auto& l : layers) x = l->forward(std::move(x), mode);
  return x;
}

template <typename S>
Tensor<S> backward_seq(LayerSeq<S>& layers, const Tensor<S>& gy) {
  Tensor<S> g = gy;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) g = (*it)->backward(g);
  return g;
}

template <typename S>
std::vector<ParamRef<S>> collect_params_seq(LayerSeq<S>& layers) {
  std::vector<ParamRef<S>> out;
  for (auto& l : layers) l->collect_params(out);
  return out;
}

// The compiled feed-forward chain. Backward is a fixed reverse sweep; param
// gradients accumulate until zero_grads().
template <typename S>
class LayerGraph {
 public:
  LayerSeq<S> layers;

  Shape out_shape(Shape in) const {
    for (const auto& l : layers) in = l->out_shape(in);
    return in;
  }

  Tensor<S> forward(Tensor<S> x, Mode mode) { return forward_seq(layers, std::move(x), mode); }
  Tensor<S> backward(const Tensor<S>& gy) { return backward_seq(layers, gy); }
  std::vector<ParamRef<S>> params() { return collect_params_seq(layers); }

  void zero_grads() {
    for (auto& p : params())
      if (p.grad) std::fill(p.grad, p.grad + p.size(), S(0));
  }
};

// Counts layers of a kind, descending into residual bodies.
template <typename S>
int count_layers_of_kind(const LayerSeq<S>& layers, LayerKind kind) {
  int count = 0;
  for (const auto& l : layers) {
    if (l->kind() == kind) ++count;
    if (l->kind() == LayerKind::Residual)
      count += count_layers_of_kind(static_cast<const ResidualLayer<S>&>(*l).body(), kind);
  }
  return count;
}

}  // namespace seesaw
