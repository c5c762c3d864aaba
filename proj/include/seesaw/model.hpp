#pragma once

#include <cmath>
#include <random>

#include "seesaw/blocks.hpp"

namespace seesaw {

enum class DepthVariant { Half, Full };  // 0.5D / 1.0D
enum class InputLayout { ImageNet224, Cifar32 };

inline const char* depth_variant_name(DepthVariant v) { return v == DepthVariant::Half ? "0.5D" : "1.0D"; }
inline const char* input_layout_name(InputLayout l) {
  return l == InputLayout::ImageNet224 ? "imagenet_224" : "cifar_32";
}

struct StageSpec {
  BlockKind kind = BlockKind::SeesawShuffle;
  int t = 6;   // expansion ratio
  int c = 0;   // output channels
  int n = 1;   // repeats
  int s = 1;   // stride of the first block
  bool even_ratio = false;  // final even-block row uses g=2 even grouping
};

struct ModelSpec {
  std::string arch = "seesaw-shuffle";
  std::vector<StageSpec> stages;
  int stem_channels = 32;
  int head_channels = 1280;
  int num_classes = 1000;
  double width_multiplier = 1.0;
  InputLayout input_layout = InputLayout::ImageNet224;
  std::vector<int> ratio{1, 2};
  int share_width = -1;  // -1: default rule
  bool with_permutes = true;
};

// Scaled widths round to the nearest multiple of 3 so the default 1:2
// partition stays integral; multiplier 1.0 keeps the table values exactly.
inline int scale_width(int channels, double multiplier) {
  if (multiplier == 1.0) return channels;
  return std::max(3, int(std::lround(channels * multiplier / 3.0)) * 3);
}

namespace detail {

inline std::vector<StageSpec> table2_stages(BlockKind kind, DepthVariant variant) {
  // (t, c, n, s) rows; bracketed repeats are the 0.5D variant.
  const bool half = variant == DepthVariant::Half;
  std::vector<StageSpec> stages{
      {kind, 1, 16, 1, 1, false},
      {kind, 6, 24, half ? 2 : 4, 2, false},
      {kind, 6, 32, half ? 3 : 6, 2, false},
      {kind, 6, 64, half ? 4 : 8, 2, false},
      {kind, 6, 96, half ? 3 : 6, 1, false},
      {kind, 6, 160, half ? 3 : 6, 2, false},
      {kind, 6, 320, 1, 1, true},  // even-block
  };
  return stages;
}

}  // namespace detail

inline ModelSpec seesaw_shuffle_spec(DepthVariant variant, InputLayout layout, int classes) {
  ModelSpec spec;
  spec.arch = std::string("seesaw-shuffle/") + depth_variant_name(variant);
  spec.stages = detail::table2_stages(BlockKind::SeesawShuffle, variant);
  spec.num_classes = classes;
  spec.input_layout = layout;
  return spec;
}

inline ModelSpec seesaw_share_spec(DepthVariant variant, InputLayout layout, int classes) {
  ModelSpec spec = seesaw_shuffle_spec(variant, layout, classes);
  spec.arch = std::string("seesaw-share/") + depth_variant_name(variant);
  for (auto& st : spec.stages) st.kind = BlockKind::SeesawShare;
  return spec;
}

inline ModelSpec igcv3_spec(DepthVariant variant, InputLayout layout, int classes) {
  ModelSpec spec = seesaw_shuffle_spec(variant, layout, classes);
  spec.arch = std::string("igcv3/") + depth_variant_name(variant);
  for (auto& st : spec.stages) st.kind = BlockKind::Igcv3;
  return spec;
}

// MobileNetV2 baseline at its original repeat counts.
inline ModelSpec mbv2_spec(InputLayout layout, int classes, double width_multiplier = 1.0) {
  ModelSpec spec;
  spec.arch = "mbv2";
  spec.stages = {
      {BlockKind::Mbv2, 1, 16, 1, 1, false}, {BlockKind::Mbv2, 6, 24, 2, 2, false},
      {BlockKind::Mbv2, 6, 32, 3, 2, false}, {BlockKind::Mbv2, 6, 64, 4, 2, false},
      {BlockKind::Mbv2, 6, 96, 3, 1, false}, {BlockKind::Mbv2, 6, 160, 3, 2, false},
      {BlockKind::Mbv2, 6, 320, 1, 1, false},
  };
  spec.num_classes = classes;
  spec.input_layout = layout;
  spec.width_multiplier = width_multiplier;
  return spec;
}

// All stages except the first (the t=1 stage) take the new expansion ratio.
inline ModelSpec set_expansion(ModelSpec spec, int t) {
  if (t < 1) throw std::invalid_argument("set_expansion: t must be >= 1");
  for (size_t i = 1; i < spec.stages.size(); ++i) spec.stages[i].t = t;
  return spec;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t spec_hash(const ModelSpec& spec) {
  std::string canon = spec.arch + "|" + input_layout_name(spec.input_layout) + "|" +
                      std::to_string(spec.stem_channels) + "|" + std::to_string(spec.head_channels) +
                      "|" + std::to_string(spec.num_classes) + "|" +
                      std::to_string(spec.width_multiplier) + "|" +
                      std::to_string(spec.share_width) + "|" + (spec.with_permutes ? "p" : "np") + "|r";
  for (int r : spec.ratio) canon += ":" + std::to_string(r);
  for (const auto& st : spec.stages)
    canon += "|" + std::string(block_kind_name(st.kind)) + "," + std::to_string(st.t) + "," +
             std::to_string(st.c) + "," + std::to_string(st.n) + "," + std::to_string(st.s) +
             (st.even_ratio ? ",e" : "");
  return fnv1a(canon);
}

struct StageRange {
  std::string name;
  size_t first = 0;
  size_t count = 0;
};

template <typename S>
struct Model {
  ModelSpec spec;
  LayerGraph<S> graph;
  std::vector<StageRange> stages;  // block-stage layer ranges in graph.layers

  Shape logits_shape(int batch, int h, int w) const {
    return graph.out_shape(Shape{batch, 3, h, w});
  }
};

// He-style init: conv weights from N(0, sqrt(2 / fan_out)); the classifier
// uses std 0.01; BN affine terms stay at (1, 0).
template <typename S>
void initialize_params(LayerSeq<S>& layers, std::mt19937_64& rng, const std::string& classifier_name) {
  for (auto& layer : layers) {
    switch (layer->kind()) {
      case LayerKind::DenseConv: {
        auto& l = static_cast<DenseConvLayer<S>&>(*layer);
        const bool classifier = l.name() == classifier_name;
        const double fan_out = double(l.weight.rows()) * l.weight.cols() / l.cin();
        const double std_dev = classifier ? 0.01 : std::sqrt(2.0 / fan_out);
        std::normal_distribution<double> dist(0.0, std_dev);
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = S(dist(rng));
        break;
      }
      case LayerKind::GroupedConv: {
        auto& l = static_cast<GroupedConvLayer<S>&>(*layer);
        for (auto& w : l.weights) {
          std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(w.rows())));
          for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = S(dist(rng));
        }
        break;
      }
      case LayerKind::DepthwiseConv: {
        auto& l = static_cast<DepthwiseConvLayer<S>&>(*layer);
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / 9.0));
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = S(dist(rng));
        break;
      }
      case LayerKind::Residual: {
        auto& l = static_cast<ResidualLayer<S>&>(*layer);
        initialize_params(l.body(), rng, classifier_name);
        break;
      }
      default:
        break;
    }
  }
}

// Compiles the stage table into the full classification network:
// stem conv / block stages / 1x1 head / global pool / 1x1 classifier.
// For cifar_32 input the stem and the first stride-2 stage run at stride 1,
// walking 32x32 down to a 4x4 pre-pool map instead of 224 -> 7.
template <typename S>
Model<S> build_model(const ModelSpec& spec, std::uint64_t seed) {
  Model<S> model;
  model.spec = spec;
  LayerSeq<S>& layers = model.graph.layers;
  const double mult = spec.width_multiplier;

  const bool cifar = spec.input_layout == InputLayout::Cifar32;
  const int stem = scale_width(spec.stem_channels, mult);
  layers.push_back(std::make_unique<DenseConvLayer<S>>("stem.conv", 3, stem, 3, 3, cifar ? 1 : 2, 1, false));
  layers.push_back(std::make_unique<BatchNormLayer<S>>("stem.bn", stem));
  layers.push_back(std::make_unique<ReLU6Layer<S>>("stem.relu"));

  int k = stem;
  bool first_downsampling_stage = true;
  for (size_t i = 0; i < spec.stages.size(); ++i) {
    const StageSpec& st = spec.stages[i];
    if (st.c < 1 || st.n < 1 || st.t < 1 || (st.s != 1 && st.s != 2))
      throw std::invalid_argument("build_model: invalid stage table row " + std::to_string(i));
    int stage_stride = st.s;
    if (cifar && st.s == 2 && first_downsampling_stage) {
      stage_stride = 1;  // the stem was the first stride-2 stage; this is the second
      first_downsampling_stage = false;
    }
    const int c = scale_width(st.c, mult);
    StageRange range{"s" + std::to_string(i), layers.size(), 0};
    for (int rep = 0; rep < st.n; ++rep) {
      BlockSpec block;
      block.kind = st.kind;
      block.in_channels = k;
      block.expansion = st.t;
      block.out_channels = c;
      block.stride = rep == 0 ? stage_stride : 1;
      block.ratio = st.even_ratio ? std::vector<int>{1, 1} : spec.ratio;
      block.share_width = spec.share_width;
      block.with_permutes = spec.with_permutes;
      auto frag = build_block<S>(block, range.name + ".b" + std::to_string(rep));
      for (auto& l : frag) layers.push_back(std::move(l));
      k = c;
    }
    range.count = layers.size() - range.first;
    model.stages.push_back(range);
  }

  const int head = scale_width(spec.head_channels, mult);
  layers.push_back(std::make_unique<DenseConvLayer<S>>("head.conv", k, head, 1, 1, 1, 0, false));
  layers.push_back(std::make_unique<BatchNormLayer<S>>("head.bn", head));
  layers.push_back(std::make_unique<ReLU6Layer<S>>("head.relu"));
  layers.push_back(std::make_unique<GlobalPoolLayer<S>>("pool"));
  layers.push_back(std::make_unique<DenseConvLayer<S>>("classifier", head, spec.num_classes, 1, 1, 1, 0, true));

  std::mt19937_64 rng(seed);
  initialize_params(layers, rng, "classifier");
  return model;
}

// ReLU6 layers inside the block stages (stem/head activations excluded).
template <typename S>
int stage_relu_count(const Model<S>& model, size_t first_stage, size_t last_stage) {
  int count = 0;
  for (size_t i = first_stage; i <= last_stage && i < model.stages.size(); ++i) {
    const StageRange& r = model.stages[i];
    for (size_t j = r.first; j < r.first + r.count; ++j) {
      const auto& l = model.graph.layers[j];
      if (l->kind() == LayerKind::ReLU6) ++count;
      if (l->kind() == LayerKind::Residual)
        count += count_layers_of_kind(static_cast<const ResidualLayer<S>&>(*l).body(), LayerKind::ReLU6);
    }
  }
  return count;
}

}  // namespace seesaw
