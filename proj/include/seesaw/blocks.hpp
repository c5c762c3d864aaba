#pragma once

#include <numeric>
#include <optional>
#include <string>

#include "seesaw/graph.hpp"

namespace seesaw {

// Splits `channels` into groups proportional to `ratio` by largest-remainder
// rounding (ties go to the earlier group), so sizes sum exactly to channels.
inline ChannelPartition make_partition(int channels, const std::vector<int>& ratio) {
  if (ratio.empty()) throw std::invalid_argument("make_partition: empty ratio");
  if (channels < int(ratio.size()))
    throw std::invalid_argument("make_partition: fewer channels than groups");
  std::int64_t total = 0;
  for (int r : ratio) {
    if (r < 1) throw std::invalid_argument("make_partition: ratio entries must be positive");
    total += r;
  }
  std::vector<int> sizes(ratio.size());
  std::vector<std::pair<std::int64_t, int>> remainders;  // (-remainder*total, index) for stable sort
  int assigned = 0;
  for (size_t g = 0; g < ratio.size(); ++g) {
    const std::int64_t num = std::int64_t(channels) * ratio[g];
    sizes[g] = int(num / total);
    assigned += sizes[g];
    remainders.push_back({-(num % total), int(g)});
  }
  std::stable_sort(remainders.begin(), remainders.end());
  for (int i = 0; i < channels - assigned; ++i) sizes[remainders[i].second] += 1;
  for (int s : sizes)
    if (s < 1) throw std::invalid_argument("make_partition: a group rounded to size 0");
  return ChannelPartition(sizes);
}

// Permutation placed between two group convolutions: filling output slots in
// order, each slot takes the next unconsumed channel of the source group that
// is furthest behind its proportional share (integer pacing, ties to the
// lower group). For equal groups this reduces to the classic channel shuffle.
// Output channel i reads input channel perm[i].
inline std::vector<int> make_seesaw_permutation(const ChannelPartition& pout_first,
                                                const ChannelPartition& pin_second) {
  if (pout_first.total() != pin_second.total())
    throw std::invalid_argument("make_seesaw_permutation: partition sums differ");
  const int C = pout_first.total();
  const int G = pout_first.groups();
  std::vector<int> consumed(G, 0);
  std::vector<int> perm(C);
  for (int t = 0; t < C; ++t) {
    int best = -1;
    std::int64_t best_score = 0;
    for (int g = 0; g < G; ++g) {
      if (consumed[g] >= pout_first.size(g)) continue;
      const std::int64_t score =
          std::int64_t(t + 1) * pout_first.size(g) - std::int64_t(consumed[g]) * C;
      if (best < 0 || score > best_score) {
        best = g;
        best_score = score;
      }
    }
    perm[t] = pout_first.offset(best) + consumed[best];
    consumed[best] += 1;
  }
  return perm;
}

enum class BlockKind { SeesawShuffle, SeesawShare, Igcv3, Mbv2 };

inline const char* block_kind_name(BlockKind k) {
  switch (k) {
    case BlockKind::SeesawShuffle: return "seesaw-shuffle";
    case BlockKind::SeesawShare: return "seesaw-share";
    case BlockKind::Igcv3: return "igcv3";
    case BlockKind::Mbv2: return "mbv2";
  }
  return "?";
}

struct BlockSpec {
  BlockKind kind = BlockKind::SeesawShuffle;
  int in_channels = 0;   // k
  int expansion = 6;     // t
  int out_channels = 0;  // k'
  int stride = 1;
  std::vector<int> ratio{1, 2};
  int share_width = -1;       // seesaw-share only; -1 = default rule
  bool with_permutes = true;  // ablation switch (connectivity experiments)
};

// Identity shortcut exists iff stride 1 and matching channel count.
inline bool has_shortcut(const BlockSpec& spec) {
  return spec.stride == 1 && spec.in_channels == spec.out_channels;
}

inline int default_share_width(const ChannelPartition& p) {
  const int smallest = *std::min_element(p.sizes().begin(), p.sizes().end());
  return std::max(1, (smallest + 7) / 8);  // ceil(0.125 * smallest group)
}

// Input channel sets of the second grouped conv under channel share: group g
// reads its own slice plus `share` channels from the next group's slice,
// wrapping at the last group. Overlap makes boundary channels feed 2 groups.
inline std::vector<std::vector<int>> share_input_indices(const ChannelPartition& p, int share) {
  const int smallest = *std::min_element(p.sizes().begin(), p.sizes().end());
  if (share < 0 || share >= smallest)
    throw std::invalid_argument("seesaw-share: share_width must be in [0, smallest group size)");
  std::vector<std::vector<int>> idx(p.groups());
  for (int g = 0; g < p.groups(); ++g) {
    idx[g].reserve(p.size(g) + share);
    for (int i = 0; i < p.size(g); ++i) idx[g].push_back(p.offset(g) + i);
    const int next = (g + 1) % p.groups();
    for (int i = 0; i < share; ++i) idx[g].push_back(p.offset(next) + i);
  }
  return idx;
}

namespace detail {

inline void validate_block(const BlockSpec& spec) {
  if (spec.in_channels < 1 || spec.out_channels < 1)
    throw std::invalid_argument("block: channel counts must be positive");
  if (spec.expansion < 1) throw std::invalid_argument("block: expansion must be >= 1");
  if (spec.stride != 1 && spec.stride != 2) throw std::invalid_argument("block: stride must be 1 or 2");
}

}  // namespace detail

// Block body without the shortcut wrapper. All four kinds share the skeleton
// [expand 1x1, BN, (permute), dwise 3x3 s, BN, ReLU6, project 1x1, BN]; the
// seesaw kinds differ in grouping and cross-group flow, IGCV3 appends a
// second permute, MBv2 uses dense pointwise convs with an extra ReLU6 after
// the expansion.
template <typename S>
LayerSeq<S> build_block_body(const BlockSpec& spec, const std::string& prefix) {
  detail::validate_block(spec);
  const int k = spec.in_channels, kp = spec.out_channels;
  const int tk = spec.expansion * k;
  LayerSeq<S> body;

  switch (spec.kind) {
    case BlockKind::SeesawShuffle: {
      const ChannelPartition pk = make_partition(k, spec.ratio);
      const ChannelPartition ptk = make_partition(tk, spec.ratio);
      const ChannelPartition pkp = make_partition(kp, spec.ratio);
      body.push_back(std::make_unique<GroupedConvLayer<S>>(prefix + ".pw1", pk, ptk));
      body.push_back(std::make_unique<BatchNormLayer<S>>(prefix + ".bn1", tk));
      // Linear after the expansion conv; the only activation follows the
      // depthwise layer.
      if (spec.with_permutes)
        body.push_back(std::make_unique<PermuteLayer<S>>(prefix + ".permute",
                                                         make_seesaw_permutation(ptk, ptk)));
      body.push_back(std::make_unique<DepthwiseConvLayer<S>>(prefix + ".dw", tk, spec.stride));
      body.push_back(std::make_unique<BatchNormLayer<S>>(prefix + ".bn2", tk));
      body.push_back(std::make_unique<ReLU6Layer<S>>(prefix + ".relu"));
      body.push_back(std::make_unique<GroupedConvLayer<S>>(prefix + ".pw2", ptk, pkp));
      body.push_back(std::make_unique<BatchNormLayer<S>>(prefix + ".bn3", kp));
      break;
    }
    case BlockKind::SeesawShare: {
      const ChannelPartition pk = make_partition(k, spec.ratio);
      const ChannelPartition ptk = make_partition(tk, spec.ratio);
      const ChannelPartition pkp = make_partition(kp, spec.ratio);
      const int share = spec.share_width >= 0 ? spec.share_width : default_share_width(ptk);
      body.push_back(std::make_unique<GroupedConvLayer<S>>(prefix + ".pw1", pk, ptk));
      body.push_back(std::make_unique<BatchNormLayer<S>>(prefix + ".bn1", tk));
      body.push_back(std::make_unique<DepthwiseConvLayer<S>>(prefix + ".dw", tk, spec.stride));
      body.push_back(std::make_unique<BatchNormLayer<S>>(prefix + ".bn2", tk));
      body.push_back(std::make_unique<ReLU6Layer<S>>(prefix + ".relu"));
      body.push_back(std::make_unique<GroupedConvLayer<S>>(prefix + ".pw2",
                                                           share_input_indices(ptk, share), pkp, tk));
      body.push_back(std::make_unique<BatchNormLayer<S>>(prefix + ".bn3", kp));
      break;
    }
    case BlockKind::Igcv3: {
      const std::vector<int> even{1, 1};
      const ChannelPartition pk = make_partition(k, even);
      const ChannelPartition ptk = make_partition(tk, even);
      const ChannelPartition pkp = make_partition(kp, even);
      body.push_back(std::make_unique<GroupedConvLayer<S>>(prefix + ".pw1", pk, ptk));
      body.push_back(std::make_unique<BatchNormLayer<S>>(prefix + ".bn1", tk));
      if (spec.with_permutes)
        body.push_back(std::make_unique<PermuteLayer<S>>(prefix + ".permute1",
                                                         make_seesaw_permutation(ptk, ptk)));
      body.push_back(std::make_unique<DepthwiseConvLayer<S>>(prefix + ".dw", tk, spec.stride));
      body.push_back(std::make_unique<BatchNormLayer<S>>(prefix + ".bn2", tk));
      body.push_back(std::make_unique<ReLU6Layer<S>>(prefix + ".relu"));
      body.push_back(std::make_unique<GroupedConvLayer<S>>(prefix + ".pw2", ptk, pkp));
      body.push_back(std::make_unique<BatchNormLayer<S>>(prefix + ".bn3", kp));
      if (spec.with_permutes)
        body.push_back(std::make_unique<PermuteLayer<S>>(prefix + ".permute2",
                                                         make_seesaw_permutation(pkp, pkp)));
      break;
    }
    case BlockKind::Mbv2: {
      body.push_back(std::make_unique<DenseConvLayer<S>>(prefix + ".pw1", k, tk, 1, 1, 1, 0, false));
      body.push_back(std::make_unique<BatchNormLayer<S>>(prefix + ".bn1", tk));
      body.push_back(std::make_unique<ReLU6Layer<S>>(prefix + ".relu1"));
      body.push_back(std::make_unique<DepthwiseConvLayer<S>>(prefix + ".dw", tk, spec.stride));
      body.push_back(std::make_unique<BatchNormLayer<S>>(prefix + ".bn2", tk));
      body.push_back(std::make_unique<ReLU6Layer<S>>(prefix + ".relu2"));
      body.push_back(std::make_unique<DenseConvLayer<S>>(prefix + ".pw2", tk, kp, 1, 1, 1, 0, false));
      body.push_back(std::make_unique<BatchNormLayer<S>>(prefix + ".bn3", kp));
      break;
    }
  }
  return body;
}

// Complete block: the body, wrapped in an identity shortcut when stride is 1
// and in/out channel counts match.
template <typename S>
LayerSeq<S> build_block(const BlockSpec& spec, const std::string& prefix) {
  LayerSeq<S> body = build_block_body<S>(spec, prefix);
  LayerSeq<S> out;
  if (has_shortcut(spec)) {
    out.push_back(std::make_unique<ResidualLayer<S>>(prefix, std::move(body)));
  } else {
    out = std::move(body);
  }
  return out;
}

template <typename S>
LayerSeq<S> build_seesaw_shuffle_block(const BlockSpec& spec, const std::string& prefix = "block") {
  if (spec.kind != BlockKind::SeesawShuffle)
    throw std::invalid_argument("build_seesaw_shuffle_block: wrong block kind");
  return build_block<S>(spec, prefix);
}

template <typename S>
LayerSeq<S> build_seesaw_share_block(const BlockSpec& spec, const std::string& prefix = "block") {
  if (spec.kind != BlockKind::SeesawShare)
    throw std::invalid_argument("build_seesaw_share_block: wrong block kind");
  return build_block<S>(spec, prefix);
}

template <typename S>
LayerSeq<S> build_igcv3_block(const BlockSpec& spec, const std::string& prefix = "block") {
  if (spec.kind != BlockKind::Igcv3) throw std::invalid_argument("build_igcv3_block: wrong block kind");
  return build_block<S>(spec, prefix);
}

template <typename S>
LayerSeq<S> build_mbv2_block(const BlockSpec& spec, const std::string& prefix = "block") {
  if (spec.kind != BlockKind::Mbv2) throw std::invalid_argument("build_mbv2_block: wrong block kind");
  return build_block<S>(spec, prefix);
}

}  // namespace seesaw
