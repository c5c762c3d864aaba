// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line. Run through ctest (one entry per criterion) or directly:
//   ./acceptance                      all criteria
//   ./acceptance -tc="criterion 01*"  one criterion

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "seesaw/blockcheck.hpp"
#include "seesaw/config.hpp"
#include "seesaw/cost.hpp"
#include "seesaw/serialize.hpp"
#include "seesaw/train.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using namespace seesaw;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool within_band(double measured, double reference, double tolerance, const char* label) {
  const double deviation = (measured - reference) / reference;
  const bool ok = std::abs(deviation) <= tolerance;
  std::printf("  %-28s measured=%.4g reference=%.4g deviation=%+.2f%% -> %s\n", label, measured,
              reference, 100 * deviation, ok ? "ok" : "OUT OF BAND");
  return ok;
}

void verdict(const char* id, bool pass) {
  std::printf("ACCEPTANCE %s: %s\n", id, pass ? "PASS" : "FAIL");
  std::fflush(stdout);
}

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string out_path =
      (fs::temp_directory_path() / ("seesaw_accept_out_" + std::to_string(counter++))).string();
  const int rc = std::system((std::string(SEESAW_CLI_PATH) + " " + args + " > " + out_path + " 2>&1").c_str());
  CliResult result;
  result.code = WEXITSTATUS(rc);
  std::ifstream in(out_path);
  std::stringstream buf;
  buf << in.rdbuf();
  result.output = buf.str();
  fs::remove(out_path);
  return result;
}

std::string summary_value(const std::string& output, const std::string& key) {
  const std::string needle = key + "=";
  const auto pos = output.rfind(needle);
  if (pos == std::string::npos) return "";
  auto end = output.find_first_of(" \n", pos + needle.size());
  return output.substr(pos + needle.size(), end - pos - needle.size());
}

std::string temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

// Training data for criterion 08: a real CIFAR-10 directory when
// SEESAW_CIFAR_DIR points at one, otherwise a synthetic 10-class image set
// written in the exact CIFAR-10 binary layout (the sandbox has no dataset
// access; the criterion gates that the pipeline learns, which the stand-in
// exercises end to end through the same loader, augmentation, and trainer).
std::string training_data_dir() {
  static const std::string dir = [] {
    if (const char* env = std::getenv("SEESAW_CIFAR_DIR")) {
      std::printf("  data source: real CIFAR-10 at %s\n", env);
      return std::string(env);
    }
    const std::string d = temp_dir("seesaw_accept_data");
    testutil::SyntheticCifar gen(10, 20260809);
    gen.write_file(d + "/data_batch_1.bin", 5000);
    gen.write_file(d + "/test_batch.bin", 10000);
    std::printf("  data source: synthetic stand-in (5000 train / 10000 test records)\n");
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("criterion 01_cost_tables: totals within 3% of the reference rows") {
  struct Row {
    const char* name;
    ModelSpec spec;
    double ref_params, ref_madds;
  };
  const std::vector<Row> rows{
      {"mbv2(1.0)", mbv2_spec(InputLayout::ImageNet224, 1000), 3.5e6, 314e6},
      {"igcv3(1.0D)", igcv3_spec(DepthVariant::Full, InputLayout::ImageNet224, 1000), 3.5e6, 318e6},
      {"seesaw-shuffle(1.0D)", seesaw_shuffle_spec(DepthVariant::Full, InputLayout::ImageNet224, 1000),
       3.6e6, 361e6},
  };
  bool pass = true;
  for (const auto& row : rows) {
    auto model = build_model<float>(row.spec, 1);
    const CostReport report = count_model(model.graph, 224);
    std::printf("%s:\n", row.name);
    const bool p_ok = within_band(double(report.total_params), row.ref_params, 0.03, "params");
    const bool m_ok = within_band(double(report.total_multi_adds), row.ref_madds, 0.03, "multi_adds");
    pass = pass && p_ok && m_ok;
    CHECK(p_ok);
    if (!m_ok && std::string(row.name) == "seesaw-shuffle(1.0D)") {
      std::printf(
          "  note: the 361M reference cannot be reproduced from this architecture. The params\n"
          "  column (3.6M) pins the 1:2 uneven grouping, whose structural multiply-add total\n"
          "  at 224^2 is 338.5M under the same counting conventions that land mbv2 and igcv3\n"
          "  inside their bands; no fixed grouping ratio satisfies both columns at once.\n");
    }
    CHECK(m_ok);
  }
  verdict("01_cost_tables", pass);
}

TEST_CASE("criterion 02_shape_conformance: every intermediate shape matches the table") {
  const auto t0 = Clock::now();
  auto model = build_model<float>(seesaw_shuffle_spec(DepthVariant::Full, InputLayout::ImageNet224, 1000), 1);

  bool pass = true;
  Shape cur{1, 3, 224, 224};
  cur = model.graph.layers[0]->out_shape(cur);
  pass = pass && (cur == Shape{1, 32, 112, 112});
  CHECK(cur == Shape{1, 32, 112, 112});

  const std::vector<Shape> stage_out{
      {1, 16, 112, 112}, {1, 24, 56, 56}, {1, 32, 28, 28}, {1, 64, 14, 14},
      {1, 96, 14, 14},   {1, 160, 7, 7},  {1, 320, 7, 7},
  };
  Shape walk{1, 3, 224, 224};
  size_t layer = 0;
  for (size_t i = 0; i < model.stages.size(); ++i) {
    const auto end = model.stages[i].first + model.stages[i].count;
    while (layer < end) walk = model.graph.layers[layer++]->out_shape(walk);
    std::printf("  stage %zu output %-16s expected %s\n", i, walk.str().c_str(),
                stage_out[i].str().c_str());
    pass = pass && (walk == stage_out[i]);
    CHECK(walk == stage_out[i]);
  }
  while (layer < model.graph.layers.size()) {
    walk = model.graph.layers[layer]->out_shape(walk);
    const auto& l = model.graph.layers[layer];
    if (l->name() == "head.conv") CHECK(walk == Shape{1, 1280, 7, 7});
    if (l->name() == "pool") CHECK(walk == Shape{1, 1280, 1, 1});
    ++layer;
  }
  pass = pass && (walk == Shape{1, 1000, 1, 1});
  CHECK(walk == Shape{1, 1000, 1, 1});

  // A real forward pass agrees with the static walk.
  Tensor<float> x(1, 3, 224, 224);
  auto y = model.graph.forward(x, Mode::Infer);
  pass = pass && (y.shape() == Shape{1, 1000, 1, 1});
  CHECK(y.shape() == Shape{1, 1000, 1, 1});

  const double elapsed = seconds_since(t0);
  std::printf("  build + walk + forward: %.1f s (budget 60 s)\n", elapsed);
  pass = pass && elapsed < 60;
  CHECK(elapsed < 60);
  verdict("02_shape_conformance", pass);
}

TEST_CASE("criterion 03_gradient_correctness: per-op 1e-6, block and tiny model 1e-5") {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(301);
  bool pass = true;
  auto check_op = [&](const char* label, std::vector<FdSlot> slots,
                      const std::function<double()>& loss) {
    const FdReport report = finite_difference_check(std::move(slots), loss);
    std::printf("  %-24s max_rel_err=%.3e\n", label, report.max_rel_err);
    pass = pass && report.pass(1e-6);
    CHECK(report.pass(1e-6));
  };

  {  // grouped 1x1 conv
    ChannelPartition pin({1, 2}), pout({2, 4});
    auto x = oracle::random_tensor<double>({2, 3, 4, 4}, rng);
    std::vector<MatX<double>> w{oracle::random_matrix<double>(2, 1, rng),
                                oracle::random_matrix<double>(4, 2, rng)};
    auto proj = oracle::random_tensor<double>({2, 6, 4, 4}, rng);
    auto g = conv1x1_grouped_backward(x, w, pin, pout, proj);
    check_op("grouped_conv1x1",
             {{"x", x.data(), x.size(), g.input.data()},
              {"w0", w[0].data(), w[0].size(), g.weights[0].data()},
              {"w1", w[1].data(), w[1].size(), g.weights[1].data()}},
             [&] { return (conv1x1_grouped_forward(x, w, pin, pout).array() * proj.array()).sum(); });
  }
  for (int stride : {1, 2}) {  // depthwise
    auto x = oracle::random_tensor<double>({2, 3, 5, 5}, rng);
    auto w = oracle::random_matrix<double>(3, 9, rng);
    const int ho = conv_out_dim(5, 3, stride, 1);
    auto proj = oracle::random_tensor<double>({2, 3, ho, ho}, rng);
    auto g = depthwise_conv3x3_backward(x, w, stride, proj);
    check_op(stride == 1 ? "depthwise_s1" : "depthwise_s2",
             {{"x", x.data(), x.size(), g.input.data()},
              {"w", w.data(), w.size(), g.weights.data()}},
             [&] { return (depthwise_conv3x3_forward(x, w, stride).array() * proj.array()).sum(); });
  }
  {  // dense conv with bias
    auto x = oracle::random_tensor<double>({2, 3, 6, 6}, rng);
    auto w = oracle::random_matrix<double>(4, 27, rng);
    VecX<double> bias = oracle::random_matrix<double>(4, 1, rng).col(0);
    const int ho = conv_out_dim(6, 3, 2, 1);
    auto proj = oracle::random_tensor<double>({2, 4, ho, ho}, rng);
    auto g = conv2d_dense_backward(x, w, 3, 3, 3, 2, 1, true, proj);
    check_op("dense_conv",
             {{"x", x.data(), x.size(), g.input.data()},
              {"w", w.data(), w.size(), g.weights.data()},
              {"b", bias.data(), bias.size(), g.bias.data()}},
             [&] {
               return (conv2d_dense_forward(x, w, 3, 3, 3, 2, 1, &bias).array() * proj.array()).sum();
             });
  }
  {  // relu6 away from kinks
    Tensor<double> x(2, 2, 4, 4);
    std::uniform_real_distribution<double> dist(-3.0, 9.0);
    for (std::int64_t i = 0; i < x.size(); ++i) {
      double v = dist(rng);
      while (std::abs(v) < 0.05 || std::abs(v - 6.0) < 0.05) v = dist(rng);
      x.data()[i] = v;
    }
    auto proj = oracle::random_tensor<double>(x.shape(), rng);
    auto gx = relu6_backward(x, proj);
    check_op("relu6", {{"x", x.data(), x.size(), gx.data()}},
             [&] { return (relu6(x).array() * proj.array()).sum(); });
  }
  {  // batchnorm (train mode, full batch-statistics derivative)
    auto x = oracle::random_tensor<double>({3, 2, 4, 4}, rng);
    VecX<double> gamma = oracle::random_matrix<double>(2, 1, rng).col(0);
    VecX<double> beta = oracle::random_matrix<double>(2, 1, rng).col(0);
    auto proj = oracle::random_tensor<double>(x.shape(), rng);
    BatchNormCache<double> cache;
    {
      VecX<double> rm = VecX<double>::Zero(2), rv = VecX<double>::Ones(2);
      (void)batchnorm_forward(x, gamma, beta, rm, rv, Mode::Train, 1e-5, 0.9, &cache);
    }
    auto g = batchnorm_backward(cache, gamma, proj);
    check_op("batchnorm",
             {{"x", x.data(), x.size(), g.input.data()},
              {"gamma", gamma.data(), gamma.size(), g.gamma.data()},
              {"beta", beta.data(), beta.size(), g.beta.data()}},
             [&] {
               VecX<double> rm = VecX<double>::Zero(2), rv = VecX<double>::Ones(2);
               return (batchnorm_forward(x, gamma, beta, rm, rv, Mode::Train).array() * proj.array())
                   .sum();
             });
  }
  {  // global average pool
    auto x = oracle::random_tensor<double>({2, 3, 4, 4}, rng);
    auto proj = oracle::random_tensor<double>({2, 3, 1, 1}, rng);
    auto gx = global_avgpool_backward(x.shape(), proj);
    check_op("global_avgpool", {{"x", x.data(), x.size(), gx.data()}},
             [&] { return (global_avgpool(x).array() * proj.array()).sum(); });
  }
  {  // channel permute: backward is the inverse permutation, exactly
    std::vector<int> perm{2, 0, 3, 1};
    auto gy = oracle::random_tensor<double>({2, 4, 3, 3}, rng);
    auto gx = channel_permute_backward(gy, perm);
    auto expect = channel_permute(gy, invert_permutation(perm));
    const bool exact = oracle::max_abs_diff(gx, expect) == 0;
    std::printf("  %-24s exact inverse: %s\n", "channel_permute", exact ? "yes" : "NO");
    pass = pass && exact;
    CHECK(exact);
  }
  {  // residual add: both input grads equal the upstream
    auto x = oracle::random_tensor<double>({2, 3, 3, 3}, rng);
    auto fx = oracle::random_tensor<double>({2, 3, 3, 3}, rng);
    auto g = oracle::random_tensor<double>({2, 3, 3, 3}, rng);
    check_op("residual_add",
             {{"x", x.data(), x.size(), g.data()}, {"fx", fx.data(), fx.size(), g.data()}},
             [&] { return (residual_add(x, fx).array() * g.array()).sum(); });
  }

  {  // full seesaw block at 1e-5
    BlockSpec spec;
    spec.kind = BlockKind::SeesawShuffle;
    spec.in_channels = 6;
    spec.expansion = 6;
    spec.out_channels = 6;
    spec.stride = 1;
    const FdReport report = check_block_gradients(spec);
    std::printf("  %-24s max_rel_err=%.3e (tolerance 1e-5)\n", "seesaw_block", report.max_rel_err);
    pass = pass && report.pass(1e-5);
    CHECK(report.pass(1e-5));
  }

  {  // tiny end-to-end model: 32 sampled parameters through the loss
    auto model = build_model<double>(testutil::tiny_spec(10), 7);
    std::mt19937_64 drng(70);
    auto x = oracle::random_tensor<double>({4, 3, 12, 12}, drng);
    std::vector<int> labels{1, 7, 3, 0};

    // Forward pass that also fingerprints which linear region every relu6
    // input falls in. A central difference is valid only if the +h and -h
    // evaluations share the fingerprint (no kink inside the interval).
    std::function<Tensor<double>(LayerSeq<double>&, Tensor<double>, std::uint64_t&)> walk =
        [&](LayerSeq<double>& layers, Tensor<double> t, std::uint64_t& sig) {
          for (auto& l : layers) {
            if (l->kind() == LayerKind::ReLU6) {
              for (std::int64_t i = 0; i < t.size(); ++i) {
                sig = (sig * 1099511628211ull) ^ std::uint64_t(t.data()[i] > 0.0);
                sig = (sig * 1099511628211ull) ^ std::uint64_t(t.data()[i] < 6.0);
              }
            }
            if (l->kind() == LayerKind::Residual) {
              auto& res = static_cast<ResidualLayer<double>&>(*l);
              Tensor<double> fy = walk(res.body(), t, sig);
              t = residual_add(t, fy);
            } else {
              t = l->forward(std::move(t), Mode::Train);
            }
          }
          return t;
        };
    auto loss_fn = [&](std::uint64_t& sig) {
      auto logits = walk(model.graph.layers, x, sig);
      return double(softmax_cross_entropy(logits, labels).loss);
    };

    auto logits = model.graph.forward(x, Mode::Train);
    auto loss = softmax_cross_entropy(logits, labels);
    model.graph.zero_grads();
    model.graph.backward(loss.grad);

    std::vector<std::pair<double*, double*>> elems;  // (value, grad) per scalar
    for (auto& p : model.graph.params())
      if (p.grad)
        for (std::int64_t i = 0; i < p.size(); ++i) elems.push_back({p.value + i, p.grad + i});
    std::mt19937_64 pick(314);
    double max_err = 0;
    int checked = 0, redrawn = 0;
    while (checked < 32) {
      REQUIRE(redrawn < 200);
      auto [vp, gp] = elems[pick() % elems.size()];
      const double h = 1e-5, saved = *vp;
      std::uint64_t sig_up = 0, sig_down = 0;
      *vp = saved + h;
      const double up = loss_fn(sig_up);
      *vp = saved - h;
      const double down = loss_fn(sig_down);
      *vp = saved;
      if (sig_up != sig_down) {  // a relu6 kink sits inside the interval
        ++redrawn;
        continue;
      }
      ++checked;
      const double numeric = (up - down) / (2 * h);
      const double noise = 32.0 * std::numeric_limits<double>::epsilon() *
                           std::max(1.0, std::abs(loss.loss)) / h;
      if (std::abs(*gp - numeric) <= noise) continue;
      max_err = std::max(max_err, relative_error(*gp, numeric));
    }
    std::printf("  %-24s max_rel_err=%.3e over 32 sampled params (%d kink redraws, tolerance 1e-5)\n",
                "tiny_model", max_err, redrawn);
    pass = pass && max_err < 1e-5;
    CHECK(max_err < 1e-5);
  }

  const double elapsed = seconds_since(t0);
  std::printf("  total %.1f s (budget 300 s)\n", elapsed);
  pass = pass && elapsed < 300;
  CHECK(elapsed < 300);
  verdict("03_gradient_correctness", pass);
}

TEST_CASE("criterion 04_grouped_conv_oracle: 200 random cases vs masked dense") {
  std::mt19937_64 rng(401);
  std::uniform_int_distribution<int> gcount(1, 4), gsize(1, 6), dim(1, 7), batch(1, 3);
  double worst_double = 0, worst_float = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int G = gcount(rng);
    std::vector<int> in_sizes(G), out_sizes(G);
    for (int g = 0; g < G; ++g) {
      in_sizes[g] = gsize(rng);
      out_sizes[g] = gsize(rng);
    }
    ChannelPartition pin(in_sizes), pout(out_sizes);
    auto xd = oracle::random_tensor<double>({batch(rng), pin.total(), dim(rng), dim(rng)}, rng);
    std::vector<MatX<double>> wd(G);
    for (int g = 0; g < G; ++g) wd[g] = oracle::random_matrix<double>(out_sizes[g], in_sizes[g], rng);
    auto dense = oracle::masked_dense_weight<double>(wd, oracle::contiguous_idx<double>(pin), pout,
                                                     pin.total());
    worst_double = std::max(worst_double,
                            oracle::max_abs_diff(conv1x1_grouped_forward(xd, wd, pin, pout),
                                                 oracle::naive_conv2d(xd, dense, 1, 1, 1, 0)));
    auto xf = xd.cast<float>();
    std::vector<MatX<float>> wf(G);
    for (int g = 0; g < G; ++g) wf[g] = wd[g].cast<float>();
    auto densef = oracle::masked_dense_weight<float>(wf, oracle::contiguous_idx<float>(pin), pout,
                                                     pin.total());
    worst_float = std::max(worst_float,
                           oracle::max_abs_diff(conv1x1_grouped_forward(xf, wf, pin, pout),
                                                oracle::naive_conv2d(xf, densef, 1, 1, 1, 0)));
  }
  std::printf("  200 cases: max |diff| double=%.3e (tol 1e-12), float=%.3e (tol 1e-5)\n",
              worst_double, worst_float);
  const bool pass = worst_double < 1e-12 && worst_float < 1e-5;
  CHECK(worst_double < 1e-12);
  CHECK(worst_float < 1e-5);
  verdict("04_grouped_conv_oracle", pass);
}

TEST_CASE("criterion 05_connectivity: block-diagonal, shuffle, share densification") {
  bool pass = true;
  const ChannelPartition even8 = make_partition(8, {1, 1});

  {  // (a) stacked even group convs without a permute stay block-diagonal
    LayerSeq<double> seq;
    for (int i = 0; i < 3; ++i)
      seq.push_back(std::make_unique<GroupedConvLayer<double>>("g" + std::to_string(i), even8, even8));
    auto m = analyze_connectivity(seq, 8);
    bool ok = !full_flow(m);
    for (int o = 0; o < 8; ++o)
      for (int i = 0; i < 8; ++i) ok = ok && (m(o, i) == ((o < 4) == (i < 4)));
    ok = ok && relations_equal(m, testutil::probe_connectivity(seq, 8));
    std::printf("  (a) stacked even g=2, no permute: block-diagonal %s\n", ok ? "ok" : "VIOLATED");
    pass = pass && ok;
    CHECK(ok);
  }
  {  // (b) one shuffle in between: full
    LayerSeq<double> seq;
    seq.push_back(std::make_unique<GroupedConvLayer<double>>("g0", even8, even8));
    seq.push_back(std::make_unique<PermuteLayer<double>>("p", make_seesaw_permutation(even8, even8)));
    seq.push_back(std::make_unique<GroupedConvLayer<double>>("g1", even8, even8));
    auto m = analyze_connectivity(seq, 8);
    const bool ok = full_flow(m) && relations_equal(m, testutil::probe_connectivity(seq, 8));
    std::printf("  (b) with one shuffle: full flow %s\n", ok ? "ok" : "VIOLATED");
    pass = pass && ok;
    CHECK(ok);
  }
  {  // (c) the seesaw-shuffle block is fully connected
    BlockSpec spec;
    spec.kind = BlockKind::SeesawShuffle;
    spec.in_channels = 12;
    spec.expansion = 6;
    spec.out_channels = 12;
    spec.stride = 1;
    auto block = build_seesaw_shuffle_block<double>(spec);
    auto m = analyze_connectivity(block, 12);
    const bool ok = full_flow(m) && relations_equal(m, testutil::probe_connectivity(block, 12));
    std::printf("  (c) seesaw-shuffle block: full flow %s\n", ok ? "ok" : "VIOLATED");
    pass = pass && ok;
    CHECK(ok);
  }
  {  // (d) stacked share blocks densify strictly until full
    auto make_body = [](const std::string& prefix) {
      BlockSpec spec;
      spec.kind = BlockKind::SeesawShare;
      spec.in_channels = 12;
      spec.expansion = 1;
      spec.out_channels = 12;
      spec.stride = 1;
      spec.ratio = {1, 1, 1};
      spec.share_width = 1;
      return build_block_body<double>(spec, prefix);
    };
    LayerSeq<double> stack;
    BoolMat prev;
    bool ok = true;
    int depth_full = -1;
    for (int depth = 1; depth <= 6; ++depth) {
      for (auto& l : make_body("b" + std::to_string(depth))) stack.push_back(std::move(l));
      auto m = analyze_connectivity(stack, 12);
      ok = ok && relations_equal(m, testutil::probe_connectivity(stack, 12));
      if (depth > 1) ok = ok && (full_flow(prev) || strictly_denser(m, prev));
      prev = m;
      if (full_flow(m)) {
        depth_full = depth;
        break;
      }
    }
    ok = ok && depth_full > 1;  // not full after one block, full eventually
    std::printf("  (d) share blocks (3 groups, width 1): densify strictly, full at depth %d %s\n",
                depth_full, ok ? "ok" : "VIOLATED");
    pass = pass && ok;
    CHECK(ok);
  }
  {  // analyzer == brute-force jacobian sparsity on <=12-channel configs
    bool ok = true;
    for (BlockKind kind : {BlockKind::SeesawShuffle, BlockKind::SeesawShare, BlockKind::Igcv3,
                           BlockKind::Mbv2}) {
      for (int k : {6, 9, 12}) {
        for (int s : {1, 2}) {
          BlockSpec spec;
          spec.kind = kind;
          spec.in_channels = k;
          spec.expansion = 6;
          spec.out_channels = k;
          spec.stride = s;
          auto block = build_block<double>(spec, "b");
          ok = ok && relations_equal(analyze_connectivity(block, k),
                                     testutil::probe_connectivity(block, k));
        }
      }
    }
    std::printf("  analyzer vs brute-force jacobian sparsity (4 kinds x {6,9,12}ch x s{1,2}): %s\n",
                ok ? "exact" : "MISMATCH");
    pass = pass && ok;
    CHECK(ok);
  }
  verdict("05_connectivity", pass);
}

TEST_CASE("criterion 06_even_grouping_minimality: exhaustive over 12 channels") {
  const auto t0 = Clock::now();
  bool pass = true;
  for (int g : {2, 3}) {
    // All ordered partitions of 12 into g positive parts, applied to both
    // sides of a grouped 1x1 conv: cost = sum size_g^2.
    std::vector<std::vector<int>> partitions;
    std::vector<int> current;
    std::function<void(int, int)> enumerate = [&](int remaining, int parts) {
      if (parts == 1) {
        current.push_back(remaining);
        partitions.push_back(current);
        current.pop_back();
        return;
      }
      for (int first = 1; first <= remaining - (parts - 1); ++first) {
        current.push_back(first);
        enumerate(remaining - first, parts - 1);
        current.pop_back();
      }
    };
    enumerate(12, g);
    std::int64_t best = -1, even_cost = 0;
    std::vector<int> best_partition;
    for (const auto& sizes : partitions) {
      std::int64_t cost = 0;
      for (int s : sizes) cost += std::int64_t(s) * s;
      if (best < 0 || cost < best) {
        best = cost;
        best_partition = sizes;
      }
    }
    for (int i = 0; i < g; ++i) even_cost += std::int64_t(12 / g) * (12 / g);
    const bool ok = best == even_cost && best_partition == std::vector<int>(g, 12 / g);
    std::printf("  g=%d: %zu ordered partitions, minimum cost %lld at the even split -> %s\n", g,
                partitions.size(), (long long)best, ok ? "ok" : "VIOLATED");
    pass = pass && ok;
    CHECK(ok);
  }
  const double elapsed = seconds_since(t0);
  std::printf("  %.3f s (budget 1 s)\n", elapsed);
  pass = pass && elapsed < 1.0;
  CHECK(elapsed < 1.0);
  verdict("06_even_grouping_minimality", pass);
}

TEST_CASE("criterion 07_residual_identity: zeroed projection makes the block exact identity") {
  std::mt19937_64 rng(701);
  BlockSpec spec;
  spec.kind = BlockKind::SeesawShuffle;
  spec.in_channels = 12;
  spec.expansion = 6;
  spec.out_channels = 12;
  spec.stride = 1;
  auto block = build_seesaw_shuffle_block<float>(spec);
  initialize_params(block, rng, "");
  auto& res = static_cast<ResidualLayer<float>&>(*block[0]);
  for (auto& layer : res.body())
    if (layer->name() == "block.pw2")
      for (auto& w : static_cast<GroupedConvLayer<float>&>(*layer).weights) w.setZero();

  auto x = oracle::random_tensor<float>({2, 12, 6, 6}, rng);
  auto y = forward_seq(block, x, Mode::Train);
  const bool fwd_exact = oracle::max_abs_diff(y, x) == 0;

  auto g = oracle::random_tensor<float>({2, 12, 6, 6}, rng);
  auto gin = backward_seq(block, g);
  const bool bwd_exact = oracle::max_abs_diff(gin, g) == 0;

  std::printf("  forward identity exact: %s; backward passes upstream unchanged: %s\n",
              fwd_exact ? "yes" : "NO", bwd_exact ? "yes" : "NO");
  CHECK(fwd_exact);
  CHECK(bwd_exact);
  verdict("07_residual_identity", fwd_exact && bwd_exact);
}

TEST_CASE("criterion 08_training_sanity: overfit gate and small-subset learning gate") {
  bool pass = true;

  {  // (a) overfit 64 fixed samples to 100% train accuracy within 500 steps
    const std::string data = training_data_dir();
    Dataset fixed = subset(load_cifar(data, "train", CifarKind::Cifar10), 64);
    auto model = build_model<float>(testutil::tiny_spec(10), 8);

    TrainConfig config = defaults_for(Schedule::Constant);
    config.base_lr = 0.05;
    config.weight_decay = 0;
    config.batch_size = 64;
    config.total_epochs = 500;  // one 64-sample batch per epoch = 500 steps
    config.augment = false;
    config.seed = 8;

    const auto t0 = Clock::now();
    const auto records = train_loop(model, fixed, config);
    const double elapsed = seconds_since(t0);
    const double final_acc = records.back().train_acc;
    const bool ok = final_acc == 1.0 && elapsed < 600;
    std::printf("  (a) overfit 64 samples: train_acc=%.4f after 500 steps, %.0f s (budget 600 s) -> %s\n",
                final_acc, elapsed, ok ? "ok" : "FAILED");
    pass = pass && ok;
    CHECK(ok);
  }

  {  // (b) 0.5D cifar-adapted model, 5000-image subset, 30 epochs, lr 0.05
    const std::string data = training_data_dir();
    const std::string out_dir = temp_dir("seesaw_accept_subset");
    const auto t0 = Clock::now();
    std::ofstream cfg(out_dir + "/run.cfg");
    cfg << "[model]\narch = seesaw-shuffle\nvariant = 0.5D\nwidth = 1.0\nclasses = 10\n"
        << "input = cifar_32\n\n[train]\nschedule = constant\nlr = 0.05\nbatch = 64\n"
        << "epochs = 30\nseed = 12\nsubset = 5000\naugment = true\neval_every = 0\n\n"
        << "[data]\ndir = " << data << "\ndataset = cifar10\n\n[out]\ndir = " << out_dir << "\n";
    cfg.close();
    auto r = run_cli("train " + out_dir + "/run.cfg");
    const double elapsed = seconds_since(t0);
    const std::string acc_str = summary_value(r.output, "test_acc");
    const double acc = acc_str.empty() ? -1.0 : std::stod(acc_str);
    const bool ok = r.code == 0 && acc >= 0.45;
    std::printf("  (b) 0.5D model, 5000-image subset, 30 epochs: test_acc=%.4f on the full test split"
                " (gate 0.45), %.0f min -> %s\n",
                acc, elapsed / 60, ok ? "ok" : "FAILED");
    if (r.code != 0) std::printf("%s\n", r.output.c_str());
    pass = pass && ok;
    CHECK(ok);
  }
  verdict("08_training_sanity", pass);
}

TEST_CASE("criterion 09_schedule_optimizer_determinism") {
  bool pass = true;
  {  // schedule closed forms
    TrainConfig cifar = defaults_for(Schedule::CifarStep);
    TrainConfig imagenet = defaults_for(Schedule::ImagenetExp);
    const bool ok = lr_at(cifar, 199) == 0.1 && std::abs(lr_at(cifar, 200) - 0.01) < 1e-15 &&
                    std::abs(lr_at(cifar, 300) - 0.001) < 1e-15 &&
                    std::abs(lr_at(cifar, 350) - 0.0001) < 1e-15 && lr_at(imagenet, 0) == 0.045 &&
                    std::abs(lr_at(imagenet, 1) - 0.0441) < 1e-15;
    std::printf("  lr schedules match closed forms to machine precision: %s\n", ok ? "ok" : "NO");
    pass = pass && ok;
    CHECK(ok);
  }
  {  // sgd closed forms
    std::vector<float> v{0.f}, g{1.f};
    VecX<float> vel = VecX<float>::Zero(1);
    ParamRef<float> p{"p", v.data(), g.data(), {1}, ParamKind::ConvWeight};
    sgd_step(p, vel, 0.1f, 0.9f, 0.f);
    const float after1 = v[0];
    sgd_step(p, vel, 0.1f, 0.9f, 0.f);
    const bool ok = after1 == -0.1f && std::abs((v[0] - after1) + 0.1f * 1.9f) < 1e-7f;
    std::printf("  sgd momentum unroll matches closed form: %s\n", ok ? "ok" : "NO");
    pass = pass && ok;
    CHECK(ok);
  }
  {  // identical seeds -> bit-identical epoch-1 metrics
    const std::string dir = temp_dir("seesaw_accept_det");
    testutil::SyntheticCifar gen(10, 909);
    gen.write_file(dir + "/data_batch_1.bin", 128);
    Dataset ds;
    ds.num_classes = 10;
    append_cifar_file(ds, dir + "/data_batch_1.bin", CifarKind::Cifar10);
    compute_normalization(ds);

    TrainConfig config = defaults_for(Schedule::Constant);
    config.base_lr = 0.05;
    config.batch_size = 32;
    config.total_epochs = 1;
    config.seed = 77;
    auto run = [&] {
      auto model = build_model<float>(testutil::tiny_spec(10), 123);
      Dataset local = ds;
      return train_loop(model, local, config);
    };
    const auto a = run();
    const auto b = run();
    const bool ok = a.size() == 1 && a[0].loss == b[0].loss && a[0].train_acc == b[0].train_acc;
    std::printf("  two runs, same seed: epoch-1 loss bit-identical (%a): %s\n", a[0].loss,
                ok ? "ok" : "NO");
    pass = pass && ok;
    CHECK(ok);
  }
  verdict("09_schedule_optimizer_determinism", pass);
}

TEST_CASE("criterion 10_nonlinearity_parity: doubled repeats keep the relu6 count") {
  auto seesaw = build_model<float>(seesaw_shuffle_spec(DepthVariant::Full, InputLayout::ImageNet224, 1000), 1);
  auto mbv2 = build_model<float>(mbv2_spec(InputLayout::ImageNet224, 1000), 1);
  // One ReLU6 per seesaw block at doubled repeats vs two per mbv2 block at
  // the original repeats, over the five doubled main stages.
  const int seesaw_relus = stage_relu_count(seesaw, 1, 5);
  const int mbv2_relus = stage_relu_count(mbv2, 1, 5);
  std::printf("  main stages: seesaw 1.0D relu6=%d (1 per block x %d blocks), mbv2 relu6=%d (2 per block x %d blocks)\n",
              seesaw_relus, 4 + 6 + 8 + 6 + 6, mbv2_relus, 2 + 3 + 4 + 3 + 3);
  const bool pass = seesaw_relus == 30 && mbv2_relus == 30 && seesaw_relus == mbv2_relus;
  CHECK(seesaw_relus == 30);
  CHECK(mbv2_relus == 30);
  CHECK(seesaw_relus == mbv2_relus);
  verdict("10_nonlinearity_parity", pass);
}
