// Command-line front end: cost, train, eval, checkgrad, connectivity.
// Every command prints one machine-parseable key=value summary line.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "seesaw/blockcheck.hpp"
#include "seesaw/config.hpp"
#include "seesaw/connectivity.hpp"
#include "seesaw/cost.hpp"
#include "seesaw/serialize.hpp"
#include "seesaw/train.hpp"

namespace fs = std::filesystem;
using namespace seesaw;

namespace {

BlockKind block_kind_from(const std::string& name) {
  if (name == "seesaw-shuffle") return BlockKind::SeesawShuffle;
  if (name == "seesaw-share") return BlockKind::SeesawShare;
  if (name == "igcv3") return BlockKind::Igcv3;
  if (name == "mbv2") return BlockKind::Mbv2;
  throw CLI::ValidationError("--block/--arch", "unknown kind '" + name + "'");
}

DepthVariant depth_variant_from(const std::string& v) {
  if (v == "0.5D" || v == "0.5d") return DepthVariant::Half;
  if (v == "1.0D" || v == "1.0d") return DepthVariant::Full;
  throw CLI::ValidationError("--variant", "expected 0.5D or 1.0D, got '" + v + "'");
}

InputLayout input_layout_from(const std::string& v) {
  if (v == "imagenet_224") return InputLayout::ImageNet224;
  if (v == "cifar_32") return InputLayout::Cifar32;
  throw CLI::ValidationError("model.input", "expected imagenet_224 or cifar_32, got '" + v + "'");
}

ModelSpec model_spec_from(const RunConfig& c) {
  const InputLayout layout = input_layout_from(c.input);
  ModelSpec spec;
  if (c.arch == "mbv2") {
    double width = c.width;
    if (c.variant != "1.0D" && c.variant != "0.5D") {
      // mbv2 has no depth variants; a numeric variant means the width.
      try {
        width = std::stod(c.variant);
      } catch (...) {
        throw CLI::ValidationError("--variant", "mbv2 variant must be a width multiplier");
      }
    }
    spec = mbv2_spec(layout, c.classes, width);
  } else {
    const DepthVariant variant = depth_variant_from(c.variant);
    if (c.arch == "seesaw-shuffle") spec = seesaw_shuffle_spec(variant, layout, c.classes);
    else if (c.arch == "seesaw-share") spec = seesaw_share_spec(variant, layout, c.classes);
    else if (c.arch == "igcv3") spec = igcv3_spec(variant, layout, c.classes);
    else throw CLI::ValidationError("--arch", "unknown architecture '" + c.arch + "'");
    spec.width_multiplier = c.width;
  }
  spec.ratio = parse_ratio(c.ratio);
  spec.share_width = c.share_width;
  spec.with_permutes = c.permutes;
  if (c.expansion > 0) spec = set_expansion(spec, c.expansion);
  return spec;
}

TrainConfig train_config_from(const RunConfig& c) {
  Schedule schedule;
  if (c.schedule == "cifar_step") schedule = Schedule::CifarStep;
  else if (c.schedule == "imagenet_exp") schedule = Schedule::ImagenetExp;
  else if (c.schedule == "constant") schedule = Schedule::Constant;
  else throw std::runtime_error("config: unknown schedule '" + c.schedule + "'");
  TrainConfig t = defaults_for(schedule);
  if (c.lr >= 0) t.base_lr = c.lr;
  if (c.momentum >= 0) t.momentum = c.momentum;
  if (c.weight_decay >= 0) t.weight_decay = c.weight_decay;
  if (c.batch > 0) t.batch_size = c.batch;
  t.total_epochs = c.epochs;
  t.seed = c.seed;
  t.augment = c.augment;
  t.train_subset = c.subset;
  t.eval_every = c.eval_every;
  return t;
}

CifarKind dataset_kind_from(const RunConfig& c) {
  if (c.dataset == "cifar10") return CifarKind::Cifar10;
  if (c.dataset == "cifar100") return CifarKind::Cifar100;
  throw std::runtime_error("config: unknown dataset '" + c.dataset + "'");
}

int cmd_cost(const RunConfig& config, int resolution, const std::string& csv_path) {
  auto model = build_model<float>(model_spec_from(config), config.seed);
  const CostReport report = count_model(model.graph, resolution);
  std::cout << cost_table(report);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cost: cannot write " + csv_path);
    out << cost_csv(report);
  }
  std::printf("params=%s multi_adds=%s\n", format_millions(report.total_params).c_str(),
              format_millions(report.total_multi_adds).c_str());
  return 0;
}

int cmd_train(RunConfig config, const std::string& resume) {
  if (config.data_dir.empty()) throw std::runtime_error("train: data.dir is required");
  if (config.out_dir.empty()) throw std::runtime_error("train: out.dir is required");
  fs::create_directories(config.out_dir);
  {
    std::ofstream out(config.out_dir + "/resolved.cfg");
    out << resolved_text(config);
  }

  const CifarKind kind = dataset_kind_from(config);
  Dataset train = load_cifar(config.data_dir, "train", kind);
  if (config.subset > 0) train = subset(train, config.subset);
  if (config.classes != train.num_classes)
    throw std::runtime_error("train: model.classes does not match the dataset");

  Dataset test;
  bool have_test = false;
  try {
    test = load_cifar(config.data_dir, "test", kind);
    have_test = true;
  } catch (const std::exception&) {
    // No test split; train-only metrics.
  }

  auto model = build_model<float>(model_spec_from(config), config.seed);
  TrainOptions options;
  options.out_dir = config.out_dir;
  options.resume_from = resume;
  options.test = have_test ? &test : nullptr;
  options.hooks.on_epoch = [](const EpochRecord& r) {
    std::printf("epoch=%d lr=%.6g loss=%.6f train_acc=%.4f", r.epoch, r.lr, r.loss, r.train_acc);
    if (r.test_acc) std::printf(" test_acc=%.4f", *r.test_acc);
    std::printf("\n");
    std::fflush(stdout);
  };

  const auto records = train_loop(model, train, train_config_from(config), options);
  if (records.empty()) throw std::runtime_error("train: no epochs run (already complete?)");
  const EpochRecord& last = records.back();
  std::printf("epochs=%d final_loss=%.6f final_train_acc=%.4f", last.epoch + 1, last.loss,
              last.train_acc);
  if (last.test_acc) std::printf(" test_acc=%.4f", *last.test_acc);
  std::printf("\n");
  return 0;
}

int cmd_eval(const std::string& checkpoint, std::string config_path, const std::string& data_dir) {
  if (config_path.empty())
    config_path = (fs::path(checkpoint).parent_path() / "resolved.cfg").string();
  RunConfig config = parse_config_file(config_path);
  if (!data_dir.empty()) config.data_dir = data_dir;
  if (config.data_dir.empty()) throw std::runtime_error("eval: no data directory configured");

  auto model = build_model<float>(model_spec_from(config), config.seed);
  SgdOptimizer<float> opt(model.graph.params());
  const ResumeState state = load_checkpoint(model, opt, checkpoint);

  Dataset test = load_cifar(config.data_dir, "test", dataset_kind_from(config));
  test.mean = state.mean;  // normalization travels with the checkpoint
  test.stddev = state.stddev;
  const double acc = evaluate(model, test);
  std::printf("top1=%.4f n=%lld\n", acc, (long long)test.count());
  return 0;
}

int cmd_checkgrad(const std::string& block, int channels, int out_channels, int expansion,
                  int stride, const std::string& ratio, int share_width, bool no_permute,
                  double tolerance) {
  BlockSpec spec;
  spec.kind = block_kind_from(block);
  spec.in_channels = channels;
  spec.out_channels = out_channels > 0 ? out_channels : channels;
  spec.expansion = expansion;
  spec.stride = stride;
  spec.ratio = parse_ratio(ratio);
  spec.share_width = share_width;
  spec.with_permutes = !no_permute;

  const FdReport report = check_block_gradients(spec);
  std::cout << report.summary();
  const bool pass = report.pass(tolerance);
  std::printf("checkgrad=%s max_rel_err=%.3e tolerance=%.0e\n", pass ? "PASS" : "FAIL",
              report.max_rel_err, tolerance);
  return pass ? 0 : 2;
}

int cmd_connectivity(const std::string& block, int channels, int out_channels, int expansion,
                     int stride, const std::string& ratio, int share_width, bool no_permute,
                     int stack) {
  BlockSpec spec;
  spec.kind = block_kind_from(block);
  spec.in_channels = channels;
  spec.out_channels = out_channels > 0 ? out_channels : channels;
  spec.expansion = expansion;
  spec.stride = stride;
  spec.ratio = parse_ratio(ratio);
  spec.share_width = share_width;
  spec.with_permutes = !no_permute;
  if (stack > 1 && spec.out_channels != spec.in_channels)
    throw std::runtime_error("connectivity: stacking requires equal in/out channels");

  LayerSeq<float> fragment;
  for (int i = 0; i < stack; ++i)
    for (auto& l : build_block<float>(spec, "b" + std::to_string(i))) fragment.push_back(std::move(l));

  const BoolMat m = analyze_connectivity(fragment, spec.in_channels);
  std::cout << render_connectivity(m);
  const bool full = full_flow(m);
  std::printf("full_flow=%s edges=%lld of %lld\n", full ? "true" : "false",
              (long long)edge_count(m), (long long)(m.rows() * m.cols()));
  return full ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seesaw uneven group convolution networks: cost analysis, training, and structural checks"};
  app.require_subcommand(1);

  // cost
  auto* cost = app.add_subcommand("cost", "Analytic parameter and multiply-add counts");
  RunConfig cost_config;
  cost_config.input = "imagenet_224";
  cost_config.classes = 1000;
  int resolution = 224;
  std::string csv_path;
  cost->add_option("--arch", cost_config.arch, "seesaw-shuffle | seesaw-share | igcv3 | mbv2");
  cost->add_option("--variant", cost_config.variant, "0.5D | 1.0D (mbv2: width multiplier)");
  cost->add_option("--res", resolution, "input resolution (default 224)");
  cost->add_option("--classes", cost_config.classes, "classifier classes");
  cost->add_option("--width", cost_config.width, "width multiplier");
  cost->add_option("--input", cost_config.input, "imagenet_224 | cifar_32");
  cost->add_option("--expansion", cost_config.expansion, "expansion ratio override (0 = table)");
  cost->add_option("--ratio", cost_config.ratio, "uneven grouping ratio, e.g. 1:2");
  cost->add_option("--share-width", cost_config.share_width, "channel share width (-1 = default rule)");
  cost->add_option("--csv", csv_path, "write per-layer rows as CSV");

  // train
  auto* train = app.add_subcommand("train", "Train a model from a run config");
  std::string config_path, resume_path;
  std::vector<std::string> overrides;
  train->add_option("config", config_path, "run config file")->required();
  train->add_option("--resume", resume_path, "checkpoint to resume from");
  train->add_option("--set", overrides, "override, e.g. --set train.lr=0.05 (flags win over file)");

  // eval
  auto* eval = app.add_subcommand("eval", "Top-1 accuracy of a checkpoint on the test split");
  std::string ckpt_path, eval_config, eval_data;
  eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval->add_option("--config", eval_config, "run config (default: resolved.cfg next to checkpoint)");
  eval->add_option("--data", eval_data, "data directory override");

  // checkgrad
  auto* checkgrad = app.add_subcommand("checkgrad", "Finite-difference check of a block's gradients");
  std::string block = "seesaw-shuffle", ratio = "1:2";
  int channels = 6, out_channels = 0, expansion = 6, stride = 1, share_width = -1, stack = 1;
  bool no_permute = false;
  double tolerance = 1e-5;
  checkgrad->add_option("--block", block, "seesaw-shuffle | seesaw-share | igcv3 | mbv2");
  checkgrad->add_option("--channels", channels, "block input channels");
  checkgrad->add_option("--out-channels", out_channels, "block output channels (default: input)");
  checkgrad->add_option("--expansion", expansion, "expansion ratio t");
  checkgrad->add_option("--stride", stride, "1 or 2");
  checkgrad->add_option("--ratio", ratio, "grouping ratio");
  checkgrad->add_option("--share-width", share_width, "share width (-1 = default rule)");
  checkgrad->add_flag("--no-permute", no_permute, "drop the channel permutes");
  checkgrad->add_option("--tolerance", tolerance, "max relative error to pass");

  // connectivity
  auto* conn = app.add_subcommand("connectivity", "Structural channel dependence of a block");
  std::string cblock = "seesaw-shuffle", cratio = "1:2";
  int cchannels = 12, cout_channels = 0, cexpansion = 6, cstride = 1, cshare = -1;
  bool cno_permute = false;
  conn->add_option("--block", cblock, "seesaw-shuffle | seesaw-share | igcv3 | mbv2");
  conn->add_option("--channels", cchannels, "block input channels");
  conn->add_option("--out-channels", cout_channels, "block output channels (default: input)");
  conn->add_option("--expansion", cexpansion, "expansion ratio t");
  conn->add_option("--stride", cstride, "1 or 2");
  conn->add_option("--ratio", cratio, "grouping ratio");
  conn->add_option("--share-width", cshare, "share width (-1 = default rule)");
  conn->add_flag("--no-permute", cno_permute, "drop the channel permutes");
  conn->add_option("--stack", stack, "number of stacked blocks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cost->parsed()) return cmd_cost(cost_config, resolution, csv_path);
    if (train->parsed()) {
      RunConfig config = parse_config_file(config_path);
      for (const auto& o : overrides) apply_override(config, o);
      return cmd_train(config, resume_path);
    }
    if (eval->parsed()) return cmd_eval(ckpt_path, eval_config, eval_data);
    if (checkgrad->parsed())
      return cmd_checkgrad(block, channels, out_channels, expansion, stride, ratio, share_width,
                           no_permute, tolerance);
    if (conn->parsed())
      return cmd_connectivity(cblock, cchannels, cout_channels, cexpansion, cstride, cratio, cshare,
                              cno_permute, stack);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
