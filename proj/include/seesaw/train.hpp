#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>

#include "seesaw/data.hpp"
#include "seesaw/model.hpp"
#include "seesaw/optim.hpp"
#include "seesaw/serialize.hpp"

namespace seesaw {

template <typename S>
struct LossResult {
  S loss = 0;
  Tensor<S> grad{1, 1, 1, 1};  // d(mean loss)/d(logits)
  int correct = 0;
};

// Mean softmax cross-entropy over the batch, with top-1 hit count.
// Logits arrive as (n, k, 1, 1) from the classifier conv.
template <typename S>
LossResult<S> softmax_cross_entropy(const Tensor<S>& logits, std::span<const int> labels) {
  const int n = logits.n(), k = logits.c();
  if (int(labels.size()) != n) throw std::invalid_argument("loss: batch/label count mismatch");
  LossResult<S> result;
  result.grad = Tensor<S>(logits.shape());
  double total = 0;
  for (int i = 0; i < n; ++i) {
    Eigen::Map<const VecX<S>> row(logits.data() + std::int64_t(i) * k, k);
    Eigen::Map<VecX<S>> grad(result.grad.data() + std::int64_t(i) * k, k);
    const int label = labels[i];
    if (label < 0 || label >= k) throw std::invalid_argument("loss: label out of range");
    int argmax = 0;
    row.maxCoeff(&argmax);
    if (argmax == label) ++result.correct;
    const S m = row.maxCoeff();
    const VecX<S> shifted = row.array() - m;
    const S lse = std::log(shifted.array().exp().sum());
    total += double(lse - shifted[label]);
    grad = (shifted.array() - lse).exp() / S(n);
    grad[label] -= S(1) / S(n);
  }
  result.loss = S(total / n);
  return result;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t step) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (epoch + 1) + 0xbf58476d1ce4e5b9ull * (step + 1);
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

// Sample order for one epoch: a pure function of (seed, epoch), so resumed
// runs and pipelined loaders see identical batches.
inline std::vector<std::int64_t> epoch_order(std::int64_t count, std::uint64_t seed, int epoch) {
  std::vector<std::int64_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, std::uint64_t(epoch), 0));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

template <typename S>
double evaluate(Model<S>& model, const Dataset& ds, int batch_size = 250) {
  std::int64_t correct = 0;
  std::vector<std::int64_t> indices(ds.count());
  std::iota(indices.begin(), indices.end(), 0);
  for (std::int64_t start = 0; start < ds.count(); start += batch_size) {
    const auto n = std::min<std::int64_t>(batch_size, ds.count() - start);
    Batch batch = make_batch(ds, std::span(indices).subspan(start, n), false, 0);
    Tensor<S> x = batch.x.template cast<S>();
    Tensor<S> logits = model.graph.forward(x, Mode::Infer);
    for (int i = 0; i < int(n); ++i) {
      Eigen::Map<const VecX<S>> row(logits.data() + std::int64_t(i) * logits.c(), logits.c());
      int argmax = 0;
      row.maxCoeff(&argmax);
      correct += (argmax == batch.labels[i]);
    }
  }
  return double(correct) / double(ds.count());
}

struct EpochRecord {
  int epoch = 0;
  std::int64_t step = 0;  // total optimizer steps taken so far
  double lr = 0, loss = 0, train_acc = 0;
  std::optional<double> test_acc;
};

struct TrainHooks {
  // Called after each optimizer step with (step index within run, loss).
  std::function<void(std::int64_t, double)> on_step;
  // Called after each epoch record is finalized.
  std::function<void(const EpochRecord&)> on_epoch;
};

inline void append_metrics(const std::string& path, const EpochRecord& r, bool write_header) {
  std::ofstream out(path, std::ios::app);
  if (write_header) out << "epoch,step,lr,loss,train_acc,test_acc\n";
  out << r.epoch << "," << r.step << "," << r.lr << "," << r.loss << "," << r.train_acc << ",";
  if (r.test_acc) out << *r.test_acc;
  out << "\n";
}

// Checkpoint: the weight container plus optimizer velocities, the epoch
// counter, and the normalization stats the model was trained with.
inline void save_checkpoint(Model<float>& model, SgdOptimizer<float>& opt, int finished_epoch,
                            std::int64_t step, const Dataset& train, const std::string& path) {
  auto records = model_records(model);
  auto& velocities = opt.velocities();
  size_t v = 0;
  for (const auto& p : model.graph.params()) {
    if (!p.grad) continue;
    records.push_back(record_from("opt.v." + p.name, velocities[v].data(), {int(velocities[v].size())}));
    ++v;
  }
  const double meta[2] = {double(finished_epoch), double(step)};
  records.push_back(record_from("trainer.progress", meta, {2}));
  records.push_back(record_from("data.mean", train.mean.data(), {3}));
  records.push_back(record_from("data.std", train.stddev.data(), {3}));
  container::write_file(path, spec_hash(model.spec), records);
}

struct ResumeState {
  int finished_epoch = -1;
  std::int64_t step = 0;
  std::array<float, 3> mean{}, stddev{};
};

inline ResumeState load_checkpoint(Model<float>& model, SgdOptimizer<float>& opt,
                                   const std::string& path) {
  const container::File file = container::read_file(path);
  if (file.spec_hash != spec_hash(model.spec))
    throw std::runtime_error("checkpoint: spec mismatch (saved for a different model spec)");
  for (auto& p : model.graph.params()) {
    const container::Record* r = file.find(p.name);
    if (!r) throw std::runtime_error("checkpoint: missing record " + p.name);
    record_into(*r, p.value, p.dims, p.name);
  }
  auto& velocities = opt.velocities();
  size_t v = 0;
  for (const auto& p : model.graph.params()) {
    if (!p.grad) continue;
    const container::Record* r = file.find("opt.v." + p.name);
    if (!r) throw std::runtime_error("checkpoint: missing optimizer state for " + p.name);
    record_into(*r, velocities[v].data(), {int(velocities[v].size())}, p.name);
    ++v;
  }
  ResumeState state;
  const container::Record* meta = file.find("trainer.progress");
  if (!meta) throw std::runtime_error("checkpoint: missing trainer progress record");
  double progress[2];
  record_into(*meta, progress, {2}, "trainer.progress");
  state.finished_epoch = int(progress[0]);
  state.step = std::int64_t(progress[1]);
  if (const auto* r = file.find("data.mean")) record_into(*r, state.mean.data(), {3}, "data.mean");
  if (const auto* r = file.find("data.std")) record_into(*r, state.stddev.data(), {3}, "data.std");
  return state;
}

struct TrainOptions {
  std::string out_dir;       // empty: no metrics/checkpoint files
  std::string resume_from;   // empty: fresh run
  Dataset* test = nullptr;   // optional test split for per-epoch accuracy
  TrainHooks hooks;
};

// The SGD loop: per epoch, a seeded shuffle into fixed batches, train-mode
// forward, explicit backward, one optimizer step per batch; per-epoch
// metrics, optional evaluation, and a checkpoint.
inline std::vector<EpochRecord> train_loop(Model<float>& model, Dataset& train,
                                           const TrainConfig& config, const TrainOptions& options = {}) {
  if (model.spec.num_classes != train.num_classes)
    throw std::invalid_argument("train: model classes != dataset classes");
  SgdOptimizer<float> opt(model.graph.params());
  int start_epoch = 0;
  std::int64_t step = 0;
  const bool to_files = !options.out_dir.empty();
  const std::string metrics_path = options.out_dir + "/metrics.csv";
  if (to_files) std::filesystem::create_directories(options.out_dir);

  if (!options.resume_from.empty()) {
    const ResumeState st = load_checkpoint(model, opt, options.resume_from);
    start_epoch = st.finished_epoch + 1;
    step = st.step;
    train.mean = st.mean;
    train.stddev = st.stddev;
  }
  if (options.test) {
    options.test->mean = train.mean;
    options.test->stddev = train.stddev;
  }

  std::vector<EpochRecord> records;
  for (int epoch = start_epoch; epoch < config.total_epochs; ++epoch) {
    const double lr = lr_at(config, epoch);
    const auto order = epoch_order(train.count(), config.seed, epoch);
    double loss_sum = 0;
    std::int64_t seen = 0, correct = 0, batches = 0;

    for (std::int64_t start = 0; start < train.count(); start += config.batch_size) {
      const auto n = std::min<std::int64_t>(config.batch_size, train.count() - start);
      Batch batch = make_batch(train, std::span(order).subspan(start, n), config.augment,
                               mix_seed(config.seed, std::uint64_t(epoch), std::uint64_t(batches)));
      Tensor<float> logits = model.graph.forward(batch.x, Mode::Train);
      auto loss = softmax_cross_entropy(logits, batch.labels);
      if (!std::isfinite(loss.loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 " step " + std::to_string(step));
      model.graph.zero_grads();
      model.graph.backward(loss.grad);
      opt.step(model.graph.params(), float(lr), float(config.momentum), float(config.weight_decay));
      loss_sum += double(loss.loss) * double(n);
      correct += loss.correct;
      seen += n;
      ++batches;
      ++step;
      if (options.hooks.on_step) options.hooks.on_step(step, double(loss.loss));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.step = step;
    rec.lr = lr;
    rec.loss = loss_sum / double(seen);
    rec.train_acc = double(correct) / double(seen);
    const bool last = epoch + 1 == config.total_epochs;
    if (options.test && (last || (config.eval_every > 0 && (epoch + 1) % config.eval_every == 0)))
      rec.test_acc = evaluate(model, *options.test);
    records.push_back(rec);
    if (options.hooks.on_epoch) options.hooks.on_epoch(rec);
    if (to_files) {
      append_metrics(metrics_path, rec, epoch == start_epoch && start_epoch == 0);
      save_checkpoint(model, opt, epoch, step, train, options.out_dir + "/checkpoint.sswn");
    }
  }
  return records;
}

}  // namespace seesaw
