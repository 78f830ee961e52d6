#pragma once

#include <algorithm>
#include <cstdint>
#include <variant>
#include <vector>

#include "sarforge/checkpoint.hpp"
#include "sarforge/dataset.hpp"
#include "sarforge/optim.hpp"
#include "sarforge/unet.hpp"

namespace sarforge {

struct TrainOptions {
  UNetConfig arch;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  int epochs_override = -1;  // < 0 keeps the preset's epoch count
};

struct EpochRecord {
  int epoch = 0;
  double train_rmse = 0.0;
  double val_rmse = 0.0;
  double lr = 0.0;
};

struct TrainOutcome {
  Checkpoint best;
  Checkpoint final_state;
  std::vector<EpochRecord> history;
  int best_epoch = -1;
};

namespace detail {

inline Tensor<float> input_tensor(const Sample& s) {
  Tensor<float> t({1, s.height, s.width});
  t.data = s.input;
  return t;
}

inline Tensor<float> target_tensor(const Sample& s) {
  Tensor<float> t({1, s.height, s.width});
  t.data = s.target;
  return t;
}

inline void zero_params(ParamSet<float>& p) {
  for (auto& t : p.tensors) std::fill(t.data.begin(), t.data.end(), 0.0f);
}

}  // namespace detail

inline double validation_mse(const ParamSet<float>& params, const Dataset& ds,
                             const std::vector<int>& indices) {
  double acc = 0.0;
  for (int idx : indices) {
    const Sample& s = ds.samples[static_cast<std::size_t>(idx)];
    const auto pred = unet_forward(params, detail::input_tensor(s));
    acc += mse_loss(pred, detail::target_tensor(s));
  }
  return acc / static_cast<double>(indices.size());
}

// Deterministic training loop: He init from the seed, seeded shuffle per
// epoch, mini-batch gradient averaging, per-epoch validation, best-epoch
// snapshot. History rows are appended to `history_sink` as they complete so
// a divergence abort still leaves the partial record.
inline TrainOutcome train(const Dataset& ds, const SplitIndex& split_idx,
                          const TrainOptions& opts,
                          std::vector<EpochRecord>* history_sink = nullptr) {
  if (ds.samples.empty()) throw SpecError("train: empty dataset");
  if (split_idx.train.empty()) throw SpecError("train: empty training split");
  for (const auto* part : {&split_idx.train, &split_idx.val, &split_idx.test})
    for (int idx : *part)
      if (idx < 0 || idx >= static_cast<int>(ds.samples.size()))
        throw SpecError("train: split index " + std::to_string(idx) + " out of range");
  validate_optimizer(opts.optimizer);

  const int preset_epochs = std::visit([](const auto& c) { return c.epochs; }, opts.optimizer);
  const int epochs = opts.epochs_override >= 0 ? opts.epochs_override : preset_epochs;
  const int batch_size = std::visit([](const auto& c) { return c.batch_size; }, opts.optimizer);

  ParamSet<float> params = init_params<float>(opts.arch, opts.seed);
  ParamSet<float> grads = ParamSet<float>::zeros(opts.arch);

  const bool is_sgd = std::holds_alternative<SgdConfig>(opts.optimizer);
  SgdState<float> sgd_state = SgdState<float>::init(params);
  AdamState<float> adam_state = AdamState<float>::init(params);

  TrainOutcome out;
  Rng shuffle_rng(opts.seed ^ 0x9e3779b97f4a7c15ull);

  std::uint64_t steps_done = 0;
  auto snapshot = [&](std::uint32_t epoch) {
    Checkpoint cp;
    cp.config = opts.arch;
    cp.params = params;
    cp.opt_kind = is_sgd ? OptimizerKind::kSgd : OptimizerKind::kAdam;
    if (is_sgd) {
      cp.opt_m = sgd_state.velocity;
    } else {
      cp.opt_m = adam_state.m;
      cp.opt_v = adam_state.v;
    }
    cp.step_count = steps_done;
    cp.epoch = epoch;
    cp.rng_seed = opts.seed;
    return cp;
  };

  std::vector<int> order = split_idx.train;
  double best_val = 0.0;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double lr = lr_schedule(opts.optimizer, epoch);
    order = split_idx.train;
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, i))]);

    double train_mse_acc = 0.0;
    const int n_train = static_cast<int>(order.size());
    int batch_index = 0;
    for (int start = 0; start < n_train; start += batch_size, ++batch_index) {
      const int n_batch = std::min(batch_size, n_train - start);
      detail::zero_params(grads);
      double batch_loss = 0.0;
      for (int b = 0; b < n_batch; ++b) {
        const Sample& s = ds.samples[static_cast<std::size_t>(order[static_cast<std::size_t>(start + b)])];
        UNetCache<float> cache;
        const auto pred = unet_forward(params, detail::input_tensor(s), &cache);
        const double loss = mse_loss(pred, detail::target_tensor(s));
        if (!std::isfinite(loss)) throw DivergenceError(epoch, batch_index);
        batch_loss += loss;
        unet_backward(params, cache, mse_loss_grad(pred, detail::target_tensor(s)), grads);
      }
      train_mse_acc += batch_loss;
      if (n_batch > 1) {
        const float inv = 1.0f / static_cast<float>(n_batch);
        for (auto& t : grads.tensors)
          for (auto& v : t.data) v *= inv;
      }
      if (is_sgd)
        sgd_step(params, sgd_state, grads, lr, std::get<SgdConfig>(opts.optimizer).momentum);
      else
        adam_step(params, adam_state, grads, lr, std::get<AdamConfig>(opts.optimizer));
      ++steps_done;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_rmse = std::sqrt(train_mse_acc / n_train);
    rec.val_rmse =
        split_idx.val.empty() ? 0.0 : std::sqrt(validation_mse(params, ds, split_idx.val));
    out.history.push_back(rec);
    if (history_sink) history_sink->push_back(rec);

    if (out.best_epoch < 0 || rec.val_rmse < best_val) {
      best_val = rec.val_rmse;
      out.best_epoch = epoch;
      out.best = snapshot(static_cast<std::uint32_t>(epoch));
    }
  }

  out.final_state = snapshot(static_cast<std::uint32_t>(epochs));
  if (out.best_epoch < 0) out.best = out.final_state;  // epochs == 0
  return out;
}

}  // namespace sarforge
