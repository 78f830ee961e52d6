#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "sarforge/common.hpp"
#include "sarforge/unet.hpp"

namespace sarforge {

struct SgdConfig {
  double lr0 = 0.1;
  double drop_factor = 0.1;
  int drop_period_epochs = 15;
  double momentum = 0.925;
  int batch_size = 1;
  int epochs = 30;
};

struct AdamConfig {
  double lr0 = 1e-4;
  double drop_factor = 0.1;
  int drop_period_epochs = 5;
  double beta1 = 0.95;
  double beta2 = 0.9;
  double epsilon = 1e-4;
  int batch_size = 1;
  int epochs = 6;
};

using OptimizerConfig = std::variant<SgdConfig, AdamConfig>;

inline void validate_optimizer(const OptimizerConfig& cfg) {
  if (const auto* sgd = std::get_if<SgdConfig>(&cfg)) {
    if (!(sgd->drop_factor > 0.0 && sgd->drop_factor <= 1.0))
      throw SpecError("sgd: drop_factor must be in (0, 1]");
    if (!(sgd->momentum >= 0.0 && sgd->momentum < 1.0))
      throw SpecError("sgd: momentum must be in [0, 1)");
    if (sgd->batch_size < 1) throw SpecError("sgd: batch_size must be >= 1");
    if (sgd->drop_period_epochs < 1) throw SpecError("sgd: drop period must be >= 1");
  } else {
    const auto& adam = std::get<AdamConfig>(cfg);
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0))
      throw SpecError("adam: betas must be in [0, 1)");
    if (!(adam.epsilon > 0.0)) throw SpecError("adam: epsilon must be positive");
    if (adam.batch_size < 1) throw SpecError("adam: batch_size must be >= 1");
    if (!(adam.drop_factor > 0.0 && adam.drop_factor <= 1.0))
      throw SpecError("adam: drop_factor must be in (0, 1]");
    if (adam.drop_period_epochs < 1) throw SpecError("adam: drop period must be >= 1");
  }
}

// step decay: lr0 * drop^floor(epoch / period)
inline double lr_schedule(double lr0, double drop_factor, int drop_period_epochs, int epoch) {
  if (epoch < 0) throw SpecError("lr_schedule: epoch must be >= 0");
  const int steps = epoch / drop_period_epochs;
  double lr = lr0;
  for (int i = 0; i < steps; ++i) lr *= drop_factor;
  return lr;
}

inline double lr_schedule(const OptimizerConfig& cfg, int epoch) {
  if (const auto* sgd = std::get_if<SgdConfig>(&cfg))
    return lr_schedule(sgd->lr0, sgd->drop_factor, sgd->drop_period_epochs, epoch);
  const auto& adam = std::get<AdamConfig>(cfg);
  return lr_schedule(adam.lr0, adam.drop_factor, adam.drop_period_epochs, epoch);
}

// The four published hyperparameter settings, by name.
inline OptimizerConfig optimizer_preset(const std::string& name) {
  if (name == "sgd-3t") return SgdConfig{0.1, 0.1, 15, 0.925, 1, 30};
  if (name == "adam-3t") return AdamConfig{1e-4, 0.1, 5, 0.95, 0.9, 1e-4, 1, 6};
  if (name == "sgd-7t") return SgdConfig{0.1, 0.1, 4, 0.95, 4, 30};
  if (name == "adam-7t") return AdamConfig{1e-4, 0.1, 5, 0.8, 0.995, 1e-6, 16, 6};
  throw SpecError("unknown optimizer preset '" + name +
                  "' (expected sgd-3t, adam-3t, sgd-7t, adam-7t)");
}

inline const char* optimizer_kind(const OptimizerConfig& cfg) {
  return std::holds_alternative<SgdConfig>(cfg) ? "sgd" : "adam";
}

template <typename T>
struct SgdState {
  std::vector<Tensor<T>> velocity;

  static SgdState init(const ParamSet<T>& params) {
    SgdState s;
    for (const auto& t : params.tensors) s.velocity.emplace_back(t.shape);
    return s;
  }
};

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m, v;
  long step_count = 0;

  static AdamState init(const ParamSet<T>& params) {
    AdamState s;
    for (const auto& t : params.tensors) {
      s.m.emplace_back(t.shape);
      s.v.emplace_back(t.shape);
    }
    return s;
  }
};

// v <- momentum*v - lr*g;  w <- w + v
template <typename T>
void sgd_step(ParamSet<T>& params, SgdState<T>& state, const ParamSet<T>& grads, double lr,
              double momentum) {
  for (std::size_t p = 0; p < params.tensors.size(); ++p) {
    auto& w = params.tensors[p].data;
    auto& v = state.velocity[p].data;
    const auto& g = grads.tensors[p].data;
    if (v.size() != g.size() || w.size() != g.size())
      throw ShapeError("sgd_step: state shape mismatch " +
                       shape_string(state.velocity[p].shape) + " vs " +
                       shape_string(grads.tensors[p].shape));
    const T mu = static_cast<T>(momentum), eta = static_cast<T>(lr);
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = mu * v[i] - eta * g[i];
      w[i] += v[i];
    }
  }
}

// standard bias-corrected Adam update
template <typename T>
void adam_step(ParamSet<T>& params, AdamState<T>& state, const ParamSet<T>& grads, double lr,
               const AdamConfig& cfg) {
  ++state.step_count;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  for (std::size_t p = 0; p < params.tensors.size(); ++p) {
    auto& w = params.tensors[p].data;
    auto& m = state.m[p].data;
    auto& v = state.v[p].data;
    const auto& g = grads.tensors[p].data;
    if (m.size() != g.size() || w.size() != g.size())
      throw ShapeError("adam_step: state shape mismatch " + shape_string(state.m[p].shape) +
                       " vs " + shape_string(grads.tensors[p].shape));
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = b1 * static_cast<double>(m[i]) + (1.0 - b1) * gi;
      const double vi = b2 * static_cast<double>(v[i]) + (1.0 - b2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double m_hat = mi / corr1;
      const double v_hat = vi / corr2;
      w[i] = static_cast<T>(static_cast<double>(w[i]) -
                            lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

}  // namespace sarforge
