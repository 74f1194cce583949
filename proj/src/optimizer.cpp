#include "llab/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace llab {

void OptimizerConfig::validate() const {
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("momentum must be in [0, 1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be >= 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw std::invalid_argument("adam betas must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be positive");
}

OptimizerState OptimizerState::make(const OptimizerConfig& config, std::size_t dim) {
  config.validate();
  OptimizerState s;
  s.config = config;
  s.buf1.assign(dim, 0.0);
  if (config.kind == OptimizerKind::Adam) s.buf2.assign(dim, 0.0);
  return s;
}

bool FreezeMask::any() const {
  for (std::uint8_t f : frozen) {
    if (f) return true;
  }
  return false;
}

FreezeMask freeze_dense_stack(const NetworkSpec& spec, const ParamLayout& layout) {
  // The FC stack starts after the last spatial layer.
  std::size_t first_fc = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerKind k = spec.layers[i].kind;
    if (k == LayerKind::Conv2d || k == LayerKind::MaxPool) first_fc = i + 1;
  }
  FreezeMask mask;
  mask.frozen.assign(layout.blocks.size(), 0);
  for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
    const ParamBlock& block = layout.blocks[b];
    if (block.layer >= first_fc && spec.layers[block.layer].kind == LayerKind::Dense) {
      mask.frozen[b] = 1;
    }
  }
  return mask;
}

void optimizer_step(OptimizerState& state, ParamVector& params, const ParamVector& grad,
                    double lr, const FreezeMask& mask) {
  const std::size_t dim = params.dim();
  if (grad.dim() != dim) {
    throw std::invalid_argument("gradient length " + std::to_string(grad.dim()) +
                                " does not match parameter length " + std::to_string(dim));
  }
  if (state.buf1.size() != dim ||
      (state.config.kind == OptimizerKind::Adam && state.buf2.size() != dim)) {
    throw std::invalid_argument("optimizer state buffers do not match parameter length " +
                                std::to_string(dim));
  }
  if (lr < 0.0) throw std::invalid_argument("learning rate must be >= 0");
  if (!mask.frozen.empty() && mask.frozen.size() != params.layout->blocks.size()) {
    throw std::invalid_argument("freeze mask size does not match layout block count");
  }

  const OptimizerConfig& cfg = state.config;
  state.steps += 1;

  const auto update_range = [&](std::size_t begin, std::size_t end) {
    if (cfg.kind == OptimizerKind::SgdMomentum) {
      for (std::size_t i = begin; i < end; ++i) {
        const double g = grad.values[i] + cfg.weight_decay * params.values[i];
        state.buf1[i] = cfg.momentum * state.buf1[i] + g;
        params.values[i] -= lr * state.buf1[i];
      }
    } else {
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.steps));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.steps));
      for (std::size_t i = begin; i < end; ++i) {
        const double g = grad.values[i] + cfg.weight_decay * params.values[i];
        state.buf1[i] = cfg.beta1 * state.buf1[i] + (1.0 - cfg.beta1) * g;
        state.buf2[i] = cfg.beta2 * state.buf2[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = state.buf1[i] / bc1;
        const double vhat = state.buf2[i] / bc2;
        params.values[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
      }
    }
  };

  if (mask.frozen.empty()) {
    update_range(0, dim);
    return;
  }
  for (std::size_t b = 0; b < params.layout->blocks.size(); ++b) {
    if (mask.is_frozen(b)) continue;
    const ParamBlock& block = params.layout->blocks[b];
    update_range(block.offset, block.offset + block.size);
  }
}

}  // namespace llab
