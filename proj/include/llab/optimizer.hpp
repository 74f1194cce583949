#pragma once

#include <cstdint>
#include <vector>

#include "llab/network.hpp"

namespace llab {

enum class OptimizerKind { SgdMomentum, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::SgdMomentum;
  double momentum = 0.9;      // heavy-ball coefficient (sgd)
  double weight_decay = 0.0;  // L2 term added to the gradient before momentum
  double beta1 = 0.9;         // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct OptimizerState {
  OptimizerConfig config;
  std::vector<double> buf1;  // momentum buffer / adam first moment
  std::vector<double> buf2;  // adam second moment (empty for sgd)
  std::uint64_t steps = 0;   // adam bias-correction counter

  static OptimizerState make(const OptimizerConfig& config, std::size_t dim);
};

// Per-block freeze flags aligned with ParamLayout::blocks. A frozen block is
// skipped entirely: neither its parameters nor its optimizer buffers move,
// which makes freezing behave identically under SGD and Adam.
struct FreezeMask {
  std::vector<std::uint8_t> frozen;  // empty mask freezes nothing

  static FreezeMask none() { return {}; }
  bool is_frozen(std::size_t block) const {
    return block < frozen.size() && frozen[block] != 0;
  }
  bool any() const;
};

// Mask freezing the trailing fully-connected stack: every dense layer after
// the last conv/pool layer.
FreezeMask freeze_dense_stack(const NetworkSpec& spec, const ParamLayout& layout);

// SGD: v <- mu*v + (g + wd*w); w <- w - lr*v.
// Adam: coupled decay g' = g + wd*w, bias-corrected moments, w <- w - lr*m^/(sqrt(v^)+eps).
void optimizer_step(OptimizerState& state, ParamVector& params, const ParamVector& grad,
                    double lr, const FreezeMask& mask = FreezeMask::none());

}  // namespace llab
