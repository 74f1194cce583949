#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "llab/tensor.hpp"

namespace llab {

enum class LayerKind { Dense, Conv2d, MaxPool, Relu, SoftmaxOutput };

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  std::size_t in = 0, out = 0;                   // dense
  std::size_t in_ch = 0, out_ch = 0;             // conv2d
  std::size_t kernel = 0, stride = 1, pad = 0;   // conv2d / maxpool

  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                          std::size_t stride = 1, std::size_t pad = 0);
  static LayerSpec maxpool(std::size_t kernel, std::size_t stride);
  static LayerSpec relu();
  static LayerSpec softmax_output();

  bool has_params() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
  std::string describe() const;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;

  // Class count read off the last parameterized layer.
  std::size_t classes() const;
  // Structural checks: exactly one softmax output at the end, positive dims,
  // channel/feature chains consistent where they are statically known.
  void validate() const;
};

enum class ParamRole { Weight, Bias };

struct ParamBlock {
  std::size_t layer = 0;
  ParamRole role = ParamRole::Weight;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct ParamLayout {
  std::vector<ParamBlock> blocks;
  std::size_t total = 0;

  // Index into blocks, or -1 when the layer has no such block.
  int block_index(std::size_t layer, ParamRole role) const;
};

ParamLayout make_layout(const NetworkSpec& spec);
std::shared_ptr<const ParamLayout> shared_layout(const NetworkSpec& spec);

// Flat view of all trainable parameters of one network. Every parameter-space
// operation (interpolation, curves, planes) works on this representation.
struct ParamVector {
  std::shared_ptr<const ParamLayout> layout;
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

ParamVector zeros_like(const ParamVector& p);
ParamVector lincomb(double a, const ParamVector& x, double b, const ParamVector& y);
void axpy(double a, const ParamVector& x, ParamVector& y);  // y += a*x
void scale(double a, ParamVector& x);
double dot(const ParamVector& x, const ParamVector& y);
double norm(const ParamVector& x);

std::vector<double> flatten(const ParamVector& p);
ParamVector unflatten(std::vector<double> values, std::shared_ptr<const ParamLayout> layout);

// He-style init: weights ~ N(0, variance_scale * sqrt(2/fan_in)), biases 0.
// Same seed gives a bitwise identical vector.
ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed, double variance_scale = 1.0);

struct ForwardResult {
  Tensor logits;                              // pre-softmax, (batch, classes)
  std::map<std::size_t, Tensor> activations;  // captured per-layer outputs
};

// Forward pass. `capture` selects layer indices whose (post-nonlinearity)
// outputs are returned; the softmax layer's output is the probability rows.
ForwardResult forward(const NetworkSpec& spec, const ParamVector& params, const Tensor& batch,
                      const std::set<std::size_t>& capture = {});

Tensor softmax_rows(const Tensor& logits, double temperature = 1.0);

enum class LossKind { CrossEntropyHard, SoftTarget };

struct LossSpec {
  LossKind kind = LossKind::CrossEntropyHard;
  double temperature = 1.0;  // soft-target only
};

// One training batch. `labels` feeds the hard cross-entropy loss,
// `soft_targets` (probability rows) the soft-target loss.
struct Batch {
  Tensor x;
  std::vector<int> labels;
  Tensor soft_targets;
};

double loss_only(const NetworkSpec& spec, const ParamVector& params, const Batch& batch,
                 const LossSpec& loss);

struct LossGradResult {
  double loss = 0.0;
  ParamVector grad;
};

LossGradResult loss_and_grad(const NetworkSpec& spec, const ParamVector& params,
                             const Batch& batch, const LossSpec& loss);

// Row-wise losses on precomputed logits (shared by distillation and eval).
double cross_entropy_rows(const Tensor& logits, const std::vector<int>& labels);
double soft_cross_entropy_rows(const Tensor& logits, const Tensor& target_probs, double temperature);

double accuracy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace llab
