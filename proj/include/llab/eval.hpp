#pragma once

#include "llab/datasets.hpp"
#include "llab/network.hpp"

namespace llab {

struct SplitMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct EvalMetrics {
  SplitMetrics train;
  SplitMetrics val;
};

// Deterministic full-split evaluation: fixed order, fixed batch chunking, so
// repeated calls on the same parameters are bitwise identical.
SplitMetrics evaluate_split(const NetworkSpec& spec, const ParamVector& params, const Tensor& x,
                            const std::vector<int>& y, std::size_t batch_cap = 256);

EvalMetrics evaluate_params(const NetworkSpec& spec, const ParamVector& params, const Dataset& data,
                            std::size_t batch_cap = 256);

Tensor slice_batch(const Tensor& x, std::size_t begin, std::size_t end);
Tensor gather_batch(const Tensor& x, const std::vector<std::size_t>& indices);

}  // namespace llab
