#include "llab/eval.hpp"

#include <algorithm>
#include <stdexcept>

namespace llab {

Tensor slice_batch(const Tensor& x, std::size_t begin, std::size_t end) {
  if (begin >= end || end > x.dim(0)) throw std::invalid_argument("bad batch slice");
  std::vector<std::size_t> shape = x.shape;
  shape[0] = end - begin;
  Tensor out(shape);
  const std::size_t per = x.sample_size();
  std::copy(x.data() + begin * per, x.data() + end * per, out.data());
  return out;
}

Tensor gather_batch(const Tensor& x, const std::vector<std::size_t>& indices) {
  std::vector<std::size_t> shape = x.shape;
  shape[0] = indices.size();
  Tensor out(shape);
  const std::size_t per = x.sample_size();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= x.dim(0)) throw std::invalid_argument("gather index out of range");
    std::copy(x.data() + indices[i] * per, x.data() + (indices[i] + 1) * per,
              out.data() + i * per);
  }
  return out;
}

SplitMetrics evaluate_split(const NetworkSpec& spec, const ParamVector& params, const Tensor& x,
                            const std::vector<int>& y, std::size_t batch_cap) {
  const std::size_t n = x.dim(0);
  if (y.size() != n) throw std::invalid_argument("labels do not match split size");
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < n; begin += batch_cap) {
    const std::size_t end = std::min(n, begin + batch_cap);
    const Tensor chunk = (begin == 0 && end == n) ? x : slice_batch(x, begin, end);
    ForwardResult fwd = forward(spec, params, chunk);
    const std::vector<int> labels(y.begin() + begin, y.begin() + end);
    loss_sum += cross_entropy_rows(fwd.logits, labels) * static_cast<double>(end - begin);
    correct += static_cast<std::size_t>(
        accuracy(fwd.logits, labels) * static_cast<double>(end - begin) + 0.5);
  }
  SplitMetrics m;
  m.loss = loss_sum / static_cast<double>(n);
  m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return m;
}

EvalMetrics evaluate_params(const NetworkSpec& spec, const ParamVector& params, const Dataset& data,
                            std::size_t batch_cap) {
  EvalMetrics m;
  m.train = evaluate_split(spec, params, data.train_x, data.train_y, batch_cap);
  m.val = evaluate_split(spec, params, data.val_x, data.val_y, batch_cap);
  return m;
}

}  // namespace llab
