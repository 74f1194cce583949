#include "llab/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "llab/errors.hpp"
#include "llab/rng.hpp"

namespace llab {

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.in = in;
  s.out = out;
  return s;
}

LayerSpec LayerSpec::conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                            std::size_t stride, std::size_t pad) {
  LayerSpec s;
  s.kind = LayerKind::Conv2d;
  s.in_ch = in_ch;
  s.out_ch = out_ch;
  s.kernel = kernel;
  s.stride = stride;
  s.pad = pad;
  return s;
}

LayerSpec LayerSpec::maxpool(std::size_t kernel, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::Relu;
  return s;
}

LayerSpec LayerSpec::softmax_output() {
  LayerSpec s;
  s.kind = LayerKind::SoftmaxOutput;
  return s;
}

std::string LayerSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case LayerKind::Dense:
      os << "dense " << in << "->" << out;
      break;
    case LayerKind::Conv2d:
      os << "conv2d " << in_ch << "->" << out_ch << " k" << kernel << " s" << stride << " p"
         << pad;
      break;
    case LayerKind::MaxPool:
      os << "maxpool k" << kernel << " s" << stride;
      break;
    case LayerKind::Relu:
      os << "relu";
      break;
    case LayerKind::SoftmaxOutput:
      os << "softmax-output";
      break;
  }
  return os.str();
}

std::size_t NetworkSpec::classes() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    if (it->kind == LayerKind::Dense) return it->out;
    if (it->kind == LayerKind::Conv2d) return it->out_ch;
  }
  throw std::invalid_argument("network has no parameterized layer");
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw std::invalid_argument("network has no layers");
  std::size_t softmax_count = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const auto fail = [&](const std::string& why) {
      throw std::invalid_argument("layer " + std::to_string(i) + " (" + l.describe() + "): " + why);
    };
    switch (l.kind) {
      case LayerKind::Dense:
        if (l.in == 0 || l.out == 0) fail("dense dimensions must be positive");
        break;
      case LayerKind::Conv2d:
        if (l.in_ch == 0 || l.out_ch == 0) fail("conv channels must be positive");
        if (l.kernel == 0 || l.stride == 0) fail("conv kernel and stride must be positive");
        break;
      case LayerKind::MaxPool:
        if (l.kernel == 0 || l.stride == 0) fail("pool kernel and stride must be positive");
        break;
      case LayerKind::Relu:
        break;
      case LayerKind::SoftmaxOutput:
        ++softmax_count;
        if (i + 1 != layers.size()) fail("softmax output must be the last layer");
        break;
    }
  }
  if (softmax_count != 1) {
    throw std::invalid_argument("network needs exactly one softmax output layer at the end");
  }

  // Channel/feature chain, as far as it is statically known.
  std::size_t known_features = 0;  // 0 = unknown
  std::size_t known_channels = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.kind) {
      case LayerKind::Dense:
        if (known_features != 0 && known_features != l.in) {
          throw std::invalid_argument("layer " + std::to_string(i) + " (" + l.describe() +
                                      "): expects " + std::to_string(l.in) +
                                      " inputs but previous layer provides " +
                                      std::to_string(known_features));
        }
        known_features = l.out;
        known_channels = 0;
        break;
      case LayerKind::Conv2d:
        if (known_features != 0) {
          throw std::invalid_argument("layer " + std::to_string(i) + " (" + l.describe() +
                                      "): conv2d cannot follow a dense layer");
        }
        if (known_channels != 0 && known_channels != l.in_ch) {
          throw std::invalid_argument("layer " + std::to_string(i) + " (" + l.describe() +
                                      "): expects " + std::to_string(l.in_ch) +
                                      " channels but previous layer provides " +
                                      std::to_string(known_channels));
        }
        known_channels = l.out_ch;
        break;
      case LayerKind::MaxPool:
      case LayerKind::Relu:
      case LayerKind::SoftmaxOutput:
        break;
    }
  }
  classes();  // must exist
}

int ParamLayout::block_index(std::size_t layer, ParamRole role) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].layer == layer && blocks[i].role == role) return static_cast<int>(i);
  }
  return -1;
}

ParamLayout make_layout(const NetworkSpec& spec) {
  ParamLayout layout;
  std::size_t offset = 0;
  const auto add = [&](std::size_t layer, ParamRole role, std::vector<std::size_t> shape) {
    ParamBlock b;
    b.layer = layer;
    b.role = role;
    b.shape = std::move(shape);
    b.offset = offset;
    b.size = shape_product(b.shape);
    offset += b.size;
    layout.blocks.push_back(std::move(b));
  };
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (l.kind == LayerKind::Dense) {
      add(i, ParamRole::Weight, {l.out, l.in});
      add(i, ParamRole::Bias, {l.out});
    } else if (l.kind == LayerKind::Conv2d) {
      add(i, ParamRole::Weight, {l.out_ch, l.in_ch, l.kernel, l.kernel});
      add(i, ParamRole::Bias, {l.out_ch});
    }
  }
  layout.total = offset;
  return layout;
}

std::shared_ptr<const ParamLayout> shared_layout(const NetworkSpec& spec) {
  return std::make_shared<const ParamLayout>(make_layout(spec));
}

static void require_same_layout(const ParamVector& x, const ParamVector& y) {
  if (x.dim() != y.dim()) {
    throw std::invalid_argument("parameter vectors have different lengths (" +
                                std::to_string(x.dim()) + " vs " + std::to_string(y.dim()) + ")");
  }
}

ParamVector zeros_like(const ParamVector& p) {
  ParamVector z;
  z.layout = p.layout;
  z.values.assign(p.values.size(), 0.0);
  return z;
}

ParamVector lincomb(double a, const ParamVector& x, double b, const ParamVector& y) {
  require_same_layout(x, y);
  ParamVector r;
  r.layout = x.layout;
  r.values.resize(x.values.size());
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    r.values[i] = a * x.values[i] + b * y.values[i];
  }
  return r;
}

void axpy(double a, const ParamVector& x, ParamVector& y) {
  require_same_layout(x, y);
  for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += a * x.values[i];
}

void scale(double a, ParamVector& x) {
  for (double& v : x.values) v *= a;
}

double dot(const ParamVector& x, const ParamVector& y) {
  require_same_layout(x, y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) s += x.values[i] * y.values[i];
  return s;
}

double norm(const ParamVector& x) { return std::sqrt(dot(x, x)); }

std::vector<double> flatten(const ParamVector& p) { return p.values; }

ParamVector unflatten(std::vector<double> values, std::shared_ptr<const ParamLayout> layout) {
  if (!layout) throw std::invalid_argument("unflatten: null layout");
  if (values.size() != layout->total) {
    throw std::invalid_argument("unflatten: got " + std::to_string(values.size()) +
                                " values for a layout of " + std::to_string(layout->total));
  }
  ParamVector p;
  p.layout = std::move(layout);
  p.values = std::move(values);
  return p;
}

ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed, double variance_scale) {
  if (!(variance_scale > 0.0)) throw std::invalid_argument("variance_scale must be positive");
  auto layout = shared_layout(spec);
  ParamVector p;
  p.layout = layout;
  p.values.assign(layout->total, 0.0);
  Rng rng(seed);
  for (const ParamBlock& b : layout->blocks) {
    if (b.role != ParamRole::Weight) continue;  // biases stay 0
    const LayerSpec& l = spec.layers[b.layer];
    const std::size_t fan_in =
        (l.kind == LayerKind::Dense) ? l.in : l.in_ch * l.kernel * l.kernel;
    const double stddev = variance_scale * std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < b.size; ++i) {
      p.values[b.offset + i] = rng.normal(0.0, stddev);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void layer_error(std::size_t index, const LayerSpec& l, const std::string& why) {
  throw std::invalid_argument("layer " + std::to_string(index) + " (" + l.describe() + "): " + why);
}

Tensor dense_forward(const Tensor& x, const double* w, const double* b, const LayerSpec& l,
                     std::size_t index) {
  const std::size_t n = x.dim(0);
  const std::size_t feat = x.sample_size();
  if (feat != l.in) {
    layer_error(index, l,
                "expected " + std::to_string(l.in) + " features per sample, got " +
                    std::to_string(feat) + " from input " + x.shape_str());
  }
  Tensor y({n, l.out});
  for (std::size_t s = 0; s < n; ++s) {
    const double* xs = x.data() + s * feat;
    double* ys = y.data() + s * l.out;
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* wo = w + o * l.in;
      double acc = b[o];
      for (std::size_t i = 0; i < l.in; ++i) acc += wo[i] * xs[i];
      ys[o] = acc;
    }
  }
  return y;
}

struct ConvDims {
  std::size_t n, h, w, oh, ow;
};

ConvDims conv_dims(const Tensor& x, const LayerSpec& l, std::size_t index) {
  if (x.rank() != 4) {
    layer_error(index, l, "expected a 4-D (batch, channels, h, w) input, got " + x.shape_str());
  }
  if (x.dim(1) != l.in_ch) {
    layer_error(index, l,
                "expected " + std::to_string(l.in_ch) + " input channels, got " +
                    std::to_string(x.dim(1)));
  }
  ConvDims d;
  d.n = x.dim(0);
  d.h = x.dim(2);
  d.w = x.dim(3);
  const std::size_t padded_h = d.h + 2 * l.pad;
  const std::size_t padded_w = d.w + 2 * l.pad;
  if (padded_h < l.kernel || padded_w < l.kernel) {
    layer_error(index, l, "kernel larger than padded input " + x.shape_str());
  }
  d.oh = (padded_h - l.kernel) / l.stride + 1;
  d.ow = (padded_w - l.kernel) / l.stride + 1;
  return d;
}

Tensor conv_forward(const Tensor& x, const double* wgt, const double* bias, const LayerSpec& l,
                    std::size_t index) {
  const ConvDims d = conv_dims(x, l, index);
  Tensor y({d.n, l.out_ch, d.oh, d.ow});
  const std::size_t k = l.kernel;
  for (std::size_t s = 0; s < d.n; ++s) {
    const double* xs = x.data() + s * l.in_ch * d.h * d.w;
    double* ys = y.data() + s * l.out_ch * d.oh * d.ow;
    for (std::size_t oc = 0; oc < l.out_ch; ++oc) {
      for (std::size_t oy = 0; oy < d.oh; ++oy) {
        for (std::size_t ox = 0; ox < d.ow; ++ox) {
          double acc = bias[oc];
          for (std::size_t ic = 0; ic < l.in_ch; ++ic) {
            const double* xc = xs + ic * d.h * d.w;
            const double* wc = wgt + ((oc * l.in_ch + ic) * k) * k;
            for (std::size_t ky = 0; ky < k; ++ky) {
              const std::ptrdiff_t iy =
                  static_cast<std::ptrdiff_t>(oy * l.stride + ky) - static_cast<std::ptrdiff_t>(l.pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * l.stride + kx) -
                                          static_cast<std::ptrdiff_t>(l.pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
                acc += wc[ky * k + kx] * xc[iy * d.w + ix];
              }
            }
          }
          ys[(oc * d.oh + oy) * d.ow + ox] = acc;
        }
      }
    }
  }
  return y;
}

Tensor maxpool_forward(const Tensor& x, const LayerSpec& l, std::size_t index,
                       std::vector<std::size_t>* src) {
  if (x.rank() != 4) {
    layer_error(index, l, "expected a 4-D (batch, channels, h, w) input, got " + x.shape_str());
  }
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h < l.kernel || w < l.kernel) {
    layer_error(index, l, "pool window larger than input " + x.shape_str());
  }
  const std::size_t oh = (h - l.kernel) / l.stride + 1;
  const std::size_t ow = (w - l.kernel) / l.stride + 1;
  Tensor y({n, c, oh, ow});
  if (src) src->assign(y.size(), 0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* xc = x.data() + (s * c + ch) * h * w;
      const std::size_t base_in = (s * c + ch) * h * w;
      double* yc = y.data() + (s * c + ch) * oh * ow;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          std::size_t best = (oy * l.stride) * w + ox * l.stride;
          double best_v = xc[best];
          for (std::size_t ky = 0; ky < l.kernel; ++ky) {
            for (std::size_t kx = 0; kx < l.kernel; ++kx) {
              const std::size_t idx = (oy * l.stride + ky) * w + (ox * l.stride + kx);
              if (xc[idx] > best_v) {  // ties keep the first element, deterministic
                best_v = xc[idx];
                best = idx;
              }
            }
          }
          yc[oy * ow + ox] = best_v;
          if (src) (*src)[(s * c + ch) * oh * ow + oy * ow + ox] = base_in + best;
        }
      }
    }
  }
  return y;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values) v = v > 0.0 ? v : 0.0;
  return y;
}

// Runs the stack up to (and excluding) the softmax layer; returns logits.
Tensor run_stack(const NetworkSpec& spec, const ParamVector& params, const Tensor& batch,
                 std::vector<Tensor>* outputs, std::vector<std::vector<std::size_t>>* pool_src) {
  if (batch.rank() < 2) {
    throw std::invalid_argument("input batch must have a leading batch axis, got shape " +
                                batch.shape_str());
  }
  if (params.dim() != params.layout->total) {
    throw std::invalid_argument("parameter vector length does not match its layout");
  }
  const Tensor* cur = &batch;
  Tensor logits;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    Tensor out;
    std::vector<std::size_t> src;
    switch (l.kind) {
      case LayerKind::Dense: {
        const int wi = params.layout->block_index(i, ParamRole::Weight);
        const int bi = params.layout->block_index(i, ParamRole::Bias);
        out = dense_forward(*cur, params.values.data() + params.layout->blocks[wi].offset,
                            params.values.data() + params.layout->blocks[bi].offset, l, i);
        break;
      }
      case LayerKind::Conv2d: {
        const int wi = params.layout->block_index(i, ParamRole::Weight);
        const int bi = params.layout->block_index(i, ParamRole::Bias);
        out = conv_forward(*cur, params.values.data() + params.layout->blocks[wi].offset,
                           params.values.data() + params.layout->blocks[bi].offset, l, i);
        break;
      }
      case LayerKind::MaxPool:
        out = maxpool_forward(*cur, l, i, pool_src ? &src : nullptr);
        break;
      case LayerKind::Relu:
        out = relu_forward(*cur);
        break;
      case LayerKind::SoftmaxOutput: {
        if (cur->rank() != 2) {
          layer_error(i, l, "logits must be 2-D (batch, classes), got " + cur->shape_str());
        }
        logits = *cur;
        out = softmax_rows(logits);
        break;
      }
    }
    if (pool_src) pool_src->push_back(std::move(src));
    if (outputs) {
      outputs->push_back(std::move(out));
      cur = &outputs->back();
    } else {
      static thread_local Tensor scratch;
      scratch = std::move(out);
      cur = &scratch;
    }
  }
  return logits;
}

}  // namespace

Tensor softmax_rows(const Tensor& logits, double temperature) {
  if (logits.rank() != 2) {
    throw std::invalid_argument("softmax expects 2-D logits, got " + logits.shape_str());
  }
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  Tensor p({n, c});
  for (std::size_t s = 0; s < n; ++s) {
    const double* z = logits.data() + s * c;
    double* ps = p.data() + s * c;
    double m = z[0];
    for (std::size_t j = 1; j < c; ++j) m = std::max(m, z[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      ps[j] = std::exp((z[j] - m) / temperature);
      sum += ps[j];
    }
    for (std::size_t j = 0; j < c; ++j) ps[j] /= sum;
  }
  return p;
}

ForwardResult forward(const NetworkSpec& spec, const ParamVector& params, const Tensor& batch,
                      const std::set<std::size_t>& capture) {
  spec.validate();
  for (std::size_t idx : capture) {
    if (idx >= spec.layers.size()) {
      throw std::invalid_argument("capture index " + std::to_string(idx) +
                                  " out of range for a " + std::to_string(spec.layers.size()) +
                                  "-layer network");
    }
  }
  std::vector<Tensor> outputs;
  ForwardResult r;
  r.logits = run_stack(spec, params, batch, &outputs, nullptr);
  for (std::size_t idx : capture) r.activations[idx] = outputs[idx];
  return r;
}

// ---------------------------------------------------------------------------
// Losses and reverse-mode gradients
// ---------------------------------------------------------------------------

namespace {

void check_finite_loss(double loss) {
  if (!std::isfinite(loss)) {
    throw OverflowError("loss overflow: evaluation produced a non-finite value");
  }
}

// Stable per-row log-softmax writes into `logp` (length c).
void log_softmax_row(const double* z, std::size_t c, double temperature, double* logp) {
  double m = z[0];
  for (std::size_t j = 1; j < c; ++j) m = std::max(m, z[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < c; ++j) sum += std::exp((z[j] - m) / temperature);
  const double lse = std::log(sum) + m / temperature;
  for (std::size_t j = 0; j < c; ++j) logp[j] = z[j] / temperature - lse;
}

double ce_hard(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits) {
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (labels.size() != n) {
    throw std::invalid_argument("got " + std::to_string(labels.size()) + " labels for a batch of " +
                                std::to_string(n));
  }
  std::vector<double> logp(c);
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const int y = labels[s];
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw std::invalid_argument("label " + std::to_string(y) + " out of range for " +
                                  std::to_string(c) + " classes");
    }
    const double* z = logits.data() + s * c;
    log_softmax_row(z, c, 1.0, logp.data());
    total -= logp[y];
    if (dlogits) {
      double* d = dlogits->data() + s * c;
      for (std::size_t j = 0; j < c; ++j) {
        d[j] = (std::exp(logp[j]) - (static_cast<std::size_t>(y) == j ? 1.0 : 0.0)) /
               static_cast<double>(n);
      }
    }
  }
  return total / static_cast<double>(n);
}

double ce_soft(const Tensor& logits, const Tensor& targets, double temperature, Tensor* dlogits) {
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (targets.rank() != 2 || targets.dim(0) != n || targets.dim(1) != c) {
    throw std::invalid_argument("soft targets " + targets.shape_str() +
                                " do not match logits " + logits.shape_str());
  }
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  std::vector<double> logp(c);
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double* z = logits.data() + s * c;
    const double* t = targets.data() + s * c;
    log_softmax_row(z, c, temperature, logp.data());
    for (std::size_t j = 0; j < c; ++j) total -= t[j] * logp[j];
    if (dlogits) {
      double* d = dlogits->data() + s * c;
      for (std::size_t j = 0; j < c; ++j) {
        d[j] = (std::exp(logp[j]) - t[j]) / (static_cast<double>(n) * temperature);
      }
    }
  }
  return total / static_cast<double>(n);
}

double loss_rows(const Tensor& logits, const Batch& batch, const LossSpec& loss, Tensor* dlogits) {
  double value = 0.0;
  switch (loss.kind) {
    case LossKind::CrossEntropyHard:
      value = ce_hard(logits, batch.labels, dlogits);
      break;
    case LossKind::SoftTarget:
      value = ce_soft(logits, batch.soft_targets, loss.temperature, dlogits);
      break;
  }
  check_finite_loss(value);
  return value;
}

void dense_backward(const Tensor& x, const Tensor& dy, const double* w, const LayerSpec& l,
                    double* dw, double* db, Tensor* dx) {
  const std::size_t n = x.dim(0);
  const std::size_t feat = x.sample_size();
  for (std::size_t s = 0; s < n; ++s) {
    const double* xs = x.data() + s * feat;
    const double* ds = dy.data() + s * l.out;
    for (std::size_t o = 0; o < l.out; ++o) {
      const double g = ds[o];
      db[o] += g;
      double* dwo = dw + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) dwo[i] += g * xs[i];
    }
    if (dx) {
      double* dxs = dx->data() + s * feat;
      for (std::size_t o = 0; o < l.out; ++o) {
        const double g = ds[o];
        const double* wo = w + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) dxs[i] += g * wo[i];
      }
    }
  }
}

void conv_backward(const Tensor& x, const Tensor& dy, const double* wgt, const LayerSpec& l,
                   double* dw, double* db, Tensor* dx) {
  const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = dy.dim(2), ow = dy.dim(3);
  const std::size_t k = l.kernel;
  for (std::size_t s = 0; s < n; ++s) {
    const double* xs = x.data() + s * l.in_ch * h * w;
    const double* dys = dy.data() + s * l.out_ch * oh * ow;
    double* dxs = dx ? dx->data() + s * l.in_ch * h * w : nullptr;
    for (std::size_t oc = 0; oc < l.out_ch; ++oc) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double g = dys[(oc * oh + oy) * ow + ox];
          db[oc] += g;
          for (std::size_t ic = 0; ic < l.in_ch; ++ic) {
            const double* xc = xs + ic * h * w;
            double* dwc = dw + ((oc * l.in_ch + ic) * k) * k;
            const double* wc = wgt + ((oc * l.in_ch + ic) * k) * k;
            double* dxc = dxs ? dxs + ic * h * w : nullptr;
            for (std::size_t ky = 0; ky < k; ++ky) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * l.stride + ky) -
                                        static_cast<std::ptrdiff_t>(l.pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * l.stride + kx) -
                                          static_cast<std::ptrdiff_t>(l.pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                dwc[ky * k + kx] += g * xc[iy * w + ix];
                if (dxc) dxc[iy * w + ix] += g * wc[ky * k + kx];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

double cross_entropy_rows(const Tensor& logits, const std::vector<int>& labels) {
  const double v = ce_hard(logits, labels, nullptr);
  check_finite_loss(v);
  return v;
}

double soft_cross_entropy_rows(const Tensor& logits, const Tensor& target_probs,
                               double temperature) {
  const double v = ce_soft(logits, target_probs, temperature, nullptr);
  check_finite_loss(v);
  return v;
}

double loss_only(const NetworkSpec& spec, const ParamVector& params, const Batch& batch,
                 const LossSpec& loss) {
  const Tensor logits = run_stack(spec, params, batch.x, nullptr, nullptr);
  return loss_rows(logits, batch, loss, nullptr);
}

LossGradResult loss_and_grad(const NetworkSpec& spec, const ParamVector& params,
                             const Batch& batch, const LossSpec& loss) {
  std::vector<Tensor> outputs;
  std::vector<std::vector<std::size_t>> pool_src;
  const Tensor logits = run_stack(spec, params, batch.x, &outputs, &pool_src);

  LossGradResult result;
  result.grad = zeros_like(params);
  Tensor dlogits({logits.dim(0), logits.dim(1)});
  result.loss = loss_rows(logits, batch, loss, &dlogits);

  const std::size_t softmax_index = spec.layers.size() - 1;
  Tensor dcur = std::move(dlogits);
  for (std::size_t ri = softmax_index; ri-- > 0;) {
    const LayerSpec& l = spec.layers[ri];
    const Tensor& input = (ri == 0) ? batch.x : outputs[ri - 1];
    switch (l.kind) {
      case LayerKind::Dense: {
        const ParamBlock& wb = params.layout->blocks[params.layout->block_index(ri, ParamRole::Weight)];
        const ParamBlock& bb = params.layout->blocks[params.layout->block_index(ri, ParamRole::Bias)];
        Tensor dx(input.shape, 0.0);
        dense_backward(input, dcur, params.values.data() + wb.offset, l,
                       result.grad.values.data() + wb.offset,
                       result.grad.values.data() + bb.offset, &dx);
        dcur = std::move(dx);
        break;
      }
      case LayerKind::Conv2d: {
        const ParamBlock& wb = params.layout->blocks[params.layout->block_index(ri, ParamRole::Weight)];
        const ParamBlock& bb = params.layout->blocks[params.layout->block_index(ri, ParamRole::Bias)];
        Tensor dx(input.shape, 0.0);
        conv_backward(input, dcur, params.values.data() + wb.offset, l,
                      result.grad.values.data() + wb.offset,
                      result.grad.values.data() + bb.offset, &dx);
        dcur = std::move(dx);
        break;
      }
      case LayerKind::Relu: {
        Tensor dx(input.shape, 0.0);
        for (std::size_t i = 0; i < dx.size(); ++i) {
          dx.values[i] = input.values[i] > 0.0 ? dcur.values[i] : 0.0;
        }
        dcur = std::move(dx);
        break;
      }
      case LayerKind::MaxPool: {
        Tensor dx(input.shape, 0.0);
        const std::vector<std::size_t>& src = pool_src[ri];
        for (std::size_t i = 0; i < dcur.size(); ++i) dx.values[src[i]] += dcur.values[i];
        dcur = std::move(dx);
        break;
      }
      case LayerKind::SoftmaxOutput:
        break;  // unreachable: loop starts below the softmax layer
    }
  }
  return result;
}

double accuracy(const Tensor& logits, const std::vector<int>& labels) {
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (labels.size() != n) {
    throw std::invalid_argument("got " + std::to_string(labels.size()) + " labels for a batch of " +
                                std::to_string(n));
  }
  std::size_t correct = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const double* z = logits.data() + s * c;
    std::size_t arg = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (z[j] > z[arg]) arg = j;
    }
    if (static_cast<int>(arg) == labels[s]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace llab
