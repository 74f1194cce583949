#include "llab/repsim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "llab/eval.hpp"

namespace llab::repsim {

ActivationMatrix collect_activations(const NetworkSpec& spec, const ParamVector& params,
                                     const Tensor& probe_x, std::size_t layer,
                                     std::size_t batch_cap) {
  if (layer >= spec.layers.size()) {
    throw std::invalid_argument("layer index " + std::to_string(layer) +
                                " out of range for a " + std::to_string(spec.layers.size()) +
                                "-layer network");
  }
  const std::size_t m = probe_x.dim(0);
  ActivationMatrix act;
  act.layer = layer;

  std::size_t neurons = 0;
  std::size_t col = 0;
  for (std::size_t begin = 0; begin < m; begin += batch_cap) {
    const std::size_t end = std::min(m, begin + batch_cap);
    const Tensor chunk = (begin == 0 && end == m) ? probe_x : slice_batch(probe_x, begin, end);
    ForwardResult fwd = forward(spec, params, chunk, {layer});
    const Tensor& out = fwd.activations.at(layer);
    if (neurons == 0) {
      neurons = out.sample_size();
      act.data.resize(static_cast<Eigen::Index>(neurons), static_cast<Eigen::Index>(m));
      if (out.rank() == 4) {
        act.channels = out.dim(1);
        act.height = out.dim(2);
        act.width = out.dim(3);
      }
    }
    for (std::size_t s = 0; s < end - begin; ++s, ++col) {
      for (std::size_t r = 0; r < neurons; ++r) {
        act.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) =
            out.values[s * neurons + r];
      }
    }
  }
  return act;
}

Eigen::MatrixXd center_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd centered = m;
  const Eigen::VectorXd means = m.rowwise().mean();
  centered.colwise() -= means;
  return centered;
}

Eigen::MatrixXd svd_reduce(const Eigen::MatrixXd& centered, double variance_fraction) {
  if (!(variance_fraction > 0.0 && variance_fraction <= 1.0)) {
    throw std::invalid_argument("variance fraction must lie in (0, 1]");
  }
  const Eigen::Index n = centered.rows(), m = centered.cols();
  if (n == 0 || m == 0) throw std::invalid_argument("empty activation matrix");

  // Work on the smaller Gram matrix; energies are the squared singular values.
  Eigen::VectorXd energy;
  Eigen::MatrixXd reduced_full;  // rows = singular directions, cols = datapoints
  if (n <= m) {
    const Eigen::MatrixXd gram = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    // ascending order -> flip
    const Eigen::Index k = gram.rows();
    energy.resize(k);
    Eigen::MatrixXd u(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      energy(i) = std::max(eig.eigenvalues()(k - 1 - i), 0.0);
      u.col(i) = eig.eigenvectors().col(k - 1 - i);
    }
    reduced_full = u.transpose() * centered;
  } else {
    const Eigen::MatrixXd gram = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::Index k = gram.rows();
    energy.resize(k);
    Eigen::MatrixXd v(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      energy(i) = std::max(eig.eigenvalues()(k - 1 - i), 0.0);
      v.col(i) = eig.eigenvectors().col(k - 1 - i);
    }
    // X = U S V^T  =>  U^T X = S V^T
    reduced_full.resize(k, m);
    for (Eigen::Index i = 0; i < k; ++i) {
      reduced_full.row(i) = std::sqrt(energy(i)) * v.col(i).transpose();
    }
  }

  const double total = energy.sum();
  if (total <= 0.0) {
    throw std::invalid_argument("activation matrix has no variance (all rows constant)");
  }
  double acc = 0.0;
  Eigen::Index keep = 0;
  while (keep < energy.size() && acc < variance_fraction * total) {
    acc += energy(keep);
    ++keep;
  }
  return reduced_full.topRows(keep);
}

double CCAResult::mean_similarity() const {
  if (correlations.empty()) return 0.0;
  double s = 0.0;
  for (double r : correlations) s += r;
  return s / static_cast<double>(correlations.size());
}

namespace {

// Symmetric inverse square root with the documented eigenvalue floor:
// anything below 1e-10 * trace is clamped up before inversion.
Eigen::MatrixXd inv_sqrt_sym(const Eigen::MatrixXd& cov, bool* clamped) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const double floor = 1e-10 * std::max(cov.trace(), 0.0);
  Eigen::VectorXd vals = eig.eigenvalues();
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) < floor || vals(i) <= 0.0) {
      vals(i) = std::max(floor, 1e-300);
      if (clamped) *clamped = true;
    }
  }
  return eig.eigenvectors() * vals.cwiseInverse().cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

CCAResult cca(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("CCA inputs must share the datapoint axis (" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) +
                                " columns)");
  }
  if (a.cols() < 2) throw std::invalid_argument("CCA needs at least two datapoints");
  const double denom = static_cast<double>(a.cols() - 1);
  const Eigen::MatrixXd s_aa = a * a.transpose() / denom;
  const Eigen::MatrixXd s_bb = b * b.transpose() / denom;
  const Eigen::MatrixXd s_ab = a * b.transpose() / denom;

  CCAResult result;
  result.dims_a = static_cast<std::size_t>(a.rows());
  result.dims_b = static_cast<std::size_t>(b.rows());
  const Eigen::MatrixXd wa = inv_sqrt_sym(s_aa, &result.clamped);
  const Eigen::MatrixXd wb = inv_sqrt_sym(s_bb, &result.clamped);
  const Eigen::MatrixXd t = wa * s_ab * wb;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t);
  const Eigen::VectorXd sv = svd.singularValues();
  result.correlations.resize(static_cast<std::size_t>(sv.size()));
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    result.correlations[static_cast<std::size_t>(i)] = std::clamp(sv(i), 0.0, 1.0);
  }
  return result;
}

CCAResult svcca(const Eigen::MatrixXd& a_raw, const Eigen::MatrixXd& b_raw,
                double variance_fraction) {
  const Eigen::MatrixXd a = svd_reduce(center_rows(a_raw), variance_fraction);
  const Eigen::MatrixXd b = svd_reduce(center_rows(b_raw), variance_fraction);
  return cca(a, b);
}

std::vector<Eigen::MatrixXd> dft_preprocess(const ActivationMatrix& act) {
  if (act.channels == 0) {
    throw std::invalid_argument("DFT preprocessing needs 4-D conv activations");
  }
  const std::size_t c = act.channels, h = act.height, w = act.width;
  const std::size_t m = static_cast<std::size_t>(act.data.cols());
  using Cplx = std::complex<double>;

  // Row-column 2-D DFT with unitary normalization (preserves total energy).
  std::vector<Cplx> tw_h(h * h), tw_w(w * w);
  for (std::size_t k = 0; k < h; ++k) {
    for (std::size_t n = 0; n < h; ++n) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * n) /
                         static_cast<double>(h);
      tw_h[k * h + n] = Cplx(std::cos(ang), std::sin(ang));
    }
  }
  for (std::size_t k = 0; k < w; ++k) {
    for (std::size_t n = 0; n < w; ++n) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * n) /
                         static_cast<double>(w);
      tw_w[k * w + n] = Cplx(std::cos(ang), std::sin(ang));
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));

  // out[frequency] is (2c x m): real rows then imaginary rows.
  std::vector<Eigen::MatrixXd> out(h * w,
                                   Eigen::MatrixXd(static_cast<Eigen::Index>(2 * c),
                                                   static_cast<Eigen::Index>(m)));
  std::vector<Cplx> rows(h * w), full(h * w);
  for (std::size_t col = 0; col < m; ++col) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      // DFT along rows, then along columns.
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t kx = 0; kx < w; ++kx) {
          Cplx acc(0.0, 0.0);
          for (std::size_t x = 0; x < w; ++x) {
            acc += tw_w[kx * w + x] *
                   act.data(static_cast<Eigen::Index>((ch * h + y) * w + x),
                            static_cast<Eigen::Index>(col));
          }
          rows[y * w + kx] = acc;
        }
      }
      for (std::size_t kx = 0; kx < w; ++kx) {
        for (std::size_t ky = 0; ky < h; ++ky) {
          Cplx acc(0.0, 0.0);
          for (std::size_t y = 0; y < h; ++y) acc += tw_h[ky * h + y] * rows[y * w + kx];
          full[ky * w + kx] = acc * scale;
        }
      }
      for (std::size_t f = 0; f < h * w; ++f) {
        out[f](static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(col)) = full[f].real();
        out[f](static_cast<Eigen::Index>(c + ch), static_cast<Eigen::Index>(col)) =
            full[f].imag();
      }
    }
  }
  return out;
}

double similarity(const ActivationMatrix& a, const ActivationMatrix& b,
                  double variance_fraction) {
  if (a.data.cols() != b.data.cols()) {
    throw std::invalid_argument("activation matrices use different probe sets");
  }
  const bool dft_path =
      a.is_spatial() && b.is_spatial() && a.height == b.height && a.width == b.width;
  if (!dft_path) {
    // A dead layer (constant over the probe set) has no representation to
    // correlate with anything.
    if (center_rows(a.data).squaredNorm() == 0.0 || center_rows(b.data).squaredNorm() == 0.0) {
      return 0.0;
    }
    return svcca(a.data, b.data, variance_fraction).mean_similarity();
  }
  const std::vector<Eigen::MatrixXd> fa = dft_preprocess(a);
  const std::vector<Eigen::MatrixXd> fb = dft_preprocess(b);

  // Frequencies with no variance on a side carry no representation content
  // (a constant map keeps all its energy in the DC bin); they are skipped
  // rather than averaged in as undefined zeros.
  std::vector<double> ea(fa.size()), eb(fb.size());
  double max_ea = 0.0, max_eb = 0.0;
  for (std::size_t f = 0; f < fa.size(); ++f) {
    ea[f] = center_rows(fa[f]).squaredNorm();
    eb[f] = center_rows(fb[f]).squaredNorm();
    max_ea = std::max(max_ea, ea[f]);
    max_eb = std::max(max_eb, eb[f]);
  }
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t f = 0; f < fa.size(); ++f) {
    if (ea[f] <= 1e-16 * max_ea || eb[f] <= 1e-16 * max_eb) continue;
    total += svcca(fa[f], fb[f], variance_fraction).mean_similarity();
    ++counted;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

std::vector<std::size_t> analysis_layers(const NetworkSpec& spec) {
  std::vector<std::size_t> layers;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerKind k = spec.layers[i].kind;
    if (k == LayerKind::Relu || k == LayerKind::MaxPool || k == LayerKind::SoftmaxOutput) {
      layers.push_back(i);
      continue;
    }
    // Parameterized layers count unless a relu immediately rewrites them.
    const bool followed_by_relu =
        i + 1 < spec.layers.size() && spec.layers[i + 1].kind == LayerKind::Relu;
    if (!followed_by_relu) layers.push_back(i);
  }
  return layers;
}

std::vector<double> SimilarityHeatmap::diagonal() const {
  const Eigen::Index n = std::min(values.rows(), values.cols());
  std::vector<double> d(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = values(i, i);
  return d;
}

SimilarityHeatmap layer_heatmap(const NetworkSpec& net_a, const ParamVector& params_a,
                                const NetworkSpec& net_b, const ParamVector& params_b,
                                const Tensor& probe_x, std::vector<std::size_t> layers_a,
                                std::vector<std::size_t> layers_b, std::size_t threads) {
  if (layers_a.empty()) layers_a = analysis_layers(net_a);
  if (layers_b.empty()) layers_b = analysis_layers(net_b);

  std::vector<ActivationMatrix> acts_a, acts_b;
  acts_a.reserve(layers_a.size());
  acts_b.reserve(layers_b.size());
  for (std::size_t l : layers_a) acts_a.push_back(collect_activations(net_a, params_a, probe_x, l));
  for (std::size_t l : layers_b) acts_b.push_back(collect_activations(net_b, params_b, probe_x, l));

  SimilarityHeatmap hm;
  hm.layers_a = layers_a;
  hm.layers_b = layers_b;
  for (std::size_t l : layers_a) hm.labels_a.push_back("L" + std::to_string(l));
  for (std::size_t l : layers_b) hm.labels_b.push_back("L" + std::to_string(l));
  hm.values.resize(static_cast<Eigen::Index>(layers_a.size()),
                   static_cast<Eigen::Index>(layers_b.size()));

  const std::size_t total = layers_a.size() * layers_b.size();
  const auto eval_cell = [&](std::size_t idx) {
    const std::size_t i = idx / layers_b.size(), j = idx % layers_b.size();
    hm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        similarity(acts_a[i], acts_b[j]);
  };
  if (threads <= 1) {
    for (std::size_t idx = 0; idx < total; ++idx) eval_cell(idx);
  } else {
    std::vector<std::thread> pool;
    const std::size_t stride = std::min(threads, total);
    for (std::size_t w = 0; w < stride; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t idx = w; idx < total; idx += stride) eval_cell(idx);
      });
    }
    for (auto& th : pool) th.join();
  }
  return hm;
}

}  // namespace llab::repsim
