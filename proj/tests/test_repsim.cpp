#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "llab/harness.hpp"
#include "llab/repsim.hpp"
#include "llab/rng.hpp"
#include "oracles.hpp"

using namespace llab;
using namespace llab::repsim;

namespace {

Eigen::MatrixXd random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
  }
  return m;
}

// Matrix with a prescribed singular spectrum via random orthogonal factors.
Eigen::MatrixXd with_spectrum(const std::vector<double>& sigma, std::size_t cols,
                              std::uint64_t seed) {
  const std::size_t rows = sigma.size();
  const Eigen::MatrixXd u =
      Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(rows, rows, seed)).householderQ();
  const Eigen::MatrixXd v =
      Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(cols, cols, seed + 1)).householderQ();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows),
                                            static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) s(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(i)) = sigma[i];
  return u * s * v.transpose();
}

}  // namespace

TEST_CASE("collect_activations: identity layer returns the probe matrix") {
  NetworkSpec spec;
  spec.layers = {LayerSpec::dense(3, 3), LayerSpec::softmax_output()};
  ParamVector p = zeros_like(init_params(spec, 0));
  for (std::size_t i = 0; i < 3; ++i) p.values[i * 3 + i] = 1.0;

  Tensor probe({5, 3});
  Rng rng(2);
  for (double& v : probe.values) v = rng.normal();
  const ActivationMatrix act = collect_activations(spec, p, probe, 0);
  REQUIRE(act.data.rows() == 3);
  REQUIRE(act.data.cols() == 5);
  for (std::size_t s = 0; s < 5; ++s) {
    for (std::size_t f = 0; f < 3; ++f) {
      CHECK(act.data(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(s)) ==
            probe.values[s * 3 + f]);
    }
  }
  CHECK_THROWS_AS(collect_activations(spec, p, probe, 5), std::invalid_argument);
}

TEST_CASE("collect_activations: constant layers are zero after centering") {
  NetworkSpec spec;
  spec.layers = {LayerSpec::dense(2, 4), LayerSpec::relu(), LayerSpec::dense(4, 2),
                 LayerSpec::softmax_output()};
  ParamVector p = zeros_like(init_params(spec, 0));  // all weights zero -> constant outputs
  const int bi = p.layout->block_index(0, ParamRole::Bias);
  for (std::size_t i = 0; i < 4; ++i) p.values[p.layout->blocks[bi].offset + i] = 2.5;

  Tensor probe({6, 2});
  Rng rng(3);
  for (double& v : probe.values) v = rng.normal();
  const ActivationMatrix act = collect_activations(spec, p, probe, 1);
  const Eigen::MatrixXd centered = center_rows(act.data);
  CHECK(centered.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(svd_reduce(centered), std::invalid_argument);  // no variance left
}

TEST_CASE("collect_activations matches forward capture bit for bit") {
  const Dataset data = make_two_moons(64, 0.1, 5);
  const NetworkSpec spec = harness::named_architecture("two-moons-mlp", data);
  const ParamVector p = init_params(spec, 7);
  const ActivationMatrix act = collect_activations(spec, p, data.val_x, 3, 16);
  const ForwardResult fwd = forward(spec, p, data.val_x, {3});
  const Tensor& ref = fwd.activations.at(3);
  const std::size_t neurons = ref.sample_size();
  for (std::size_t s = 0; s < data.val_x.dim(0); ++s) {
    for (std::size_t f = 0; f < neurons; ++f) {
      CHECK(act.data(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(s)) ==
            ref.values[s * neurons + f]);
    }
  }
}

TEST_CASE("svd_reduce keeps exactly one direction for spectrum {10, 1, 0.01}") {
  // Energy shares: {100, 1, 0.0001} / 101.0001; the top direction alone
  // covers 0.9901 >= 0.99.
  const Eigen::MatrixXd m = with_spectrum({10.0, 1.0, 0.01}, 40, 11);
  const Eigen::MatrixXd reduced = svd_reduce(m, 0.99);
  CHECK(reduced.rows() == 1);
  CHECK(reduced.cols() == 40);
}

TEST_CASE("svd_reduce keeps ceil(0.99 n) directions under equal singular values") {
  const std::vector<double> sigma(20, 3.0);
  const Eigen::MatrixXd m = with_spectrum(sigma, 50, 13);
  const Eigen::MatrixXd reduced = svd_reduce(m, 0.99);
  CHECK(reduced.rows() == 20);  // ceil(0.99 * 20) = 20

  const std::vector<double> sigma100(10, 1.0);
  const Eigen::MatrixXd m2 = with_spectrum(sigma100, 30, 17);
  CHECK(svd_reduce(m2, 0.85).rows() == 9);  // ceil(8.5)
}

TEST_CASE("svd_reduce reconstruction keeps 99% of the energy") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd m = center_rows(random_matrix(12, 200, 100 + trial));
    const double total = m.squaredNorm();
    const Eigen::MatrixXd reduced = svd_reduce(m, 0.99);
    // Energy of the projection equals the kept eigenvalue mass.
    const double kept = reduced.squaredNorm();
    CHECK(kept >= 0.99 * total - 1e-9);
    CHECK(kept <= total + 1e-9);
  }
}

TEST_CASE("cca of a matrix with itself gives all correlations 1") {
  const Eigen::MatrixXd a = center_rows(random_matrix(8, 300, 31));
  const CCAResult r = cca(a, a);
  REQUIRE(r.correlations.size() == 8);
  for (double rho : r.correlations) CHECK(rho == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.mean_similarity() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cca is invariant to invertible linear maps") {
  const Eigen::MatrixXd a = center_rows(random_matrix(6, 250, 37));
  const Eigen::MatrixXd b = center_rows(random_matrix(6, 250, 41));
  Eigen::MatrixXd q = random_matrix(6, 6, 43);
  q += 6.0 * Eigen::MatrixXd::Identity(6, 6);  // keep it well-conditioned

  const CCAResult plain = cca(a, b);
  const CCAResult mapped = cca(q * a, b);
  REQUIRE(plain.correlations.size() == mapped.correlations.size());
  for (std::size_t i = 0; i < plain.correlations.size(); ++i) {
    CHECK(plain.correlations[i] == doctest::Approx(mapped.correlations[i]).epsilon(1e-9));
  }
}

TEST_CASE("cca is symmetric and invariant to row permutation and scaling") {
  const Eigen::MatrixXd a = center_rows(random_matrix(5, 400, 47));
  const Eigen::MatrixXd b = center_rows(random_matrix(7, 400, 53));
  const CCAResult ab = cca(a, b);
  const CCAResult ba = cca(b, a);
  REQUIRE(ab.correlations.size() == ba.correlations.size());
  for (std::size_t i = 0; i < ab.correlations.size(); ++i) {
    CHECK(ab.correlations[i] == doctest::Approx(ba.correlations[i]).epsilon(1e-9));
  }

  // Permute and positively rescale rows of a.
  Eigen::MatrixXd ap(a.rows(), a.cols());
  const int perm[5] = {3, 0, 4, 1, 2};
  const double scales[5] = {0.5, 2.0, 7.0, 0.1, 3.3};
  for (int i = 0; i < 5; ++i) ap.row(i) = scales[i] * a.row(perm[i]);
  const CCAResult permuted = cca(ap, b);
  for (std::size_t i = 0; i < ab.correlations.size(); ++i) {
    CHECK(ab.correlations[i] == doctest::Approx(permuted.correlations[i]).epsilon(1e-9));
  }
}

TEST_CASE("cca matches the generalized-eigenproblem oracle on random pairs") {
  Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t na = 2 + trial % 9;
    const std::size_t nb = 2 + (trial * 3) % 9;
    const std::size_t m = 60 * std::max(na, nb);
    const Eigen::MatrixXd a = center_rows(random_matrix(na, m, 200 + trial));
    const Eigen::MatrixXd b = center_rows(random_matrix(nb, m, 300 + trial));
    const CCAResult got = cca(a, b);
    const std::vector<double> expect = oracles::brute_force_cca(a, b);
    REQUIRE(got.correlations.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(std::abs(got.correlations[i] - expect[i]) <= 1e-6);
    }
    // Sorted non-increasing, in range.
    for (std::size_t i = 1; i < got.correlations.size(); ++i) {
      CHECK(got.correlations[i] <= got.correlations[i - 1] + 1e-12);
    }
    CHECK(got.correlations.front() <= 1.0);
    CHECK(got.correlations.back() >= 0.0);
  }
}

TEST_CASE("cca rejects mismatched probe sets") {
  const Eigen::MatrixXd a = random_matrix(4, 100, 1);
  const Eigen::MatrixXd b = random_matrix(4, 101, 2);
  CHECK_THROWS_AS(cca(a, b), std::invalid_argument);
}

TEST_CASE("dft path: 1x1 spatial maps reduce to the plain path") {
  ActivationMatrix a;
  a.data = center_rows(random_matrix(6, 200, 71));
  a.channels = 6;
  a.height = 1;
  a.width = 1;
  ActivationMatrix b = a;
  b.data = center_rows(random_matrix(6, 200, 73));

  // 1x1 layers are not spatial, so similarity() already takes the plain
  // path; dft_preprocess on them must reproduce it per frequency too.
  const std::vector<Eigen::MatrixXd> fa = dft_preprocess(a);
  REQUIRE(fa.size() == 1);
  const CCAResult via_dft = svcca(fa[0], dft_preprocess(b)[0]);
  const CCAResult plain = svcca(a.data, b.data);
  REQUIRE(via_dft.correlations.size() == plain.correlations.size());
  for (std::size_t i = 0; i < plain.correlations.size(); ++i) {
    CHECK(via_dft.correlations[i] == doctest::Approx(plain.correlations[i]).epsilon(1e-9));
  }
}

TEST_CASE("dft: constant spatial maps put all energy in the dc bin") {
  const std::size_t c = 2, h = 4, w = 4, m = 30;
  ActivationMatrix act;
  act.channels = c;
  act.height = h;
  act.width = w;
  act.data.resize(static_cast<Eigen::Index>(c * h * w), static_cast<Eigen::Index>(m));
  Rng rng(79);
  for (std::size_t col = 0; col < m; ++col) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double value = rng.normal();  // constant over the spatial map
      for (std::size_t i = 0; i < h * w; ++i) {
        act.data(static_cast<Eigen::Index>(ch * h * w + i), static_cast<Eigen::Index>(col)) =
            value;
      }
    }
  }
  const std::vector<Eigen::MatrixXd> freq = dft_preprocess(act);
  REQUIRE(freq.size() == h * w);
  CHECK(freq[0].cwiseAbs().maxCoeff() > 0.0);  // dc bin carries the signal
  for (std::size_t f = 1; f < freq.size(); ++f) {
    CHECK(freq[f].cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dft preserves total energy (parseval)") {
  const std::size_t c = 3, h = 5, w = 4, m = 20;
  ActivationMatrix act;
  act.channels = c;
  act.height = h;
  act.width = w;
  act.data = random_matrix(c * h * w, m, 83);
  const std::vector<Eigen::MatrixXd> freq = dft_preprocess(act);
  double freq_energy = 0.0;
  for (const auto& f : freq) freq_energy += f.squaredNorm();
  CHECK(freq_energy == doctest::Approx(act.data.squaredNorm()).epsilon(1e-9));

  ActivationMatrix flat;
  flat.data = act.data;
  CHECK_THROWS_AS(dft_preprocess(flat), std::invalid_argument);  // not 4-D
}

TEST_CASE("layer heatmap of a checkpoint against itself has a unit diagonal") {
  const Dataset data = make_two_moons(120, 0.1, 5);
  const NetworkSpec spec = harness::named_architecture("two-moons-mlp", data);
  const ParamVector p = init_params(spec, 3);
  const SimilarityHeatmap hm = layer_heatmap(spec, p, spec, p, data.val_x);
  const std::vector<double> diag = hm.diagonal();
  REQUIRE(!diag.empty());
  for (double d : diag) CHECK(d == doctest::Approx(1.0).epsilon(1e-6));
  for (Eigen::Index i = 0; i < hm.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < hm.values.cols(); ++j) {
      CHECK(hm.values(i, j) >= 0.0);
      CHECK(hm.values(i, j) <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("shallow layers stay closer than deep ones between partial and full training") {
  harness::RunConfig cfg;
  cfg.name = "repsim-probe";
  cfg.dataset.kind = "tiny-images";
  cfg.dataset.params = {{"classes", 4}, {"size", 8},   {"train_per_class", 96},
                        {"val_per_class", 64}, {"noise", 0.9}, {"max_shift", 2},
                        {"seed", 5}};
  cfg.arch = "tiny-cnn";
  cfg.schedule = schedules::ScheduleSpec::step(0.02, 5.0, {24, 32});
  cfg.batch_size = 16;
  cfg.epochs = 40;
  cfg.seed = 5;
  cfg.checkpoint_epochs = {1};  // partially trained snapshot
  const Dataset data = make_dataset(cfg.dataset);
  const harness::RunResult r = harness::train_run(cfg, data);
  const NetworkSpec spec = harness::named_architecture(cfg.arch, data);

  const SimilarityHeatmap hm =
      layer_heatmap(spec, r.checkpoints.at(1).params, spec, r.checkpoints.at(40).params,
                    data.val_x);
  const std::vector<double> diag = hm.diagonal();
  REQUIRE(diag.size() >= 5);
  const double shallow = 0.5 * (diag[0] + diag[1]);
  const double deep = 0.5 * (diag[diag.size() - 2] + diag[diag.size() - 3]);
  CHECK(shallow > deep);
}

TEST_CASE("parallel heatmap matches single-threaded") {
  const Dataset data = make_two_moons(100, 0.1, 6);
  const NetworkSpec spec = harness::named_architecture("two-moons-mlp", data);
  const ParamVector a = init_params(spec, 1);
  const ParamVector b = init_params(spec, 2);
  const SimilarityHeatmap serial = layer_heatmap(spec, a, spec, b, data.val_x, {}, {}, 1);
  const SimilarityHeatmap parallel = layer_heatmap(spec, a, spec, b, data.val_x, {}, {}, 4);
  CHECK((serial.values - parallel.values).cwiseAbs().maxCoeff() == 0.0);
}
