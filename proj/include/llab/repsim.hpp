#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "llab/network.hpp"

namespace llab::repsim {

// Layer activations over a probe set: one row per neuron, one column per
// datapoint. Conv layers keep their (channels, height, width) provenance so
// the spatial preprocessing path can reshape them.
struct ActivationMatrix {
  Eigen::MatrixXd data;
  std::size_t channels = 0;  // 0 for dense outputs
  std::size_t height = 1, width = 1;
  std::string network_id;
  std::size_t layer = 0;
  std::string dataset_id;

  bool is_spatial() const { return channels > 0 && height * width > 1; }
};

ActivationMatrix collect_activations(const NetworkSpec& spec, const ParamVector& params,
                                     const Tensor& probe_x, std::size_t layer,
                                     std::size_t batch_cap = 256);

Eigen::MatrixXd center_rows(const Eigen::MatrixXd& m);

// Keeps the smallest prefix of top singular directions whose cumulative
// squared singular values reach `variance_fraction` of the total energy, and
// projects the rows onto them. Input rows must be centered.
Eigen::MatrixXd svd_reduce(const Eigen::MatrixXd& centered, double variance_fraction = 0.99);

struct CCAResult {
  std::vector<double> correlations;  // non-increasing, clipped to [0, 1]
  std::size_t dims_a = 0, dims_b = 0;
  bool clamped = false;  // whitening hit the eigenvalue floor

  double mean_similarity() const;
};

// Canonical correlations of the two row spaces, via whitening both sets and
// taking singular values of the whitened cross-covariance. Columns are
// datapoints and must match.
CCAResult cca(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Full pipeline on raw activation rows: center, reduce to 99% energy, CCA.
CCAResult svcca(const Eigen::MatrixXd& a_raw, const Eigen::MatrixXd& b_raw,
                double variance_fraction = 0.99);

// 2-D unitary DFT over the spatial dims of a conv activation set. Returns one
// matrix per spatial frequency with real and imaginary channel rows stacked
// (2*channels x datapoints).
std::vector<Eigen::MatrixXd> dft_preprocess(const ActivationMatrix& act);

// Mean CCA similarity between two layers. Spatial layers with matching
// spatial dims go through the per-frequency DFT path and the per-frequency
// similarities are averaged; everything else uses the plain path on
// flattened rows.
double similarity(const ActivationMatrix& a, const ActivationMatrix& b,
                  double variance_fraction = 0.99);

struct SimilarityHeatmap {
  Eigen::MatrixXd values;  // [layer of A][layer of B]
  std::vector<std::string> labels_a, labels_b;
  std::vector<std::size_t> layers_a, layers_b;

  std::vector<double> diagonal() const;
};

// Layer indices worth comparing: every layer output except the bare
// pre-activations that are immediately re-shaped by relu (the relu output
// stands in for them).
std::vector<std::size_t> analysis_layers(const NetworkSpec& spec);

SimilarityHeatmap layer_heatmap(const NetworkSpec& net_a, const ParamVector& params_a,
                                const NetworkSpec& net_b, const ParamVector& params_b,
                                const Tensor& probe_x, std::vector<std::size_t> layers_a = {},
                                std::vector<std::size_t> layers_b = {}, std::size_t threads = 1);

}  // namespace llab::repsim
