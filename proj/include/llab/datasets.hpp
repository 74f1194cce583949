#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "llab/rng.hpp"
#include "llab/tensor.hpp"

namespace llab {

// Declarative dataset description, JSON round-trippable so checkpoints can
// carry it and analysis commands can rebuild the exact same data.
struct DatasetSpec {
  std::string kind;        // "two-moons" | "tiny-images" | "cifar10-binary"
  nlohmann::json params = nlohmann::json::object();
};

struct Dataset {
  std::string id;
  Tensor train_x;
  std::vector<int> train_y;
  Tensor val_x;
  std::vector<int> val_y;
  std::size_t classes = 2;
  bool image = false;  // augmentation applies only to image data
  nlohmann::json metadata = nlohmann::json::object();
};

Dataset make_dataset(const DatasetSpec& spec);
nlohmann::json dataset_spec_to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);

// Two interleaving half-circles in the plane with Gaussian jitter.
Dataset make_two_moons(std::size_t n, double noise, std::uint64_t seed);

// Synthetic single-channel image classes: each class owns a few smooth
// random prototype patterns; a sample picks one prototype, then gets
// contrast jitter, a small circular shift and pixel noise. Multiple
// prototypes per class make the task multi-modal rather than a single
// matched-filter problem.
struct TinyImagesConfig {
  std::size_t classes = 2;
  std::size_t size = 16;
  std::size_t prototypes = 3;
  std::size_t train_per_class = 256;
  std::size_t val_per_class = 128;
  double noise = 0.35;
  double label_noise = 0.0;  // fraction of train labels flipped (val untouched)
  // Fraction of train sample pairs replaced by one shared image carrying
  // both labels. Unlike flipped labels, these cannot be memorized away, so
  // minibatch gradients stay alive at every minimum.
  double ambiguous = 0.0;
  std::size_t max_shift = 2;
  std::uint64_t seed = 0;
};
Dataset make_tiny_images(const TinyImagesConfig& cfg);

struct Cifar10Options {
  std::vector<int> class_subset;  // empty = all ten classes
  bool downsample_16 = false;     // 2x2 average pooling to 16x16
  double val_fraction = 0.2;
};
// Reads the public binary layout: records of 1 label byte + 3*32*32 pixel
// bytes, channel-major. Pixels are scaled to [0,1].
Dataset load_cifar10_binary(const std::filesystem::path& path, const Cifar10Options& opt = {});

// Per-batch augmentation hook: zero-pad then random-crop back to size.
// Only meaningful for 4-D image batches; point data passes through untouched.
Tensor random_crop_pad(const Tensor& batch, std::size_t pad, Rng& rng);

}  // namespace llab
