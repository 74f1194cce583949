#include "llab/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "llab/errors.hpp"

namespace llab {

Dataset make_dataset(const DatasetSpec& spec) {
  if (spec.kind == "two-moons") {
    return make_two_moons(spec.params.value("n", std::size_t{400}),
                          spec.params.value("noise", 0.15),
                          spec.params.value("seed", std::uint64_t{0}));
  }
  if (spec.kind == "tiny-images") {
    TinyImagesConfig cfg;
    cfg.classes = spec.params.value("classes", cfg.classes);
    cfg.size = spec.params.value("size", cfg.size);
    cfg.prototypes = spec.params.value("prototypes", cfg.prototypes);
    cfg.train_per_class = spec.params.value("train_per_class", cfg.train_per_class);
    cfg.val_per_class = spec.params.value("val_per_class", cfg.val_per_class);
    cfg.noise = spec.params.value("noise", cfg.noise);
    cfg.label_noise = spec.params.value("label_noise", cfg.label_noise);
    cfg.ambiguous = spec.params.value("ambiguous", cfg.ambiguous);
    cfg.max_shift = spec.params.value("max_shift", cfg.max_shift);
    cfg.seed = spec.params.value("seed", cfg.seed);
    return make_tiny_images(cfg);
  }
  if (spec.kind == "cifar10-binary") {
    Cifar10Options opt;
    if (spec.params.contains("class_subset")) {
      opt.class_subset = spec.params["class_subset"].get<std::vector<int>>();
    }
    opt.downsample_16 = spec.params.value("downsample_16", false);
    opt.val_fraction = spec.params.value("val_fraction", 0.2);
    std::filesystem::path path = spec.params.at("path").get<std::string>();
    if (path.is_relative()) {
      if (const char* base = std::getenv("LLAB_DATA_DIR")) path = std::filesystem::path(base) / path;
    }
    return load_cifar10_binary(path, opt);
  }
  throw std::invalid_argument("unknown dataset kind '" + spec.kind + "'");
}

nlohmann::json dataset_spec_to_json(const DatasetSpec& spec) {
  return {{"kind", spec.kind}, {"params", spec.params}};
}

DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
  DatasetSpec s;
  s.kind = j.at("kind").get<std::string>();
  s.params = j.value("params", nlohmann::json::object());
  return s;
}

Dataset make_two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 8) throw std::invalid_argument("two-moons needs at least 8 points");
  Rng rng(mix_seed(seed, 17));
  const std::size_t half = n / 2;
  std::vector<std::array<double, 2>> xs;
  std::vector<int> ys;
  xs.reserve(2 * half);
  for (std::size_t i = 0; i < half; ++i) {
    const double a = std::numbers::pi * static_cast<double>(i) / static_cast<double>(half - 1);
    xs.push_back({std::cos(a) + noise * rng.normal(), std::sin(a) + noise * rng.normal()});
    ys.push_back(0);
  }
  for (std::size_t i = 0; i < half; ++i) {
    const double a = std::numbers::pi * static_cast<double>(i) / static_cast<double>(half - 1);
    xs.push_back({1.0 - std::cos(a) + noise * rng.normal(),
                  0.5 - std::sin(a) + noise * rng.normal()});
    ys.push_back(1);
  }
  // Deterministic shuffle, then a 3:1 train/val split.
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t n_val = xs.size() / 4;
  const std::size_t n_train = xs.size() - n_val;

  Dataset d;
  d.id = "two-moons(n=" + std::to_string(n) + ",seed=" + std::to_string(seed) + ")";
  d.train_x = Tensor({n_train, 2});
  d.val_x = Tensor({n_val, 2});
  for (std::size_t i = 0; i < n_train; ++i) {
    d.train_x.values[2 * i] = xs[order[i]][0];
    d.train_x.values[2 * i + 1] = xs[order[i]][1];
    d.train_y.push_back(ys[order[i]]);
  }
  for (std::size_t i = 0; i < n_val; ++i) {
    d.val_x.values[2 * i] = xs[order[n_train + i]][0];
    d.val_x.values[2 * i + 1] = xs[order[n_train + i]][1];
    d.val_y.push_back(ys[order[n_train + i]]);
  }
  d.classes = 2;
  d.image = false;
  return d;
}

namespace {

// Smooth random field: white noise blurred with a 3x3 box a few times.
std::vector<double> smooth_template(std::size_t size, Rng& rng) {
  std::vector<double> img(size * size);
  for (double& v : img) v = rng.normal();
  std::vector<double> tmp(img.size());
  for (int pass = 0; pass < 3; ++pass) {
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        double acc = 0.0;
        int cnt = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = static_cast<int>(y) + dy, xx = static_cast<int>(x) + dx;
            if (yy < 0 || xx < 0 || yy >= static_cast<int>(size) || xx >= static_cast<int>(size)) {
              continue;
            }
            acc += img[yy * size + xx];
            ++cnt;
          }
        }
        tmp[y * size + x] = acc / cnt;
      }
    }
    img.swap(tmp);
  }
  // Normalize to unit RMS so class contrast is comparable across seeds.
  double rms = 0.0;
  for (double v : img) rms += v * v;
  rms = std::sqrt(rms / static_cast<double>(img.size()));
  for (double& v : img) v /= (rms > 0 ? rms : 1.0);
  return img;
}

void render_sample(double* out, const std::vector<double>& tmpl, std::size_t size, double contrast,
                   int shift_y, int shift_x, double noise, Rng& rng) {
  const auto wrap = [&](int v) {
    const int s = static_cast<int>(size);
    return static_cast<std::size_t>(((v % s) + s) % s);
  };
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const std::size_t sy = wrap(static_cast<int>(y) + shift_y);
      const std::size_t sx = wrap(static_cast<int>(x) + shift_x);
      out[y * size + x] = contrast * tmpl[sy * size + sx] + noise * rng.normal();
    }
  }
}

}  // namespace

Dataset make_tiny_images(const TinyImagesConfig& cfg) {
  if (cfg.classes < 2) throw std::invalid_argument("tiny-images needs >= 2 classes");
  if (cfg.size < 4) throw std::invalid_argument("tiny-images needs size >= 4");
  if (cfg.prototypes < 1) throw std::invalid_argument("tiny-images needs >= 1 prototype");
  Rng tmpl_rng(mix_seed(cfg.seed, 23));
  std::vector<std::vector<double>> templates(cfg.classes * cfg.prototypes);
  for (auto& t : templates) t = smooth_template(cfg.size, tmpl_rng);

  const auto fill_split = [&](Tensor& x, std::vector<int>& y, std::size_t per_class,
                              std::uint64_t stream) {
    Rng rng(mix_seed(cfg.seed, stream));
    const std::size_t total = per_class * cfg.classes;
    x = Tensor({total, 1, cfg.size, cfg.size});
    y.resize(total);
    const int max_shift = static_cast<int>(cfg.max_shift);
    for (std::size_t i = 0; i < total; ++i) {
      const std::size_t c = i % cfg.classes;
      const std::size_t proto = rng.below(cfg.prototypes);
      const double contrast = rng.uniform(0.8, 1.2);
      const int sy = max_shift > 0 ? static_cast<int>(rng.below(2 * max_shift + 1)) - max_shift : 0;
      const int sx = max_shift > 0 ? static_cast<int>(rng.below(2 * max_shift + 1)) - max_shift : 0;
      render_sample(x.data() + i * cfg.size * cfg.size, templates[c * cfg.prototypes + proto],
                    cfg.size, contrast, sy, sx, cfg.noise, rng);
      y[i] = static_cast<int>(c);
    }
  };

  Dataset d;
  d.id = "tiny-images(c=" + std::to_string(cfg.classes) + ",s=" + std::to_string(cfg.size) +
         ",p=" + std::to_string(cfg.prototypes) + ",seed=" + std::to_string(cfg.seed) + ")";
  fill_split(d.train_x, d.train_y, cfg.train_per_class, 101);
  fill_split(d.val_x, d.val_y, cfg.val_per_class, 102);
  if (cfg.label_noise > 0.0) {
    Rng flip_rng(mix_seed(cfg.seed, 103));
    for (int& y : d.train_y) {
      if (flip_rng.uniform() < cfg.label_noise) {
        y = static_cast<int>((static_cast<std::size_t>(y) + 1 + flip_rng.below(cfg.classes - 1)) %
                             cfg.classes);
      }
    }
  }
  if (cfg.ambiguous > 0.0) {
    // Adjacent samples cycle through the classes, so sharing pixels within a
    // pair yields one image with two labels.
    Rng amb_rng(mix_seed(cfg.seed, 104));
    const std::size_t per = d.train_x.sample_size();
    for (std::size_t i = 0; i + 1 < d.train_x.dim(0); i += 2) {
      if (amb_rng.uniform() < cfg.ambiguous) {
        std::copy(d.train_x.data() + i * per, d.train_x.data() + (i + 1) * per,
                  d.train_x.data() + (i + 1) * per);
      }
    }
  }
  d.classes = cfg.classes;
  d.image = true;
  return d;
}

Dataset load_cifar10_binary(const std::filesystem::path& path, const Cifar10Options& opt) {
  constexpr std::size_t kRecord = 1 + 3 * 32 * 32;
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw FormatError("cannot open dataset file: " + path.string());
  const std::streamoff file_size = is.tellg();
  if (file_size <= 0 || static_cast<std::size_t>(file_size) % kRecord != 0) {
    throw FormatError("bad size for " + path.string() + ": " + std::to_string(file_size) +
                      " bytes is not a multiple of the " + std::to_string(kRecord) +
                      "-byte record");
  }
  const std::size_t n_records = static_cast<std::size_t>(file_size) / kRecord;
  is.seekg(0);

  std::vector<int> keep_class(10, -1);
  if (opt.class_subset.empty()) {
    for (int c = 0; c < 10; ++c) keep_class[c] = c;
  } else {
    int next = 0;
    for (int c : opt.class_subset) {
      if (c < 0 || c > 9) throw std::invalid_argument("cifar10 class ids are 0..9");
      keep_class[c] = next++;
    }
  }

  const std::size_t out_hw = opt.downsample_16 ? 16 : 32;
  std::vector<double> pixels;
  std::vector<int> labels;
  std::vector<unsigned char> rec(kRecord);
  for (std::size_t r = 0; r < n_records; ++r) {
    if (!is.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(kRecord))) {
      throw FormatError("read error in " + path.string());
    }
    const int raw_label = rec[0];
    if (raw_label > 9) {
      throw FormatError("record " + std::to_string(r) + " has label byte " +
                        std::to_string(raw_label) + " outside 0..9");
    }
    if (keep_class[raw_label] < 0) continue;
    labels.push_back(keep_class[raw_label]);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const unsigned char* plane = rec.data() + 1 + ch * 1024;
      if (opt.downsample_16) {
        for (std::size_t y = 0; y < 16; ++y) {
          for (std::size_t x = 0; x < 16; ++x) {
            const double sum = plane[(2 * y) * 32 + 2 * x] + plane[(2 * y) * 32 + 2 * x + 1] +
                               plane[(2 * y + 1) * 32 + 2 * x] +
                               plane[(2 * y + 1) * 32 + 2 * x + 1];
            pixels.push_back(sum / (4.0 * 255.0));
          }
        }
      } else {
        for (std::size_t i = 0; i < 1024; ++i) pixels.push_back(plane[i] / 255.0);
      }
    }
  }
  if (labels.empty()) throw FormatError("no records kept from " + path.string());

  const std::size_t per_sample = 3 * out_hw * out_hw;
  const std::size_t total = labels.size();
  std::size_t n_val = static_cast<std::size_t>(std::floor(opt.val_fraction * total));
  n_val = std::min(n_val, total - 1);
  const std::size_t n_train = total - n_val;

  Dataset d;
  d.id = "cifar10(" + path.filename().string() + ")";
  d.train_x = Tensor({n_train, 3, out_hw, out_hw});
  d.val_x = Tensor({n_val == 0 ? 1 : n_val, 3, out_hw, out_hw});
  if (n_val == 0) d.val_x = Tensor({1, 3, out_hw, out_hw});
  std::copy(pixels.begin(), pixels.begin() + n_train * per_sample, d.train_x.values.begin());
  if (n_val > 0) {
    std::copy(pixels.begin() + n_train * per_sample, pixels.end(), d.val_x.values.begin());
  }
  d.train_y.assign(labels.begin(), labels.begin() + n_train);
  if (n_val > 0) {
    d.val_y.assign(labels.begin() + n_train, labels.end());
  } else {
    d.val_y.assign(1, labels.front());
    std::copy(pixels.begin(), pixels.begin() + per_sample, d.val_x.values.begin());
  }
  d.classes = opt.class_subset.empty() ? 10 : opt.class_subset.size();
  d.image = true;

  // Per-channel normalization constants, recorded but not applied.
  nlohmann::json means = nlohmann::json::array(), stds = nlohmann::json::array();
  for (std::size_t ch = 0; ch < 3; ++ch) {
    double mean = 0.0, var = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < n_train; ++s) {
      const double* p = d.train_x.data() + (s * 3 + ch) * out_hw * out_hw;
      for (std::size_t i = 0; i < out_hw * out_hw; ++i, ++count) mean += p[i];
    }
    mean /= static_cast<double>(count);
    for (std::size_t s = 0; s < n_train; ++s) {
      const double* p = d.train_x.data() + (s * 3 + ch) * out_hw * out_hw;
      for (std::size_t i = 0; i < out_hw * out_hw; ++i) var += (p[i] - mean) * (p[i] - mean);
    }
    means.push_back(mean);
    stds.push_back(std::sqrt(var / static_cast<double>(count)));
  }
  d.metadata["channel_means"] = means;
  d.metadata["channel_stds"] = stds;
  d.metadata["records"] = n_records;
  return d;
}

Tensor random_crop_pad(const Tensor& batch, std::size_t pad, Rng& rng) {
  if (batch.rank() != 4 || pad == 0) return batch;
  const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  Tensor out({n, c, h, w});
  for (std::size_t s = 0; s < n; ++s) {
    // One offset per sample, shared across channels.
    const int oy = static_cast<int>(rng.below(2 * pad + 1)) - static_cast<int>(pad);
    const int ox = static_cast<int>(rng.below(2 * pad + 1)) - static_cast<int>(pad);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* src = batch.data() + (s * c + ch) * h * w;
      double* dst = out.data() + (s * c + ch) * h * w;
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const int sy = static_cast<int>(y) + oy;
          const int sx = static_cast<int>(x) + ox;
          dst[y * w + x] = (sy < 0 || sx < 0 || sy >= static_cast<int>(h) ||
                            sx >= static_cast<int>(w))
                               ? 0.0
                               : src[sy * w + sx];
        }
      }
    }
  }
  return out;
}

}  // namespace llab
