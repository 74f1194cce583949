#include "llab/harness.hpp"

#include <algorithm>
#include <stdexcept>

#include "llab/errors.hpp"
#include "llab/exports.hpp"

namespace llab::harness {

nlohmann::json RunConfig::to_json() const {
  nlohmann::json freeze_json = nlohmann::json::array();
  for (const FreezeWindow& f : freeze) {
    freeze_json.push_back({{"target", f.target}, {"start_iter", f.start_iter},
                           {"end_iter", f.end_iter}});
  }
  nlohmann::json opt;
  opt["kind"] = optimizer.kind == OptimizerKind::Adam ? "adam" : "sgd-momentum";
  opt["momentum"] = optimizer.momentum;
  opt["weight_decay"] = optimizer.weight_decay;
  opt["beta1"] = optimizer.beta1;
  opt["beta2"] = optimizer.beta2;
  opt["epsilon"] = optimizer.epsilon;
  return {{"name", name},
          {"dataset", dataset_spec_to_json(dataset)},
          {"arch", arch},
          {"optimizer", opt},
          {"schedule", schedules::to_json(schedule)},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"seed", seed},
          {"init_scale", init_scale},
          {"checkpoint_epochs", checkpoint_epochs},
          {"augmentation", augmentation},
          {"augment_pad", augment_pad},
          {"freeze", freeze_json}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  c.name = j.value("name", c.name);
  if (j.contains("dataset")) c.dataset = dataset_spec_from_json(j.at("dataset"));
  c.arch = j.value("arch", c.arch);
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    const std::string kind = o.value("kind", "sgd-momentum");
    if (kind == "adam") {
      c.optimizer.kind = OptimizerKind::Adam;
    } else if (kind == "sgd-momentum") {
      c.optimizer.kind = OptimizerKind::SgdMomentum;
    } else {
      throw std::invalid_argument("unknown optimizer kind '" + kind + "'");
    }
    c.optimizer.momentum = o.value("momentum", c.optimizer.momentum);
    c.optimizer.weight_decay = o.value("weight_decay", c.optimizer.weight_decay);
    c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
    c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
    c.optimizer.epsilon = o.value("epsilon", c.optimizer.epsilon);
  }
  if (j.contains("schedule")) c.schedule = schedules::from_json(j.at("schedule"));
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.init_scale = j.value("init_scale", c.init_scale);
  if (j.contains("checkpoint_epochs")) {
    c.checkpoint_epochs = j.at("checkpoint_epochs").get<std::vector<std::size_t>>();
  }
  c.augmentation = j.value("augmentation", c.augmentation);
  c.augment_pad = j.value("augment_pad", c.augment_pad);
  if (j.contains("freeze")) {
    for (const auto& f : j.at("freeze")) {
      c.freeze.push_back({f.value("target", std::string("dense-stack")),
                          f.at("start_iter").get<std::size_t>(),
                          f.at("end_iter").get<std::size_t>()});
    }
  }
  return c;
}

NetworkSpec named_architecture(const std::string& name, const Dataset& data) {
  const std::size_t classes = data.classes;
  NetworkSpec spec;
  if (name == "two-moons-mlp") {
    const std::size_t in = data.train_x.sample_size();
    spec.layers = {LayerSpec::dense(in, 16), LayerSpec::relu(), LayerSpec::dense(16, 16),
                   LayerSpec::relu(), LayerSpec::dense(16, classes),
                   LayerSpec::softmax_output()};
    return spec;
  }
  if (data.train_x.rank() != 4) {
    throw std::invalid_argument("architecture '" + name + "' needs 4-D image data");
  }
  const std::size_t ch = data.train_x.dim(1);
  const std::size_t size = data.train_x.dim(2);
  const std::size_t quarter = (size / 2) / 2;
  if (name == "tiny-cnn") {
    spec.layers = {LayerSpec::conv2d(ch, 8, 3, 1, 1),
                   LayerSpec::relu(),
                   LayerSpec::maxpool(2, 2),
                   LayerSpec::conv2d(8, 16, 3, 1, 1),
                   LayerSpec::relu(),
                   LayerSpec::maxpool(2, 2),
                   LayerSpec::dense(16 * quarter * quarter, 48),
                   LayerSpec::relu(),
                   LayerSpec::dense(48, classes),
                   LayerSpec::softmax_output()};
    return spec;
  }
  if (name == "student-cnn") {
    spec.layers = {LayerSpec::conv2d(ch, 4, 3, 1, 1),
                   LayerSpec::maxpool(2, 2),
                   LayerSpec::relu(),
                   LayerSpec::conv2d(4, 8, 3, 1, 1),
                   LayerSpec::maxpool(2, 2),
                   LayerSpec::relu(),
                   LayerSpec::dense(8 * quarter * quarter, 32),
                   LayerSpec::relu(),
                   LayerSpec::dense(32, 16),
                   LayerSpec::dense(16, classes),
                   LayerSpec::softmax_output()};
    return spec;
  }
  if (name == "teacher-cnn") {
    spec.layers = {LayerSpec::conv2d(ch, 8, 3, 1, 1),
                   LayerSpec::relu(),
                   LayerSpec::conv2d(8, 8, 3, 1, 1),
                   LayerSpec::relu(),
                   LayerSpec::maxpool(2, 2),
                   LayerSpec::conv2d(8, 16, 3, 1, 1),
                   LayerSpec::relu(),
                   LayerSpec::maxpool(2, 2),
                   LayerSpec::dense(16 * quarter * quarter, 64),
                   LayerSpec::relu(),
                   LayerSpec::dense(64, classes),
                   LayerSpec::softmax_output()};
    return spec;
  }
  throw std::invalid_argument("unknown architecture '" + name + "'");
}

Checkpoint make_checkpoint(const RunConfig& cfg, const NetworkSpec& spec,
                           const ParamVector& params, std::size_t epoch, nlohmann::json extra) {
  Checkpoint ck;
  ck.spec = spec;
  ck.params = params;
  ck.meta = std::move(extra);
  ck.meta["run"] = cfg.name;
  ck.meta["seed"] = cfg.seed;
  ck.meta["epoch"] = epoch;
  ck.meta["dataset"] = dataset_spec_to_json(cfg.dataset);
  ck.meta["schedule"] = schedules::to_json(cfg.schedule);
  ck.meta["arch"] = cfg.arch;
  return ck;
}

RunResult train_run(const RunConfig& cfg) {
  const Dataset data = make_dataset(cfg.dataset);
  return train_run(cfg, data);
}

RunResult train_run(const RunConfig& cfg, const Dataset& data) {
  const NetworkSpec spec = named_architecture(cfg.arch, data);
  spec.validate();
  const std::size_t n_train = data.train_x.dim(0);
  const std::size_t batch = std::min(cfg.batch_size, n_train);
  const std::size_t ipe = std::max<std::size_t>(1, n_train / batch);
  const schedules::ScheduleSpec schedule = cfg.schedule.with_iters_per_epoch(ipe);
  schedule.validate();

  ParamVector params = init_params(spec, mix_seed(cfg.seed, 3), cfg.init_scale);
  OptimizerState opt = OptimizerState::make(cfg.optimizer, params.dim());
  const FreezeMask stack_mask = freeze_dense_stack(spec, *params.layout);

  Rng batch_rng(mix_seed(cfg.seed, 4));
  Rng aug_rng(mix_seed(cfg.seed, 5));
  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  RunResult result;
  result.checkpoints.emplace(0, make_checkpoint(cfg, spec, params, 0));

  const LossSpec loss_spec;
  const auto frozen_now = [&](std::size_t global_iter) -> const FreezeMask& {
    static const FreezeMask empty;
    for (const FreezeWindow& w : cfg.freeze) {
      if (global_iter >= w.start_iter && global_iter < w.end_iter) {
        if (w.target == "dense-stack") return stack_mask;
        throw std::invalid_argument("unknown freeze target '" + w.target + "'");
      }
    }
    return empty;
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs && !result.diverged; ++epoch) {
    batch_rng.shuffle(order);
    double last_lr = 0.0;
    for (std::size_t it = 0; it < ipe; ++it) {
      const std::vector<std::size_t> idx(order.begin() + it * batch,
                                         order.begin() + (it + 1) * batch);
      Batch b;
      b.x = gather_batch(data.train_x, idx);
      if (cfg.augmentation && data.image) b.x = random_crop_pad(b.x, cfg.augment_pad, aug_rng);
      b.labels.reserve(batch);
      for (std::size_t i : idx) b.labels.push_back(data.train_y[i]);

      last_lr = schedules::lr_at(schedule, epoch, it);
      try {
        LossGradResult lg = loss_and_grad(spec, params, b, loss_spec);
        optimizer_step(opt, params, lg.grad, last_lr, frozen_now(epoch * ipe + it));
      } catch (const OverflowError&) {
        result.diverged = true;
        result.halted_epoch = epoch;
        break;
      }
    }
    if (result.diverged) break;

    EpochLog log;
    log.epoch = epoch + 1;
    log.lr = last_lr;
    const EvalMetrics m = evaluate_params(spec, params, data);
    log.train_loss = m.train.loss;
    log.train_acc = m.train.accuracy;
    log.val_loss = m.val.loss;
    log.val_acc = m.val.accuracy;
    result.log.push_back(log);

    const std::size_t completed = epoch + 1;
    if (std::find(cfg.checkpoint_epochs.begin(), cfg.checkpoint_epochs.end(), completed) !=
        cfg.checkpoint_epochs.end()) {
      result.checkpoints.emplace(completed, make_checkpoint(cfg, spec, params, completed));
    }
  }

  // Final state (or last good state of a halted run).
  const std::size_t final_epoch =
      result.diverged ? result.halted_epoch : cfg.epochs;
  if (!result.checkpoints.count(final_epoch)) {
    nlohmann::json extra;
    if (result.diverged) extra["diverged"] = true;
    result.checkpoints.emplace(final_epoch, make_checkpoint(cfg, spec, params, final_epoch,
                                                            std::move(extra)));
  }
  return result;
}

void write_run_artifacts(const RunConfig& cfg, const RunResult& result,
                         const std::filesystem::path& out_dir) {
  const std::filesystem::path dir = out_dir / cfg.name;
  std::filesystem::create_directories(dir);

  CsvWriter csv({"epoch", "lr", "train_loss", "train_acc", "val_loss", "val_acc"});
  for (const EpochLog& row : result.log) {
    csv.add_row(std::vector<double>{static_cast<double>(row.epoch), row.lr, row.train_loss,
                                    row.train_acc, row.val_loss, row.val_acc});
  }
  csv.write(dir / "metrics.csv");

  nlohmann::json summary;
  summary["config"] = cfg.to_json();
  summary["diverged"] = result.diverged;
  if (result.diverged) summary["halted_epoch"] = result.halted_epoch;
  write_json(dir / "resolved_config.json", summary);

  for (const auto& [epoch, ck] : result.checkpoints) {
    save_checkpoint(dir / ("ckpt_" + std::to_string(epoch) + ".llab"), ck);
  }
}

std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b) {
  const nlohmann::json ja = a.to_json(), jb = b.to_json();
  std::vector<std::string> keys;
  for (auto it = ja.begin(); it != ja.end(); ++it) {
    if (it.key() == "name") continue;  // names always differ
    if (jb.at(it.key()) != it.value()) keys.push_back(it.key());
  }
  return keys;
}

}  // namespace llab::harness
