#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "llab/checkpoint.hpp"
#include "llab/datasets.hpp"
#include "llab/eval.hpp"
#include "llab/network.hpp"
#include "llab/optimizer.hpp"
#include "llab/schedules.hpp"

namespace llab::harness {

// Freeze window over global iterations: [start_iter, end_iter).
struct FreezeWindow {
  std::string target = "dense-stack";
  std::size_t start_iter = 0;
  std::size_t end_iter = 0;
};

struct RunConfig {
  std::string name = "run";
  DatasetSpec dataset;
  std::string arch = "two-moons-mlp";  // named architecture, resolved per dataset
  OptimizerConfig optimizer;
  schedules::ScheduleSpec schedule = schedules::ScheduleSpec::constant(0.05);
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  double init_scale = 1.0;
  std::vector<std::size_t> checkpoint_epochs;
  bool augmentation = false;
  std::size_t augment_pad = 2;
  std::vector<FreezeWindow> freeze;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

struct EpochLog {
  std::size_t epoch = 0;  // completed epochs
  double lr = 0.0;        // rate used on the last iteration of the epoch
  double train_loss = 0.0, train_acc = 0.0;
  double val_loss = 0.0, val_acc = 0.0;
};

struct RunResult {
  std::vector<EpochLog> log;
  std::map<std::size_t, Checkpoint> checkpoints;  // keyed by completed epochs; 0 = init
  bool diverged = false;
  std::size_t halted_epoch = 0;
};

// Deterministic single-threaded training loop. Checkpoints are taken at the
// configured epoch counts (before any learning-rate restart that fires at
// that boundary), plus the init and final states.
RunResult train_run(const RunConfig& cfg, const Dataset& data);
RunResult train_run(const RunConfig& cfg);

// Metrics CSV + resolved config + checkpoint files under out_dir/<run name>/.
void write_run_artifacts(const RunConfig& cfg, const RunResult& result,
                         const std::filesystem::path& out_dir);

// Built-in desk-scale architectures:
//   two-moons-mlp : dense 2-16-16-2 with relu
//   tiny-cnn      : 2 conv blocks + 2 dense, for 16x16 single-channel images
//   student-cnn   : [conv, maxpool, relu]x2, fc, relu, fc, fc, softmax
//   teacher-cnn   : deeper conv stack for the distillation teacher
NetworkSpec named_architecture(const std::string& name, const Dataset& data);

Checkpoint make_checkpoint(const RunConfig& cfg, const NetworkSpec& spec,
                           const ParamVector& params, std::size_t epoch,
                           nlohmann::json extra = nlohmann::json::object());

// Experiment recipes; each expands to a finite set of runs plus analysis
// steps and writes its artifact bundle under out_dir/<recipe>/.
struct RecipeOptions {
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::filesystem::path out_dir = "out";
  double budget = 1.0;  // scales epoch counts for quick smoke runs
};

std::vector<std::string> recipe_names();
void run_recipe(const std::string& name, const RecipeOptions& opt);

// Same as run_recipe but also returns the machine-readable summary the
// recipe writes as summary.json (barrier heights, end-of-warmup accuracies,
// KL numbers, ...). The acceptance suite asserts on this.
nlohmann::json run_recipe_json(const std::string& name, const RecipeOptions& opt);

// Expansions exposed for tests: each mode variant differs from the reference
// config in exactly one knob.
std::vector<RunConfig> expand_mode_zoo(std::uint64_t seed);
std::vector<RunConfig> expand_warmup_freeze(std::uint64_t seed);

// Mechanical config diff: names of top-level knobs whose JSON differs.
std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b);

}  // namespace llab::harness
