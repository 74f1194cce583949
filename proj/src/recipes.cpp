#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "llab/curves.hpp"
#include "llab/distill.hpp"
#include "llab/exports.hpp"
#include "llab/harness.hpp"
#include "llab/landscape.hpp"
#include "llab/repsim.hpp"

namespace llab::harness {

namespace {

std::size_t scaled(std::size_t epochs, double budget) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(epochs * budget)));
}

DatasetSpec two_moons_spec(std::uint64_t seed) {
  DatasetSpec d;
  d.kind = "two-moons";
  d.params = {{"n", 400}, {"noise", 0.12}, {"seed", seed}};
  return d;
}

DatasetSpec tiny_images_spec(std::uint64_t seed) {
  DatasetSpec d;
  d.kind = "tiny-images";
  d.params = {{"classes", 2}, {"size", 16},    {"train_per_class", 256},
              {"val_per_class", 128}, {"noise", 0.55}, {"max_shift", 2},
              {"seed", seed}};
  return d;
}

RunConfig moons_reference(std::uint64_t seed) {
  RunConfig c;
  c.name = "mode-G";
  c.dataset = two_moons_spec(seed);
  c.arch = "two-moons-mlp";
  c.optimizer.kind = OptimizerKind::SgdMomentum;
  c.optimizer.momentum = 0.9;
  c.optimizer.weight_decay = 5e-4;
  c.schedule = schedules::ScheduleSpec::step(0.05, 5.0, {12, 24, 32});
  c.batch_size = 32;
  c.epochs = 40;
  c.seed = seed;
  c.augmentation = true;  // no-op on point data, but part of the reference knob set
  return c;
}

void write_curve_csv(const curves::CurveEvalReport& report, const std::filesystem::path& path) {
  CsvWriter csv({"t", "train_loss", "train_acc", "val_loss", "val_acc"});
  for (const auto& p : report.points) {
    csv.add_row(std::vector<double>{p.t, p.train_loss, p.train_acc, p.val_loss, p.val_acc});
  }
  csv.write(path);
}

void write_segment_csv(const landscape::SegmentReport& report,
                       const std::filesystem::path& path) {
  CsvWriter csv({"lambda", "train_loss", "train_acc", "val_loss", "val_acc"});
  for (const auto& p : report.points) {
    csv.add_row(std::vector<double>{p.lambda, p.train_loss, p.train_acc, p.val_loss, p.val_acc});
  }
  csv.write(path);
}

void write_heatmap(const repsim::SimilarityHeatmap& hm, const std::filesystem::path& base) {
  CsvWriter csv({"layer_a", "layer_b", "similarity"});
  for (Eigen::Index i = 0; i < hm.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < hm.values.cols(); ++j) {
      csv.add_row(std::vector<std::string>{hm.labels_a[static_cast<std::size_t>(i)],
                                           hm.labels_b[static_cast<std::size_t>(j)],
                                           format_double(hm.values(i, j))});
    }
  }
  csv.write(base.string() + ".csv");
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(hm.values.size()));
  for (Eigen::Index i = 0; i < hm.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < hm.values.cols(); ++j) vals.push_back(hm.values(i, j));
  }
  write_pgm(base.string() + ".pgm", static_cast<std::size_t>(hm.values.cols()),
            static_cast<std::size_t>(hm.values.rows()), vals, false,
            {{"rows", hm.labels_a}, {"cols", hm.labels_b}});
}

// Indices of dense-stack rows within the analysis-layer list (used for the
// warmup diagonal comparison).
std::vector<std::size_t> dense_stack_rows(const NetworkSpec& spec,
                                          const std::vector<std::size_t>& analysis) {
  std::size_t first_fc = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerKind k = spec.layers[i].kind;
    if (k == LayerKind::Conv2d || k == LayerKind::MaxPool) first_fc = i + 1;
  }
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < analysis.size(); ++r) {
    if (analysis[r] >= first_fc) rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// mode-zoo: reference optimum plus six single-knob variants, each connected
// to the reference through a trained curve.
// ---------------------------------------------------------------------------
nlohmann::json recipe_mode_zoo(const RecipeOptions& opt) {
  const std::filesystem::path dir = opt.out_dir / "mode-zoo";
  const std::vector<RunConfig> configs = expand_mode_zoo(opt.seed);
  const Dataset data = make_dataset(configs.front().dataset);
  nlohmann::json summary;

  std::vector<std::pair<std::string, ParamVector>> modes;
  NetworkSpec spec;
  for (RunConfig cfg : configs) {
    cfg.epochs = scaled(cfg.epochs, opt.budget);
    const RunResult r = train_run(cfg, data);
    write_run_artifacts(cfg, r, dir);
    const Checkpoint& final = r.checkpoints.rbegin()->second;
    spec = final.spec;
    modes.emplace_back(cfg.name, final.params);
    summary["runs"][cfg.name] = {{"final_train_loss", r.log.back().train_loss},
                                 {"final_val_acc", r.log.back().val_acc}};
  }

  curves::CurveTrainConfig ct;
  ct.iterations = scaled(3000, opt.budget);
  ct.batch_size = 64;
  ct.lr = 0.05;
  ct.seed = mix_seed(opt.seed, 7);
  for (std::size_t v = 1; v < modes.size(); ++v) {
    const std::string pair = "G" + std::string(1, static_cast<char>('A' + v - 1));
    curves::CurveModel curve = curves::init_curve(modes[0].second, modes[v].second);
    const landscape::SegmentReport seg =
        landscape::segment_eval(spec, modes[v].second, modes[0].second, 25, data, opt.threads);
    write_segment_csv(seg, dir / ("segment_" + pair + ".csv"));
    const curves::CurveTrainResult trained = curves::train_curve(curve, spec, data, ct);
    const curves::CurveEvalReport report =
        curves::evaluate_curve(trained.curve, spec, data, 25, opt.threads);
    write_curve_csv(report, dir / ("curve_" + pair + ".csv"));
    summary["curves"][pair] = {
        {"max_curve_train_loss", report.max_train_loss()},
        {"segment_barrier_height", landscape::barrier_check(seg).height}};
  }
  return summary;
}

// ---------------------------------------------------------------------------
// sgdr-vs-step: pre-restart iterate pairs from a cosine-restart run versus
// matched pairs around the step-decay milestones, with segment barriers and
// trained connecting curves for both.
// ---------------------------------------------------------------------------
RunConfig sgdr_run_config(std::uint64_t seed, double budget) {
  RunConfig c;
  c.name = "sgdr";
  c.dataset = tiny_images_spec(seed);
  c.arch = "tiny-cnn";
  c.optimizer.momentum = 0.9;
  c.optimizer.weight_decay = 5e-4;
  c.schedule = schedules::ScheduleSpec::cosine_restarts(1e-6, 0.20, 3, 2);
  c.batch_size = 16;
  c.epochs = scaled(21, budget);
  c.seed = seed;
  c.checkpoint_epochs = {3, 9, 21};
  return c;
}

RunConfig step_run_config(std::uint64_t seed, double budget) {
  RunConfig c;
  c.name = "step";
  c.dataset = tiny_images_spec(seed);
  c.arch = "tiny-cnn";
  c.optimizer.momentum = 0.9;
  c.optimizer.weight_decay = 5e-4;
  c.schedule = schedules::ScheduleSpec::step(0.20, 5.0, {6, 16});
  c.batch_size = 16;
  c.epochs = scaled(21, budget);
  c.seed = seed;
  c.checkpoint_epochs = {5, 7, 15, 17};
  return c;
}

nlohmann::json recipe_sgdr_vs_step(const RecipeOptions& opt, bool train_curves) {
  const std::filesystem::path dir = opt.out_dir / "sgdr-vs-step";
  RunConfig sgdr = sgdr_run_config(opt.seed, opt.budget);
  RunConfig step = step_run_config(opt.seed, opt.budget);
  const Dataset data = make_dataset(sgdr.dataset);

  const RunResult sgdr_result = train_run(sgdr, data);
  const RunResult step_result = train_run(step, data);
  write_run_artifacts(sgdr, sgdr_result, dir);
  write_run_artifacts(step, step_result, dir);

  const NetworkSpec spec = named_architecture(sgdr.arch, data);
  const auto pair_list = [](const std::vector<std::size_t>& e) {
    return std::vector<std::array<std::size_t, 2>>{{e[0], e[1]}, {e[1], e[2]}, {e[0], e[2]}};
  };
  const std::vector<std::array<std::size_t, 2>> sgdr_pairs = pair_list({3, 9, 21});
  const std::vector<std::array<std::size_t, 2>> step_pairs = {{5, 7}, {15, 17}, {5, 17}};

  nlohmann::json summary;
  const auto analyze = [&](const std::string& run_name, const RunResult& result,
                           const std::vector<std::array<std::size_t, 2>>& pairs) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [ea, eb] : pairs) {
      if (!result.checkpoints.count(ea) || !result.checkpoints.count(eb)) continue;
      const ParamVector& wa = result.checkpoints.at(ea).params;
      const ParamVector& wb = result.checkpoints.at(eb).params;
      const std::string tag =
          run_name + "_w" + std::to_string(ea) + "-w" + std::to_string(eb);
      const landscape::SegmentReport seg =
          landscape::segment_eval(spec, wb, wa, 25, data, opt.threads);
      write_segment_csv(seg, dir / ("segment_" + tag + ".csv"));
      const landscape::BarrierResult barrier = landscape::barrier_check(seg);
      nlohmann::json row = {{"pair", tag},
                            {"has_barrier", barrier.has_barrier},
                            {"height", barrier.height},
                            {"lambda", barrier.lambda}};
      if (train_curves) {
        curves::CurveTrainConfig ct;
        ct.iterations = scaled(1500, opt.budget);
        ct.batch_size = 16;
        ct.lr = 0.02;
        ct.seed = mix_seed(opt.seed, 11);
        const auto trained = curves::train_curve(curves::init_curve(wa, wb), spec, data, ct);
        const auto curve_report = curves::evaluate_curve(trained.curve, spec, data, 25, opt.threads);
        write_curve_csv(curve_report, dir / ("curve_" + tag + ".csv"));
        row["max_curve_train_loss"] = curve_report.max_train_loss();
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };

  summary["sgdr_pairs"] = analyze("sgdr", sgdr_result, sgdr_pairs);
  summary["step_pairs"] = analyze("step", step_result, step_pairs);

  CsvWriter cmp({"run", "pair", "has_barrier", "height", "lambda"});
  for (const char* key : {"sgdr_pairs", "step_pairs"}) {
    for (const auto& row : summary[key]) {
      cmp.add_row(std::vector<std::string>{
          key, row["pair"].get<std::string>(), row["has_barrier"].get<bool>() ? "1" : "0",
          format_double(row["height"].get<double>()),
          format_double(row["lambda"].get<double>())});
    }
  }
  cmp.write(dir / "barrier_comparison.csv");
  return summary;
}

// ---------------------------------------------------------------------------
// sgdr-plane: loss surfaces on the plane through the last two pre-restart
// iterates and their trained connection, with every epoch's iterate
// projected onto it.
// ---------------------------------------------------------------------------
nlohmann::json recipe_sgdr_plane(const RecipeOptions& opt) {
  const std::filesystem::path dir = opt.out_dir / "sgdr-plane";
  RunConfig sgdr = sgdr_run_config(opt.seed, opt.budget);
  // Checkpoint every epoch so the iterate trail can be projected.
  sgdr.checkpoint_epochs.clear();
  for (std::size_t e = 1; e <= sgdr.epochs; ++e) sgdr.checkpoint_epochs.push_back(e);
  const Dataset data = make_dataset(sgdr.dataset);
  const RunResult result = train_run(sgdr, data);
  write_run_artifacts(sgdr, result, dir);

  const NetworkSpec spec = named_architecture(sgdr.arch, data);
  const std::size_t e_mid = 9 <= sgdr.epochs ? 9 : sgdr.epochs / 2;
  const std::size_t e_end = sgdr.epochs;
  const ParamVector& w_mid = result.checkpoints.at(e_mid).params;
  const ParamVector& w_end = result.checkpoints.at(e_end).params;

  curves::CurveTrainConfig ct;
  ct.iterations = scaled(1500, opt.budget);
  ct.batch_size = 16;
  ct.lr = 0.02;
  ct.seed = mix_seed(opt.seed, 13);
  const auto trained = curves::train_curve(curves::init_curve(w_mid, w_end), spec, data, ct);

  const landscape::PlaneBasis basis = landscape::plane_basis(w_mid, w_end, trained.curve.bend);
  const landscape::GridBounds bounds = landscape::default_bounds(basis, 0.3);

  nlohmann::json summary;
  summary["plane"] = {{"mid_epoch", e_mid}, {"end_epoch", e_end}};
  for (const landscape::Metric metric :
       {landscape::Metric::TrainLoss, landscape::Metric::ValLoss}) {
    landscape::LossGrid grid =
        landscape::grid_eval(basis, spec, bounds, 41, 41, metric, data, opt.threads);
    for (const auto& [epoch, ck] : result.checkpoints) {
      const landscape::ProjectionResult proj = landscape::project_to_plane(basis, ck.params);
      grid.iterates.push_back({"epoch_" + std::to_string(epoch), proj.coords[0], proj.coords[1],
                               proj.residual_norm});
    }
    const std::string base = (dir / ("plane_" + landscape::metric_name(metric))).string();
    CsvWriter csv({"x", "y", "value"});
    for (std::size_t iy = 0; iy < grid.ny; ++iy) {
      for (std::size_t ix = 0; ix < grid.nx; ++ix) {
        const double x = bounds.x_min + (bounds.x_max - bounds.x_min) * ix / double(grid.nx - 1);
        const double y = bounds.y_min + (bounds.y_max - bounds.y_min) * iy / double(grid.ny - 1);
        csv.add_row(std::vector<double>{x, y, grid.value_at(ix, iy)});
      }
    }
    csv.write(base + ".csv");
    CsvWriter iter_csv({"label", "x", "y", "residual"});
    for (const auto& p : grid.iterates) {
      iter_csv.add_row(std::vector<std::string>{p.label, format_double(p.x), format_double(p.y),
                                                format_double(p.residual)});
    }
    iter_csv.write(base + "_iterates.csv");
    write_pgm(base + ".pgm", grid.nx, grid.ny, grid.values, /*log_scale=*/true,
              {{"metric", landscape::metric_name(metric)}});
    summary[landscape::metric_name(metric)] = {{"nodes", grid.values.size()}};
  }
  return summary;
}

// ---------------------------------------------------------------------------
// warmup-compare / warmup-freeze: small-batch vs large-batch training with
// and without a warmup ramp (and with the dense stack frozen instead), plus
// layer similarity between init and end-of-warmup.
// ---------------------------------------------------------------------------
struct WarmupSetup {
  std::size_t sb_batch = 16;
  std::size_t lb_batch = 256;
  double sb_lr = 0.04;
  std::size_t warmup_iters = 30;
  std::size_t epochs = 30;
  std::size_t end_of_warmup_epoch = 15;  // warmup_iters / (train/lb_batch)
};

RunConfig warmup_run(const std::string& name, std::uint64_t seed, const WarmupSetup& s,
                     bool large_batch, bool warmup, bool freeze, double budget) {
  RunConfig c;
  c.name = name;
  c.dataset = tiny_images_spec(seed);
  c.arch = "tiny-cnn";
  c.optimizer.momentum = 0.9;
  c.optimizer.weight_decay = 5e-4;
  c.batch_size = large_batch ? s.lb_batch : s.sb_batch;
  const double lr = large_batch
                        ? schedules::scale_lr_for_batch(s.sb_lr, s.sb_batch, s.lb_batch)
                        : s.sb_lr;
  c.schedule = schedules::ScheduleSpec::step(lr, 10.0, {20, 26});
  if (warmup) c.schedule = c.schedule.with_warmup(lr, s.warmup_iters);
  if (freeze) c.freeze.push_back({"dense-stack", 0, s.warmup_iters});
  c.epochs = scaled(s.epochs, budget);
  c.seed = seed;
  c.checkpoint_epochs = {std::min(s.end_of_warmup_epoch, c.epochs)};
  return c;
}

nlohmann::json recipe_warmup(const RecipeOptions& opt, bool with_freeze) {
  const std::filesystem::path dir = opt.out_dir / (with_freeze ? "warmup-freeze" : "warmup-compare");
  const WarmupSetup setup;

  std::vector<RunConfig> configs = {
      warmup_run("sb", opt.seed, setup, false, false, false, opt.budget),
      warmup_run("lb-warmup", opt.seed, setup, true, true, false, opt.budget),
      warmup_run("lb-plain", opt.seed, setup, true, false, false, opt.budget)};
  if (with_freeze) {
    configs.push_back(warmup_run("lb-freeze", opt.seed, setup, true, false, true, opt.budget));
  }

  const Dataset data = make_dataset(configs.front().dataset);
  const NetworkSpec spec = named_architecture("tiny-cnn", data);
  const std::size_t warm_epoch = std::min(setup.end_of_warmup_epoch,
                                          configs.front().epochs);

  nlohmann::json summary;
  std::map<std::string, RunResult> results;
  for (const RunConfig& cfg : configs) {
    results.emplace(cfg.name, train_run(cfg, data));
    write_run_artifacts(cfg, results.at(cfg.name), dir);
    const RunResult& r = results.at(cfg.name);
    const auto& warm_log = r.log.at(std::min(warm_epoch, r.log.size()) - 1);
    summary["end_of_warmup"][cfg.name] = {{"epoch", warm_log.epoch},
                                          {"val_acc", warm_log.val_acc},
                                          {"val_loss", warm_log.val_loss}};
    summary["final"][cfg.name] = {{"val_acc", r.log.back().val_acc}};
  }

  // Layer similarity between init and end-of-warmup, per run.
  const std::vector<std::size_t> analysis = repsim::analysis_layers(spec);
  const std::vector<std::size_t> fc_rows = dense_stack_rows(spec, analysis);
  for (const auto& [name, r] : results) {
    const ParamVector& p0 = r.checkpoints.at(0).params;
    const ParamVector& pw = r.checkpoints.at(warm_epoch).params;
    const repsim::SimilarityHeatmap hm = repsim::layer_heatmap(
        spec, p0, spec, pw, data.val_x, analysis, analysis, opt.threads);
    write_heatmap(hm, dir / ("cca_init_vs_warm_" + name));
    const std::vector<double> diag = hm.diagonal();
    double fc_mean = 0.0;
    for (std::size_t rix : fc_rows) fc_mean += diag[rix];
    fc_mean /= static_cast<double>(fc_rows.size());
    summary["cca_diag"][name] = {{"diagonal", diag}, {"dense_stack_mean", fc_mean}};
  }

  CsvWriter csv({"run", "end_of_warmup_val_acc", "final_val_acc", "cca_dense_stack_mean"});
  for (const auto& [name, r] : results) {
    csv.add_row(std::vector<std::string>{
        name, format_double(summary["end_of_warmup"][name]["val_acc"].get<double>()),
        format_double(summary["final"][name]["val_acc"].get<double>()),
        format_double(summary["cca_diag"][name]["dense_stack_mean"].get<double>())});
  }
  csv.write(dir / "warmup_comparison.csv");
  return summary;
}

// ---------------------------------------------------------------------------
// distill-cca: teacher training, distilled + hard-label students, and the
// three-panel layer-similarity comparison.
// ---------------------------------------------------------------------------
nlohmann::json recipe_distill_cca(const RecipeOptions& opt) {
  const std::filesystem::path dir = opt.out_dir / "distill-cca";

  RunConfig teacher_cfg;
  teacher_cfg.name = "teacher";
  teacher_cfg.dataset = tiny_images_spec(opt.seed);
  teacher_cfg.arch = "teacher-cnn";
  teacher_cfg.optimizer.momentum = 0.9;
  teacher_cfg.optimizer.weight_decay = 5e-4;
  teacher_cfg.schedule = schedules::ScheduleSpec::step(0.05, 5.0, {12, 18});
  teacher_cfg.batch_size = 16;
  teacher_cfg.epochs = scaled(20, opt.budget);
  teacher_cfg.seed = opt.seed;

  const Dataset data = make_dataset(teacher_cfg.dataset);
  const RunResult teacher_result = train_run(teacher_cfg, data);
  write_run_artifacts(teacher_cfg, teacher_result, dir);
  const Checkpoint& teacher = teacher_result.checkpoints.rbegin()->second;

  distill::DistillConfig dc;
  dc.teacher_spec = teacher.spec;
  dc.teacher_params = teacher.params;
  dc.student_spec = named_architecture("student-cnn", data);
  dc.temperature = 5.0;
  dc.optimizer.momentum = 0.9;
  dc.schedule = schedules::ScheduleSpec::step(0.05, 5.0, {10});
  dc.batch_size = 16;
  dc.epochs = scaled(14, opt.budget);
  dc.seed = mix_seed(opt.seed, 19);

  const distill::DistillOutcome outcome = distill::distill_train(dc, data);
  write_json(dir / "distill_report.json", outcome.report.to_json());
  save_checkpoint(dir / "student_distilled.llab",
                  Checkpoint{dc.student_spec, outcome.distilled,
                             {{"role", "distilled"}, {"temperature", dc.temperature}}});
  save_checkpoint(dir / "student_baseline.llab",
                  Checkpoint{dc.student_spec, outcome.baseline, {{"role", "baseline"}}});

  const repsim::SimilarityHeatmap hm_d = repsim::layer_heatmap(
      teacher.spec, teacher.params, dc.student_spec, outcome.distilled, data.val_x, {}, {},
      opt.threads);
  const repsim::SimilarityHeatmap hm_b = repsim::layer_heatmap(
      teacher.spec, teacher.params, dc.student_spec, outcome.baseline, data.val_x, {}, {},
      opt.threads);
  repsim::SimilarityHeatmap hm_diff = hm_d;
  hm_diff.values = (hm_d.values - hm_b.values).cwiseAbs();
  write_heatmap(hm_d, dir / "cca_distilled_vs_teacher");
  write_heatmap(hm_b, dir / "cca_baseline_vs_teacher");
  write_heatmap(hm_diff, dir / "cca_difference");

  nlohmann::json summary;
  summary["distilled_val_kl"] = outcome.report.distilled_val_kl;
  summary["baseline_val_kl"] = outcome.report.baseline_val_kl;
  summary["distilled_final_val_acc"] = outcome.report.log.back().distilled_val_acc;
  summary["baseline_final_val_acc"] = outcome.report.log.back().baseline_val_acc;
  summary["diff_heatmap_min"] = hm_diff.values.minCoeff();
  summary["diff_heatmap_max"] = hm_diff.values.maxCoeff();
  return summary;
}

}  // namespace

std::vector<RunConfig> expand_mode_zoo(std::uint64_t seed) {
  std::vector<RunConfig> configs;
  configs.push_back(moons_reference(seed));

  RunConfig a = moons_reference(seed);  // large batch
  a.name = "mode-A";
  a.batch_size = 300;
  configs.push_back(a);

  RunConfig b = moons_reference(seed);  // adaptive optimizer, all else unchanged
  b.name = "mode-B";
  b.optimizer.kind = OptimizerKind::Adam;
  configs.push_back(b);

  RunConfig c = moons_reference(seed);  // linear decay instead of step
  c.name = "mode-C";
  c.schedule = schedules::ScheduleSpec::linear(0.05, 1e-4, 40);
  configs.push_back(c);

  RunConfig d = moons_reference(seed);  // weaker L2
  d.name = "mode-D";
  d.optimizer.weight_decay = 5e-6;
  configs.push_back(d);

  RunConfig e = moons_reference(seed);  // poor init
  e.name = "mode-E";
  e.init_scale = 3.0;
  configs.push_back(e);

  RunConfig f = moons_reference(seed);  // no augmentation
  f.name = "mode-F";
  f.augmentation = false;
  configs.push_back(f);

  return configs;
}

std::vector<RunConfig> expand_warmup_freeze(std::uint64_t seed) {
  const WarmupSetup setup;
  return {warmup_run("sb", seed, setup, false, false, false, 1.0),
          warmup_run("lb-warmup", seed, setup, true, true, false, 1.0),
          warmup_run("lb-plain", seed, setup, true, false, false, 1.0),
          warmup_run("lb-freeze", seed, setup, true, false, true, 1.0)};
}

std::vector<std::string> recipe_names() {
  return {"mode-zoo", "sgdr-vs-step", "sgdr-plane", "warmup-compare", "warmup-freeze",
          "distill-cca"};
}

nlohmann::json run_recipe_json(const std::string& name, const RecipeOptions& opt) {
  nlohmann::json summary;
  if (name == "mode-zoo") {
    summary = recipe_mode_zoo(opt);
  } else if (name == "sgdr-vs-step") {
    summary = recipe_sgdr_vs_step(opt, /*train_curves=*/true);
  } else if (name == "sgdr-plane") {
    summary = recipe_sgdr_plane(opt);
  } else if (name == "warmup-compare") {
    summary = recipe_warmup(opt, /*with_freeze=*/false);
  } else if (name == "warmup-freeze") {
    summary = recipe_warmup(opt, /*with_freeze=*/true);
  } else if (name == "distill-cca") {
    summary = recipe_distill_cca(opt);
  } else {
    throw std::invalid_argument("unknown recipe '" + name + "'; available: mode-zoo, "
                                "sgdr-vs-step, sgdr-plane, warmup-compare, warmup-freeze, "
                                "distill-cca");
  }
  summary["recipe"] = name;
  summary["seed"] = opt.seed;
  write_json(opt.out_dir / name / "summary.json", summary);
  return summary;
}

void run_recipe(const std::string& name, const RecipeOptions& opt) {
  run_recipe_json(name, opt);
}

}  // namespace llab::harness
