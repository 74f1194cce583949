// Command-line front end: training runs, curve finding, loss-surface probes,
// layer-similarity heatmaps, distillation and the packaged experiment
// recipes. Failures exit nonzero with a JSON error object on stdout.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "llab/curves.hpp"
#include "llab/distill.hpp"
#include "llab/errors.hpp"
#include "llab/exports.hpp"
#include "llab/harness.hpp"
#include "llab/landscape.hpp"
#include "llab/repsim.hpp"
#include "llab/schedules.hpp"

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw llab::FormatError("cannot open config file: " + path);
  json j;
  is >> j;
  return j;
}

llab::Dataset dataset_from_checkpoint(const llab::Checkpoint& ck) {
  if (!ck.meta.contains("dataset")) {
    throw llab::FormatError("checkpoint carries no dataset description");
  }
  return llab::make_dataset(llab::dataset_spec_from_json(ck.meta.at("dataset")));
}

void write_curve_csv(const llab::curves::CurveEvalReport& report, const std::string& path) {
  llab::CsvWriter csv({"t", "train_loss", "train_acc", "val_loss", "val_acc"});
  for (const auto& p : report.points) {
    csv.add_row(std::vector<double>{p.t, p.train_loss, p.train_acc, p.val_loss, p.val_acc});
  }
  csv.write(path);
}

struct GlobalOpts {
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale toolkit for training-heuristic analysis"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--out-dir", g.out_dir, "artifact output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "run seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads for read-only fan-out")
      ->capture_default_str();

  // train
  auto* cmd_train = app.add_subcommand("train", "train a network from a run config");
  std::string train_config;
  cmd_train->add_option("--config", train_config, "run config JSON")->required();
  bool train_override_seed = false;

  // connect
  auto* cmd_connect = app.add_subcommand("connect", "train a low-loss curve between two optima");
  std::string con_a, con_b;
  std::size_t con_iters = 3000, con_points = 25;
  double con_lr = 0.05;
  cmd_connect->add_option("--ckpt-a", con_a, "first endpoint checkpoint")->required();
  cmd_connect->add_option("--ckpt-b", con_b, "second endpoint checkpoint")->required();
  cmd_connect->add_option("--iters", con_iters, "bend training iterations")
      ->capture_default_str();
  cmd_connect->add_option("--lr", con_lr, "bend training learning rate")->capture_default_str();
  cmd_connect->add_option("--points", con_points, "evaluation grid size")->capture_default_str();

  // segment
  auto* cmd_segment = app.add_subcommand("segment", "metrics along the straight segment");
  std::string seg_a, seg_b;
  std::size_t seg_points = 25;
  cmd_segment->add_option("--ckpt-a", seg_a, "segment end (lambda=1)")->required();
  cmd_segment->add_option("--ckpt-b", seg_b, "segment end (lambda=0)")->required();
  cmd_segment->add_option("--points", seg_points, "grid size")->capture_default_str();

  // plane
  auto* cmd_plane = app.add_subcommand("plane", "metric surface on the plane through three checkpoints");
  std::string pl_a, pl_b, pl_theta, pl_metric = "train-loss";
  std::vector<std::string> pl_iterates;
  std::size_t pl_res = 41;
  cmd_plane->add_option("--ckpt-a", pl_a)->required();
  cmd_plane->add_option("--ckpt-b", pl_b)->required();
  cmd_plane->add_option("--ckpt-theta", pl_theta, "bend/third generator checkpoint")->required();
  cmd_plane->add_option("--iterates", pl_iterates, "checkpoints to project onto the plane");
  cmd_plane->add_option("--metric", pl_metric, "train-loss|val-loss|train-acc|val-acc")
      ->capture_default_str();
  cmd_plane->add_option("--res", pl_res, "grid resolution per axis")->capture_default_str();

  // cca
  auto* cmd_cca = app.add_subcommand("cca", "layer-similarity heatmap between two checkpoints");
  std::string cca_a, cca_b;
  cmd_cca->add_option("--ckpt-a", cca_a)->required();
  cmd_cca->add_option("--ckpt-b", cca_b)->required();

  // distill
  auto* cmd_distill = app.add_subcommand("distill", "teacher-student distillation");
  std::string di_teacher, di_arch = "student-cnn";
  double di_temp = 5.0;
  std::size_t di_epochs = 14;
  cmd_distill->add_option("--teacher", di_teacher, "teacher checkpoint")->required();
  cmd_distill->add_option("--student", di_arch, "student architecture name")
      ->capture_default_str();
  cmd_distill->add_option("--temperature", di_temp)->capture_default_str();
  cmd_distill->add_option("--epochs", di_epochs)->capture_default_str();

  // lr-dump
  auto* cmd_lr = app.add_subcommand("lr-dump", "emit (epoch, iteration, lr) for a schedule");
  std::string lr_config;
  std::size_t lr_epochs = 0;
  cmd_lr->add_option("--config", lr_config, "run config or schedule JSON")->required();
  cmd_lr->add_option("--epochs", lr_epochs, "override epoch count");

  // recipe
  auto* cmd_recipe = app.add_subcommand("recipe", "run a packaged experiment recipe");
  std::string recipe_name;
  double recipe_budget = 1.0;
  cmd_recipe->add_option("name", recipe_name, "mode-zoo|sgdr-vs-step|sgdr-plane|warmup-compare|warmup-freeze|distill-cca")
      ->required();
  cmd_recipe->add_option("--budget", recipe_budget, "epoch-count multiplier")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  (void)train_override_seed;

  try {
    const std::filesystem::path out_dir = g.out_dir;

    if (cmd_train->parsed()) {
      json j = load_json_file(train_config);
      llab::harness::RunConfig cfg = llab::harness::RunConfig::from_json(j);
      if (app.count("--seed")) cfg.seed = g.seed;
      const llab::harness::RunResult r = llab::harness::train_run(cfg);
      llab::harness::write_run_artifacts(cfg, r, out_dir);
      std::cout << "run '" << cfg.name << "': " << r.log.size() << " epochs, final val acc "
                << (r.log.empty() ? 0.0 : r.log.back().val_acc)
                << (r.diverged ? " (diverged, halted)" : "") << "\n";
      return r.diverged ? 2 : 0;
    }

    if (cmd_connect->parsed()) {
      const llab::Checkpoint a = llab::load_checkpoint(con_a);
      const llab::Checkpoint b = llab::load_checkpoint(con_b);
      const llab::Dataset data = dataset_from_checkpoint(a);
      llab::curves::CurveTrainConfig ct;
      ct.iterations = con_iters;
      ct.lr = con_lr;
      ct.seed = g.seed;
      const auto trained =
          llab::curves::train_curve(llab::curves::init_curve(a.params, b.params), a.spec, data, ct);
      const auto report =
          llab::curves::evaluate_curve(trained.curve, a.spec, data, con_points, g.threads);
      std::filesystem::create_directories(out_dir);
      write_curve_csv(report, (out_dir / "curve_eval.csv").string());
      llab::Checkpoint bend_ck{a.spec, trained.curve.bend,
                               {{"role", "curve-bend"},
                                {"endpoint_a", con_a},
                                {"endpoint_b", con_b},
                                {"dataset", a.meta.value("dataset", json())}}};
      llab::save_checkpoint(out_dir / "curve_bend.llab", bend_ck);
      std::cout << "max train loss along trained curve: " << report.max_train_loss()
                << (trained.aborted ? " (training aborted on overflow)" : "") << "\n";
      return 0;
    }

    if (cmd_segment->parsed()) {
      const llab::Checkpoint a = llab::load_checkpoint(seg_a);
      const llab::Checkpoint b = llab::load_checkpoint(seg_b);
      const llab::Dataset data = dataset_from_checkpoint(a);
      const auto report =
          llab::landscape::segment_eval(a.spec, a.params, b.params, seg_points, data, g.threads);
      std::filesystem::create_directories(out_dir);
      llab::CsvWriter csv({"lambda", "train_loss", "train_acc", "val_loss", "val_acc"});
      for (const auto& p : report.points) {
        csv.add_row(std::vector<double>{p.lambda, p.train_loss, p.train_acc, p.val_loss,
                                        p.val_acc});
      }
      csv.write(out_dir / "segment.csv");
      const auto barrier = llab::landscape::barrier_check(report);
      std::cout << "barrier: " << (barrier.has_barrier ? "yes" : "no") << ", height "
                << barrier.height << " at lambda " << barrier.lambda << "\n";
      return 0;
    }

    if (cmd_plane->parsed()) {
      const llab::Checkpoint a = llab::load_checkpoint(pl_a);
      const llab::Checkpoint b = llab::load_checkpoint(pl_b);
      const llab::Checkpoint th = llab::load_checkpoint(pl_theta);
      const llab::Dataset data = dataset_from_checkpoint(a);
      const auto basis = llab::landscape::plane_basis(a.params, b.params, th.params);
      const auto bounds = llab::landscape::default_bounds(basis, 0.3);
      auto grid = llab::landscape::grid_eval(basis, a.spec, bounds, pl_res, pl_res,
                                             llab::landscape::metric_from_name(pl_metric), data,
                                             g.threads);
      for (const std::string& path : pl_iterates) {
        const llab::Checkpoint it = llab::load_checkpoint(path);
        const auto proj = llab::landscape::project_to_plane(basis, it.params);
        grid.iterates.push_back({std::filesystem::path(path).stem().string(), proj.coords[0],
                                 proj.coords[1], proj.residual_norm});
      }
      std::filesystem::create_directories(out_dir);
      llab::CsvWriter csv({"x", "y", "value"});
      for (std::size_t iy = 0; iy < grid.ny; ++iy) {
        for (std::size_t ix = 0; ix < grid.nx; ++ix) {
          const double x = bounds.x_min +
                           (bounds.x_max - bounds.x_min) * ix / double(grid.nx - 1);
          const double y = bounds.y_min +
                           (bounds.y_max - bounds.y_min) * iy / double(grid.ny - 1);
          csv.add_row(std::vector<double>{x, y, grid.value_at(ix, iy)});
        }
      }
      csv.write(out_dir / "plane.csv");
      llab::CsvWriter icsv({"label", "x", "y", "residual"});
      for (const auto& p : grid.iterates) {
        icsv.add_row(std::vector<std::string>{p.label, llab::format_double(p.x),
                                              llab::format_double(p.y),
                                              llab::format_double(p.residual)});
      }
      icsv.write(out_dir / "plane_iterates.csv");
      llab::write_pgm(out_dir / "plane.pgm", grid.nx, grid.ny, grid.values, true,
                      {{"metric", pl_metric}});
      std::cout << "plane grid " << grid.nx << "x" << grid.ny << " written\n";
      return 0;
    }

    if (cmd_cca->parsed()) {
      const llab::Checkpoint a = llab::load_checkpoint(cca_a);
      const llab::Checkpoint b = llab::load_checkpoint(cca_b);
      const llab::Dataset data = dataset_from_checkpoint(a);
      const auto hm = llab::repsim::layer_heatmap(a.spec, a.params, b.spec, b.params, data.val_x,
                                                  {}, {}, g.threads);
      std::filesystem::create_directories(out_dir);
      llab::CsvWriter csv({"layer_a", "layer_b", "similarity"});
      std::vector<double> vals;
      for (Eigen::Index i = 0; i < hm.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < hm.values.cols(); ++j) {
          csv.add_row(std::vector<std::string>{hm.labels_a[i], hm.labels_b[j],
                                               llab::format_double(hm.values(i, j))});
          vals.push_back(hm.values(i, j));
        }
      }
      csv.write(out_dir / "cca_heatmap.csv");
      llab::write_pgm(out_dir / "cca_heatmap.pgm", hm.labels_b.size(), hm.labels_a.size(), vals,
                      false, {{"rows", hm.labels_a}, {"cols", hm.labels_b}});
      std::cout << "heatmap " << hm.labels_a.size() << "x" << hm.labels_b.size() << " written\n";
      return 0;
    }

    if (cmd_distill->parsed()) {
      const llab::Checkpoint teacher = llab::load_checkpoint(di_teacher);
      const llab::Dataset data = dataset_from_checkpoint(teacher);
      llab::distill::DistillConfig dc;
      dc.teacher_spec = teacher.spec;
      dc.teacher_params = teacher.params;
      dc.student_spec = llab::harness::named_architecture(di_arch, data);
      dc.temperature = di_temp;
      dc.epochs = di_epochs;
      dc.seed = g.seed;
      const auto outcome = llab::distill::distill_train(dc, data);
      std::filesystem::create_directories(out_dir);
      llab::write_json(out_dir / "distill_report.json", outcome.report.to_json());
      llab::save_checkpoint(out_dir / "student_distilled.llab",
                            llab::Checkpoint{dc.student_spec, outcome.distilled,
                                             {{"role", "distilled"},
                                              {"dataset", teacher.meta.value("dataset", json())}}});
      llab::save_checkpoint(out_dir / "student_baseline.llab",
                            llab::Checkpoint{dc.student_spec, outcome.baseline,
                                             {{"role", "baseline"},
                                              {"dataset", teacher.meta.value("dataset", json())}}});
      std::cout << "val KL to teacher: distilled " << outcome.report.distilled_val_kl
                << ", baseline " << outcome.report.baseline_val_kl << "\n";
      return 0;
    }

    if (cmd_lr->parsed()) {
      json j = load_json_file(lr_config);
      llab::schedules::ScheduleSpec spec;
      std::size_t epochs = lr_epochs;
      if (j.contains("schedule")) {
        const llab::harness::RunConfig cfg = llab::harness::RunConfig::from_json(j);
        spec = cfg.schedule;
        if (epochs == 0) epochs = cfg.epochs;
      } else {
        spec = llab::schedules::from_json(j);
      }
      if (epochs == 0) epochs = 10;
      std::filesystem::create_directories(out_dir);
      llab::CsvWriter csv({"epoch", "iteration", "lr"});
      for (std::size_t e = 0; e < epochs; ++e) {
        for (std::size_t it = 0; it < spec.iters_per_epoch; ++it) {
          csv.add_row(std::vector<double>{static_cast<double>(e), static_cast<double>(it),
                                          llab::schedules::lr_at(spec, e, it)});
        }
      }
      csv.write(out_dir / "lr_schedule.csv");
      std::cout << "wrote " << epochs * spec.iters_per_epoch << " schedule rows\n";
      return 0;
    }

    if (cmd_recipe->parsed()) {
      llab::harness::RecipeOptions opt;
      opt.seed = g.seed;
      opt.threads = g.threads;
      opt.out_dir = out_dir;
      opt.budget = recipe_budget;
      llab::harness::run_recipe(recipe_name, opt);
      std::cout << "recipe '" << recipe_name << "' artifacts under "
                << (out_dir / recipe_name).string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"type", typeid(e).name()}, {"message", e.what()}};
    std::cout << err.dump() << "\n";
    return 1;
  }
  return 0;
}
