#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acorrect/checkpoint.hpp"
#include "acorrect/dataset.hpp"
#include "acorrect/errors.hpp"
#include "acorrect/eval.hpp"
#include "acorrect/inductive.hpp"
#include "acorrect/overlay.hpp"
#include "acorrect/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace acorrect;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string kind = "tracks";
  std::size_t count = 10;
  double noise = 0.0;
  std::uint64_t seed = 0;
  int size = 128;
  int min_instances = 1;
  std::optional<int> max_instances;
  double min_spacing = 10.0;
  double max_spacing = 16.0;
  bool clutter = false;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  DatasetSpec spec;
  try {
    spec.kind = parse_object_kind(a.kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  spec.count = a.count;
  spec.noise_ratio = a.noise;
  spec.seed = a.seed;
  spec.width = spec.height = a.size;
  spec.min_instances = a.min_instances;
  spec.max_instances = a.max_instances.value_or(spec.kind == ObjectKind::track ? 4 : 6);
  spec.min_spacing = a.min_spacing;
  spec.max_spacing = a.max_spacing;
  spec.asymmetric_clutter = a.clutter;
  validate(spec);
  const auto scenes = generate_dataset(spec);
  write_dataset(a.out, spec, scenes);
  std::cerr << "wrote " << scenes.size() << " scenes to " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  std::string out;
  std::string curve;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<int> batch;
  std::optional<int> warmup;
  std::optional<double> lr;
  std::optional<double> noise;
  bool no_consistency = false;
  bool no_memory = false;
  bool no_teacher_forcing = false;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.config.empty()) {
    try {
      cfg = read_json_file(a.config).get<TrainConfig>();
    } catch (const json::exception& e) {
      throw UsageError("invalid training config: " + std::string(e.what()));
    }
  }
  if (!a.data.empty()) cfg.dataset_path = a.data;
  if (cfg.dataset_path.empty()) throw UsageError("no dataset given (--data or dataset_path in --config)");
  if (a.seed) cfg.seed = *a.seed;
  if (a.steps) cfg.max_steps = *a.steps;
  if (a.batch) cfg.batch_size = *a.batch;
  if (a.warmup) cfg.warmup_steps = *a.warmup;
  if (a.lr) cfg.lr = *a.lr;
  if (a.noise) cfg.noise_ratio = *a.noise;
  if (a.no_consistency) cfg.use_consistency = false;
  if (a.no_memory) cfg.use_memory = false;
  if (a.no_teacher_forcing) cfg.teacher_forcing = false;
  if (cfg.batch_size < 1 || cfg.max_steps < 0 || cfg.warmup_steps < 0 || !(cfg.lr > 0.0))
    throw UsageError("batch size, step counts and learning rate must be positive");
  if (cfg.noise_ratio && !(*cfg.noise_ratio >= 0.0 && *cfg.noise_ratio <= 1.0))
    throw UsageError("noise ratio must be in [0, 1]");

  const Dataset data = load_dataset(cfg.dataset_path);
  if (!data.scenes.empty()) {
    cfg.architecture.width = data.scenes.front().image.width();
    cfg.architecture.height = data.scenes.front().image.height();
  }
  const auto result = train(data.scenes, cfg, [](const CurveRow& row, const AlignmentNet&) {
    if (row.step % 50 == 0) std::fprintf(stderr, "step %d  J %.6f  lr %.1e\n", row.step, row.objective, row.lr);
  });

  save_checkpoint(a.out, {result.net, cfg, cfg.seed});
  fs::path curve_path = a.curve.empty() ? fs::path(a.out).replace_extension(".csv") : fs::path(a.curve);
  std::string csv = curve_csv_header() + "\n";
  for (const auto& row : result.curve) csv += curve_csv_row(row) + "\n";
  write_text(curve_path, csv);
  std::cerr << "wrote " << a.out << " and " << curve_path.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------------------------
// predictors shared by correct and eval

struct PredictorArgs {
  std::string predictor = "net";
  std::string checkpoint;
  bool no_memory = false;
};

struct LoadedPredictor {
  std::unique_ptr<Checkpoint> checkpoint;
  PredictorFactory factory;
  json echo;
};

LoadedPredictor load_predictor(const PredictorArgs& a, const Dataset& data) {
  LoadedPredictor p;
  p.echo = {{"predictor", a.predictor}};
  if (a.predictor == "identity") {
    p.factory = identity_factory();
  } else if (a.predictor == "gt-oracle") {
    p.factory = ground_truth_factory();
  } else if (a.predictor == "image-oracle") {
    p.factory = image_oracle_factory();
  } else if (a.predictor == "net") {
    if (a.checkpoint.empty()) throw UsageError("--predictor net needs --checkpoint");
    p.checkpoint = std::make_unique<Checkpoint>(load_checkpoint(a.checkpoint));
    const auto& arch = p.checkpoint->net.architecture();
    for (const auto& s : data.scenes)
      if (s.image.width() != arch.width || s.image.height() != arch.height)
        throw DataError("checkpoint architecture does not match the dataset image size");
    const bool memory = !a.no_memory && p.checkpoint->training_config.value("use_memory", true);
    p.factory = net_factory(p.checkpoint->net, memory);
    p.echo["use_memory"] = memory;
    p.echo["checkpoint_seed"] = p.checkpoint->seed;
    p.echo["training_config"] = p.checkpoint->training_config;
  } else {
    throw UsageError("unknown predictor " + a.predictor);
  }
  return p;
}

// ---------------------------------------------------------------------------------------------
// correct

struct CorrectArgs {
  std::string data;
  std::string out;
  PredictorArgs predictor;
  bool per_step = false;
  bool masks = false;
};

int cmd_correct(const CorrectArgs& a) {
  const Dataset data = load_dataset(a.data);
  const LoadedPredictor loaded = load_predictor(a.predictor, data);
  ensure_dir(a.out);
  for (std::size_t s = 0; s < data.scenes.size(); ++s) {
    const Scene& scene = data.scenes[s];
    std::vector<Mask> noisy, gt;
    for (const auto& ann : scene.annotations) {
      noisy.push_back(ann.noisy_mask);
      gt.push_back(ann.gt_mask);
    }
    const auto predictor = loaded.factory(scene);
    CorrectionSession session = start_session(scene.image, noisy);
    const fs::path dir = fs::path(a.out) / scene_dir_name(s);
    ensure_dir(dir);

    auto write_step_overlay = [&](std::size_t k) {
      std::vector<Mask> done, pending;
      for (std::size_t p = 0; p < session.size(); ++p) {
        if (p < k)
          done.push_back(warp(session.annotations()[p], session.corrections()[p]));
        else
          pending.push_back(session.annotations()[p]);
      }
      write_png(dir / ("overlay_step_" + std::to_string(k) + ".png"), render_overlay(scene.image, gt, pending, done));
    };
    if (a.per_step) write_step_overlay(0);
    while (!session.finished()) {
      step(session, *predictor);
      if (a.per_step) write_step_overlay(session.step_index() - 1);
    }

    json list = json::array();
    std::vector<Mask> corrected;
    for (std::size_t p = 0; p < session.size(); ++p) {
      const std::size_t idx = session.original_indices()[p];
      const Mask fixed = warp(session.annotations()[p], session.corrections()[p]);
      list.push_back({{"original_index", idx},
                      {"transform", session.corrections()[p]},
                      {"pre_iou", iou(noisy[idx], gt[idx])},
                      {"post_iou", iou(fixed, gt[idx])}});
      if (a.masks) write_png(dir / ("corrected_" + std::to_string(idx) + ".png"), fixed);
      corrected.push_back(fixed);
    }
    write_text(dir / "corrections.json", json{{"scene", s}, {"corrections", list}}.dump(2) + "\n");
    write_png(dir / "overlay.png", render_overlay(scene.image, gt, noisy, corrected));
  }
  std::cerr << "corrected " << data.scenes.size() << " scenes into " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string data;
  std::string out;
  PredictorArgs predictor;
  std::string metric = "iou";
  std::uint64_t seed = 0;
  int perturbations = 3;
  std::vector<double> thresholds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15, 20, 25, 30};
  std::optional<double> fixed_translation;
  std::string ablation;
  bool record_timing = false;
};

int cmd_eval(const EvalArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  ensure_dir(a.out);

  if (!a.ablation.empty()) {
    AblationGrid grid;
    try {
      grid = read_json_file(a.ablation).get<AblationGrid>();
    } catch (const json::exception& e) {
      throw UsageError("invalid ablation grid: " + std::string(e.what()));
    }
    grid.record_timing = a.record_timing;
    const auto reports = ablation_suite(grid, [](const std::string& msg) { std::cerr << msg << "\n"; });
    for (const auto& r : reports) {
      write_text(fs::path(a.out) / ("report_" + r.name + "_seed" + std::to_string(r.seed) + ".json"), to_json(r).dump(2) + "\n");
    }
    write_text(fs::path(a.out) / "summary.csv", summary_csv(reports));
    return kOk;
  }

  if (a.metric != "iou" && a.metric != "pck") throw UsageError("--metric must be iou or pck");
  if (a.data.empty()) throw UsageError("--data is required");
  const Dataset data = load_dataset(a.data);
  if (a.metric == "pck")
    for (const auto& s : data.scenes)
      for (const auto& ann : s.annotations)
        if (ann.kind != ObjectKind::building) throw UsageError("--metric pck needs a buildings dataset");
  const LoadedPredictor loaded = load_predictor(a.predictor, data);

  ExperimentReport report;
  report.name = a.predictor.predictor;
  report.seed = a.seed;
  report.config = loaded.echo;
  report.config["metric"] = a.metric;
  report.config["dataset_manifest"] = data.manifest;
  if (a.metric == "iou") {
    report.config["perturbations_per_scene"] = a.perturbations;
    const auto ev = mean_iou_eval(data.scenes, loaded.factory, a.seed, a.perturbations);
    report.mean_iou = ev.mean_iou;
    report.records = ev.records;
  } else {
    PckPerturbation pert;
    pert.fixed_translation = a.fixed_translation;
    if (a.fixed_translation) report.config["fixed_translation"] = *a.fixed_translation;
    auto curve = pck_eval(data.scenes, loaded.factory, a.thresholds, a.seed, pert);
    report.records = curve.records;
    curve.records.clear();
    report.pck = std::move(curve);
  }
  if (a.record_timing) report.wall_clock_seconds = elapsed();
  write_text(fs::path(a.out) / "report.json", to_json(report).dump(2) + "\n");
  write_text(fs::path(a.out) / "summary.csv", summary_csv({report}));
  if (report.mean_iou) std::fprintf(stderr, "mean IoU %.4f\n", *report.mean_iou);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned correction of misregistered object annotations"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic scene dataset");
  gen_cmd->add_option("--kind", gen.kind, "tracks or buildings")->check(CLI::IsMember({"tracks", "track", "buildings", "building"}));
  gen_cmd->add_option("--count", gen.count, "Number of scenes");
  gen_cmd->add_option("--noise", gen.noise, "Fraction of perturbed instances")->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--size", gen.size, "Scene width and height in pixels");
  gen_cmd->add_option("--min-instances", gen.min_instances);
  gen_cmd->add_option("--max-instances", gen.max_instances, "Default 4 for tracks, 6 for buildings");
  gen_cmd->add_option("--min-spacing", gen.min_spacing, "Track spacing range, pixels");
  gen_cmd->add_option("--max-spacing", gen.max_spacing);
  gen_cmd->add_flag("--clutter", gen.clutter, "Asymmetric clutter beside tracks");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the alignment network");
  train_cmd->add_option("--data", tr.data, "Dataset directory");
  train_cmd->add_option("--out", tr.out, "Checkpoint path (.acpt)")->required();
  train_cmd->add_option("--curve", tr.curve, "Training curve CSV (default: checkpoint path with .csv)");
  train_cmd->add_option("--config", tr.config, "Training config JSON");
  train_cmd->add_option("--seed", tr.seed);
  train_cmd->add_option("--steps", tr.steps);
  train_cmd->add_option("--batch", tr.batch);
  train_cmd->add_option("--warmup", tr.warmup);
  train_cmd->add_option("--lr", tr.lr);
  train_cmd->add_option("--noise", tr.noise, "Re-derive training labels at this noise ratio")->check(CLI::Range(0.0, 1.0));
  train_cmd->add_flag("--no-consistency", tr.no_consistency);
  train_cmd->add_flag("--no-memory", tr.no_memory);
  train_cmd->add_flag("--no-teacher-forcing", tr.no_teacher_forcing);

  auto add_predictor = [](CLI::App* cmd, PredictorArgs& p) {
    cmd->add_option("--predictor", p.predictor)->check(CLI::IsMember({"net", "gt-oracle", "image-oracle", "identity"}));
    cmd->add_option("--checkpoint", p.checkpoint);
    cmd->add_flag("--no-memory", p.no_memory, "Feed zeros to the memory channel");
  };

  CorrectArgs co;
  auto* correct_cmd = app.add_subcommand("correct", "Correct a dataset's noisy annotations");
  correct_cmd->add_option("--data", co.data)->required();
  correct_cmd->add_option("--out", co.out)->required();
  add_predictor(correct_cmd, co.predictor);
  correct_cmd->add_flag("--per-step", co.per_step, "One overlay per induction step");
  correct_cmd->add_flag("--masks", co.masks, "Write corrected masks");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a predictor");
  eval_cmd->add_option("--data", ev.data);
  eval_cmd->add_option("--out", ev.out)->required();
  add_predictor(eval_cmd, ev.predictor);
  eval_cmd->add_option("--metric", ev.metric);
  eval_cmd->add_option("--seed", ev.seed);
  eval_cmd->add_option("--perturbations", ev.perturbations);
  eval_cmd->add_option("--thresholds", ev.thresholds)->delimiter(',');
  eval_cmd->add_option("--fixed-translation", ev.fixed_translation, "PCK: translate every instance by exactly this much");
  eval_cmd->add_option("--ablation", ev.ablation, "Ablation grid JSON");
  eval_cmd->add_flag("--record-timing", ev.record_timing, "Add wall-clock time to reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*train_cmd) return cmd_train(tr);
    if (*correct_cmd) return cmd_correct(co);
    if (*eval_cmd) return cmd_eval(ev);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
