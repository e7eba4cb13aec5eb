#include "acorrect/eval.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "acorrect/errors.hpp"
#include "acorrect/inductive.hpp"
#include "acorrect/network.hpp"
#include "acorrect/parallel.hpp"

namespace acorrect {

using nlohmann::json;

namespace {

std::uint64_t repeat_seed(std::uint64_t seed, std::size_t scene, int repeat) {
  return mix_seed(mix_seed(seed, scene), static_cast<std::uint64_t>(repeat) + 100);
}

void require_ground_truth(const Scene& s, std::size_t index) {
  if (s.annotations.empty()) throw DataError("scene " + std::to_string(index) + " has no annotations");
  for (const auto& a : s.annotations)
    if (a.gt_mask.empty() || a.gt_mask.lit_count() == 0)
      throw DataError("scene " + std::to_string(index) + " has an annotation without ground truth");
}

/// Corrects `perturbed` with a fresh session and fills per-instance records.
SceneRecord correct_scene(const Scene& scene, std::size_t index, int repeat, const std::vector<RigidTransform2>& g,
                          const std::vector<Mask>& perturbed, const PredictorFactory& factory) {
  const auto predictor = factory(scene);
  CorrectionSession session = start_session(scene.image, perturbed);
  const auto corrected = run_to_completion(session, *predictor);
  SceneRecord rec{index, repeat, {}};
  rec.instances.resize(perturbed.size());
  for (const auto& c : corrected) {
    const Mask& gt = scene.annotations[c.original_index].gt_mask;
    rec.instances[c.original_index] = {c.original_index, g[c.original_index], c.transform,
                                       iou(perturbed[c.original_index], gt), iou(c.corrected, gt)};
  }
  return rec;
}

}  // namespace

IouEvaluation mean_iou_eval(const std::vector<Scene>& scenes, const PredictorFactory& factory, std::uint64_t seed,
                            int perturbations_per_scene) {
  if (perturbations_per_scene < 1) throw UsageError("perturbations_per_scene must be positive");
  for (std::size_t s = 0; s < scenes.size(); ++s) require_ground_truth(scenes[s], s);
  const std::size_t reps = static_cast<std::size_t>(perturbations_per_scene);
  IouEvaluation out;
  out.records.resize(scenes.size() * reps);
  parallel_for(out.records.size(), [&](std::size_t k) {
    const std::size_t s = k / reps;
    const int r = static_cast<int>(k % reps);
    const Scene& scene = scenes[s];
    Rng rng(repeat_seed(seed, s, r));
    std::vector<RigidTransform2> g;
    std::vector<Mask> perturbed;
    for (const auto& a : scene.annotations) {
      g.push_back(sample_perturbation(rng, scene.meta.bounds, a.gt_mask.centroid()));
      perturbed.push_back(warp(a.gt_mask, g.back()));
    }
    out.records[k] = correct_scene(scene, s, r, g, perturbed, factory);
  });
  double sum = 0.0;
  for (const auto& rec : out.records)
    for (const auto& inst : rec.instances) {
      sum += inst.post_iou;
      ++out.instance_count;
    }
  out.mean_iou = out.instance_count ? sum / static_cast<double>(out.instance_count) : 0.0;
  return out;
}

PckCurve pck_eval(const std::vector<Scene>& scenes, const PredictorFactory& factory, const std::vector<double>& thresholds,
                  std::uint64_t seed, const PckPerturbation& perturbation) {
  if (thresholds.empty() || !std::is_sorted(thresholds.begin(), thresholds.end()) || thresholds.front() < 0.0)
    throw UsageError("PCK thresholds must be non-negative and sorted");
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    require_ground_truth(scenes[s], s);
    for (const auto& a : scenes[s].annotations)
      if (a.kind != ObjectKind::building)
        throw UsageError("PCK needs polygon keypoints; track annotations have none");
  }

  PckCurve curve;
  curve.thresholds = thresholds;
  curve.records.resize(scenes.size());
  parallel_for(scenes.size(), [&](std::size_t s) {
    const Scene& scene = scenes[s];
    Rng rng(repeat_seed(seed, s, 0));
    std::vector<RigidTransform2> g;
    std::vector<Mask> perturbed;
    for (const auto& a : scene.annotations) {
      if (perturbation.fixed_translation) {
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double m = *perturbation.fixed_translation;
        g.push_back(RigidTransform2::translation(m * std::cos(phi), m * std::sin(phi)));
      } else {
        g.push_back(sample_perturbation(rng, scene.meta.bounds, a.gt_mask.centroid()));
      }
      perturbed.push_back(warp(a.gt_mask, g.back()));
    }
    curve.records[s] = correct_scene(scene, s, 0, g, perturbed, factory);
  });

  std::vector<std::size_t> hits(thresholds.size(), 0);
  for (const auto& rec : curve.records)
    for (const auto& inst : rec.instances) {
      const RigidTransform2 total = compose(inst.correction, inst.perturbation);
      for (const auto& v : scenes[rec.scene].annotations[inst.index].geometry) {
        const Point2 moved = apply(total, v);
        const double dist = std::hypot(moved.x - v.x, moved.y - v.y);
        ++curve.keypoints;
        for (std::size_t k = 0; k < thresholds.size(); ++k) hits[k] += dist <= thresholds[k] + 1e-9;
      }
    }
  for (auto h : hits)
    curve.fractions.push_back(curve.keypoints ? static_cast<double>(h) / static_cast<double>(curve.keypoints) : 0.0);
  return curve;
}

json to_json(const ExperimentReport& r) {
  json records = json::array();
  for (const auto& rec : r.records) {
    json inst = json::array();
    for (const auto& i : rec.instances)
      inst.push_back({{"index", i.index},
                      {"perturbation", i.perturbation},
                      {"correction", i.correction},
                      {"pre_iou", i.pre_iou},
                      {"post_iou", i.post_iou}});
    records.push_back({{"scene", rec.scene}, {"repeat", rec.repeat}, {"instances", std::move(inst)}});
  }
  json aggregates = json::object();
  if (r.mean_iou) aggregates["mean_iou"] = *r.mean_iou;
  if (r.pck)
    aggregates["pck"] = {{"thresholds", r.pck->thresholds}, {"fractions", r.pck->fractions}, {"keypoints", r.pck->keypoints}};
  json j = {{"name", r.name}, {"seed", r.seed}, {"config", r.config}, {"aggregates", aggregates}, {"records", records}};
  if (r.wall_clock_seconds) j["wall_clock_seconds"] = *r.wall_clock_seconds;
  if (r.training_cpu_seconds) j["training_cpu_seconds"] = *r.training_cpu_seconds;
  return j;
}

std::string summary_csv(const std::vector<ExperimentReport>& reports) {
  std::ostringstream out;
  out << "name,seed,memory,consistency,noise,mean_iou,pck@5,pck@10,pck@15,pck@20\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  for (const auto& r : reports) {
    auto flag = [&](const char* key) -> std::string {
      return r.config.contains(key) && r.config[key].is_boolean() ? (r.config[key].get<bool>() ? "1" : "0") : "";
    };
    out << r.name << ',' << r.seed << ',' << flag("use_memory") << ',' << flag("use_consistency") << ',';
    if (r.config.contains("noise_ratio") && r.config["noise_ratio"].is_number()) out << num(r.config["noise_ratio"].get<double>());
    out << ',' << (r.mean_iou ? num(*r.mean_iou) : "");
    for (double d : {5.0, 10.0, 15.0, 20.0}) {
      out << ',';
      if (!r.pck) continue;
      const auto it = std::find(r.pck->thresholds.begin(), r.pck->thresholds.end(), d);
      if (it != r.pck->thresholds.end()) out << num(r.pck->fractions[static_cast<std::size_t>(it - r.pck->thresholds.begin())]);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<AblationCell> default_ablation_cells() {
  return {{"A", false, false, 0.0}, {"B", true, false, 0.0}, {"C", true, true, 0.0}, {"D", true, false, 0.2},
          {"E", true, true, 0.2},   {"F", true, false, 0.4}, {"G", true, true, 0.4}};
}

DatasetSpec multi_instance_spec(std::size_t count, std::uint64_t seed) {
  DatasetSpec s;
  s.kind = ObjectKind::track;
  s.count = count;
  s.seed = seed;
  s.min_instances = 2;
  s.max_instances = 3;
  s.min_spacing = 18.0;
  s.max_spacing = 24.0;
  return s;
}

void from_json(const json& j, AblationGrid& g) {
  if (j.contains("cells")) {
    g.cells.clear();
    for (const auto& c : j["cells"])
      g.cells.push_back({c.at("name").get<std::string>(), c.value("memory", true), c.value("consistency", true),
                         c.value("noise", 0.0)});
  }
  if (j.contains("seeds")) g.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("train_data")) g.train_data = j["train_data"].get<DatasetSpec>();
  if (j.contains("test_data")) g.test_data = j["test_data"].get<DatasetSpec>();
  if (j.contains("training")) g.training = j["training"].get<TrainConfig>();
  g.perturbations_per_scene = j.value("perturbations_per_scene", g.perturbations_per_scene);
}

std::vector<ExperimentReport> ablation_suite(const AblationGrid& grid, const std::function<void(const std::string&)>& log) {
  std::vector<ExperimentReport> reports;
  for (const auto seed : grid.seeds) {
    DatasetSpec train_spec = grid.train_data, test_spec = grid.test_data;
    train_spec.seed = mix_seed(grid.train_data.seed, seed);
    test_spec.seed = mix_seed(grid.test_data.seed, seed);
    train_spec.noise_ratio = 0.0;
    test_spec.noise_ratio = 0.0;
    const auto train_scenes = generate_dataset(train_spec);
    const auto test_scenes = generate_dataset(test_spec);
    for (const auto& cell : grid.cells) {
      if (!(cell.noise >= 0.0 && cell.noise <= 1.0)) throw UsageError("cell noise must be in [0, 1]");
      TrainConfig cfg = grid.training;
      cfg.seed = seed;
      cfg.use_memory = cell.memory;
      cfg.use_consistency = cell.consistency;
      cfg.noise_ratio = cell.noise;
      if (log) log("cell " + cell.name + " seed " + std::to_string(seed) + ": training");
      const auto wall_start = std::chrono::steady_clock::now();
      const std::clock_t cpu_start = std::clock();
      const TrainResult trained = train(train_scenes, cfg);
      const double cpu_seconds = static_cast<double>(std::clock() - cpu_start) / CLOCKS_PER_SEC;
      const IouEvaluation ev =
          mean_iou_eval(test_scenes, net_factory(trained.net, cell.memory), mix_seed(seed, 77), grid.perturbations_per_scene);
      ExperimentReport r;
      r.name = cell.name;
      r.seed = seed;
      r.config = cfg;
      r.config["train_data"] = train_spec;
      r.config["test_data"] = test_spec;
      r.records = ev.records;
      r.mean_iou = ev.mean_iou;
      if (grid.record_timing) {
        r.training_cpu_seconds = cpu_seconds;
        r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
      }
      if (log) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "cell %s seed %llu: mean IoU %.4f", cell.name.c_str(),
                      static_cast<unsigned long long>(seed), ev.mean_iou);
        log(buf);
      }
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

PredictorFactory net_factory(const AlignmentNet& net, bool use_memory) {
  return [&net, use_memory](const Scene&) { return std::make_unique<NetPredictor>(net, use_memory); };
}

PredictorFactory identity_factory() {
  return [](const Scene&) { return std::make_unique<IdentityPredictor>(); };
}

PredictorFactory ground_truth_factory(OracleGrid grid) {
  return [grid](const Scene& s) {
    std::vector<Mask> gt;
    for (const auto& a : s.annotations) gt.push_back(a.gt_mask);
    return std::make_unique<GroundTruthPredictor>(std::move(gt), grid);
  };
}

PredictorFactory image_oracle_factory(OracleGrid grid) {
  return [grid](const Scene& s) {
    std::vector<Rgb> appearance;
    for (const auto& a : s.annotations) appearance.push_back(a.appearance);
    return std::make_unique<ImageOraclePredictor>(std::move(appearance), grid);
  };
}

}  // namespace acorrect
