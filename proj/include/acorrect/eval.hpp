#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "acorrect/dataset.hpp"
#include "acorrect/predictor.hpp"
#include "acorrect/scene.hpp"
#include "acorrect/training.hpp"

namespace acorrect {

/// Builds the predictor used for one scene (oracles need the scene's ground truth).
using PredictorFactory = std::function<std::unique_ptr<AlignmentPredictor>(const Scene&)>;

struct InstanceRecord {
  std::size_t index;
  RigidTransform2 perturbation;
  RigidTransform2 correction;
  double pre_iou;
  double post_iou;
};

struct SceneRecord {
  std::size_t scene;
  int repeat;
  std::vector<InstanceRecord> instances;
};

struct IouEvaluation {
  double mean_iou = 0.0;
  std::size_t instance_count = 0;
  std::vector<SceneRecord> records;
};

/**
 * For every scene and repeat, perturbs every instance's ground truth independently, corrects the
 * scene sequentially, and averages iou(corrected, ground truth) over all instances.
 * Throws DataError when a scene has no ground-truth annotations.
 */
IouEvaluation mean_iou_eval(const std::vector<Scene>& scenes, const PredictorFactory& factory, std::uint64_t seed,
                            int perturbations_per_scene = 3);

/// How instances are displaced for PCK evaluation.
struct PckPerturbation {
  /// When set, every instance is translated by exactly this many pixels in a random direction
  /// with no rotation; otherwise the standard random perturbation is used.
  std::optional<double> fixed_translation;
};

struct PckCurve {
  std::vector<double> thresholds;
  std::vector<double> fractions;
  std::size_t keypoints = 0;
  std::vector<SceneRecord> records;
};

/**
 * Keypoints are polygon vertices. A vertex v is correct at threshold d when the corrected vertex
 * apply(compose(t, g), v) lies within d of v, for perturbation g and predicted correction t.
 * Throws UsageError for datasets without polygon annotations and for unsorted thresholds.
 */
PckCurve pck_eval(const std::vector<Scene>& scenes, const PredictorFactory& factory, const std::vector<double>& thresholds,
                  std::uint64_t seed, const PckPerturbation& perturbation = {});

struct ExperimentReport {
  std::string name;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<SceneRecord> records;
  std::optional<double> mean_iou;
  std::optional<PckCurve> pck;
  /// Only filled when timing was requested; everything else is reproducible.
  std::optional<double> wall_clock_seconds;
  /// Process CPU time spent training the model behind this report, when timing was requested.
  std::optional<double> training_cpu_seconds;
};

nlohmann::json to_json(const ExperimentReport& report);
std::string summary_csv(const std::vector<ExperimentReport>& reports);

/// One model configuration of the ablation grid.
struct AblationCell {
  std::string name;
  bool memory = true;
  bool consistency = true;
  double noise = 0.0;
};

/// The seven desk-scale cells A-G.
std::vector<AblationCell> default_ablation_cells();

/// Track scenes with 2 or 3 instances 18-24px apart, the setting where the memory map matters.
DatasetSpec multi_instance_spec(std::size_t count, std::uint64_t seed);

struct AblationGrid {
  std::vector<AblationCell> cells = default_ablation_cells();
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  DatasetSpec train_data = multi_instance_spec(2000, 101);
  DatasetSpec test_data = multi_instance_spec(300, 202);
  TrainConfig training;
  int perturbations_per_scene = 3;
  /// Fill wall-clock and training CPU time into each report.
  bool record_timing = false;
};

void from_json(const nlohmann::json& j, AblationGrid& g);

/**
 * Trains and evaluates every (seed, cell) pair. For each seed, training and test scenes are
 * generated from the dataset specs with their seeds mixed with that seed; cell noise is applied to
 * the training labels. Reports come back seed-major in cell order.
 */
std::vector<ExperimentReport> ablation_suite(const AblationGrid& grid,
                                             const std::function<void(const std::string&)>& log = {});

/// Predictor factory for a trained network.
PredictorFactory net_factory(const AlignmentNet& net, bool use_memory);
PredictorFactory identity_factory();
PredictorFactory ground_truth_factory(OracleGrid grid = {});
PredictorFactory image_oracle_factory(OracleGrid grid = {});

}  // namespace acorrect
