#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "acorrect/losses.hpp"
#include "acorrect/network.hpp"
#include "acorrect/scene.hpp"

namespace acorrect {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. State is kept in double precision.
class Adam {
 public:
  Adam(std::size_t parameter_count, AdamConfig config = {});

  /// One update of `params` against `grad`. Throws NumericError when `grad` has a non-finite
  /// entry; the parameters are left untouched in that case.
  void step(Eigen::VectorXf& params, const Eigen::VectorXd& grad);

  double lr() const { return config_.lr; }
  void set_lr(double lr) { config_.lr = lr; }
  long steps_taken() const { return t_; }

 private:
  AdamConfig config_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

/// Divides the learning rate by 10 (once) after the running mean of the objective over `window`
/// steps has gone `patience` consecutive steps without improving on its best value by the
/// relative `threshold`.
class PlateauScheduler {
 public:
  PlateauScheduler(int window = 50, int patience = 200, double threshold = 0.01)
      : window_(window), patience_(patience), threshold_(threshold) {}

  /// Feeds one objective value; returns true on the step the learning rate should drop.
  bool observe(double objective);
  bool fired() const { return fired_; }

 private:
  int window_, patience_;
  double threshold_;
  std::vector<double> recent_;
  double sum_ = 0.0;
  std::optional<double> best_;
  int stale_ = 0;
  bool fired_ = false;
};

/// Training configuration; JSON keys match the field names.
struct TrainConfig {
  int warmup_steps = 2000;
  double iou_threshold = 0.2;
  double lr = 1e-4;
  int batch_size = 8;
  std::uint64_t seed = 0;
  int max_steps = 3000;
  /// When set, training labels are re-derived from ground truth at this noise ratio.
  std::optional<double> noise_ratio;
  std::string dataset_path;
  bool use_memory = true;
  bool use_consistency = true;
  /// Memory of already-corrected instances built from their labels (true) or from the current
  /// network's own corrections (false).
  bool teacher_forcing = true;
  int plateau_window = 50;
  int plateau_patience = 200;
  double plateau_threshold = 0.01;
  NetArchitecture architecture = NetArchitecture::standard();
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, TrainConfig& c);

/// One row of the training curve.
struct CurveRow {
  int step;
  double objective;
  double self_supervised_share;
  double consistency_share;
  double lr;
  /// Fraction of batch samples routed to the consistency term by the gate.
  double gate_rate;
};

std::string curve_csv_header();
std::string curve_csv_row(const CurveRow& row);

struct TrainResult {
  AlignmentNet net;
  std::vector<CurveRow> curve;
  /// Step at which the plateau rule lowered the learning rate, if it did.
  std::optional<int> lr_drop_step;
};

/// One training example: a scene instance with its two perturbations and the shared memory.
struct TrainingExample {
  std::size_t scene;
  std::size_t instance;
  RigidTransform2 g1, g2;
  Mask label;
  Mask memory;
};

/**
 * Builds an example for instance `instance` of `scene`. Every other instance j receives a fresh
 * perturbation h_j; processing order follows the canonical order of the perturbed centroids
 * (instance `instance` at its label position). Instances before it contribute their labels to the
 * memory, instances after it contribute warp(label, h_j).
 */
TrainingExample make_training_example(const Scene& scene, std::size_t scene_index, std::size_t instance, Rng& rng);

/// As above, but the memory of earlier instances comes from running `net` over them in order.
TrainingExample make_free_running_example(const Scene& scene, std::size_t scene_index, std::size_t instance, Rng& rng,
                                          const AlignmentNet& net, bool use_memory);

/**
 * Trains a network from `scenes` with the joint objective. The result depends only on the config
 * and the scenes: per-sample gradients are summed in batch order whatever the thread count.
 * Throws NumericError on a non-finite objective or gradient, std::invalid_argument on bad config.
 */
TrainResult train(const std::vector<Scene>& scenes, const TrainConfig& config,
                  const std::function<void(const CurveRow&, const AlignmentNet&)>& progress = {});

}  // namespace acorrect
