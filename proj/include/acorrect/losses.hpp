#pragma once

#include <array>
#include <span>
#include <vector>

#include "acorrect/geometry.hpp"
#include "acorrect/raster.hpp"

namespace acorrect {

/// Derivative of a scalar objective with respect to (tx, ty, theta) of a transform.
using TransformGrad = std::array<double, 3>;

/// J_s = || g^-1 - t ||^2 on scaled homogeneous matrices.
double self_supervised_loss(const RigidTransform2& g, const RigidTransform2& t, double scale);

/// J_c = || t1 g1 - t2 g2 ||^2 on scaled homogeneous matrices.
double consistency_loss(const RigidTransform2& t1, const RigidTransform2& g1, const RigidTransform2& t2,
                        const RigidTransform2& g2, double scale);

struct SelfSupervisedTerm {
  double value;
  TransformGrad d_t;
};
SelfSupervisedTerm self_supervised_term(const RigidTransform2& g, const RigidTransform2& t, double scale);

struct ConsistencyTerm {
  double value;
  TransformGrad d_t1;
  TransformGrad d_t2;
};
ConsistencyTerm consistency_term(const RigidTransform2& t1, const RigidTransform2& g1, const RigidTransform2& t2,
                                 const RigidTransform2& g2, double scale);

enum class TrainingPhase { warmup, gated };

/// alpha_s, alpha_c and the gate. With consistency disabled alpha_c is 0 and alpha_s is 1 in
/// every phase.
struct GatingConfig {
  TrainingPhase phase = TrainingPhase::warmup;
  double iou_threshold = 0.2;
  int warmup_steps = 2000;
  bool consistency = true;
};

struct Gate {
  int alpha_s;
  int alpha_c;
  friend bool operator==(const Gate&, const Gate&) = default;
};

/// Minimum over both branches of iou(warp(y, t_k g_k), y).
double gate_statistic(const RigidTransform2& t1, const RigidTransform2& g1, const RigidTransform2& t2,
                      const RigidTransform2& g2, const Mask& y);

/// Consistency only (0, 1) when the gate statistic is strictly below the threshold, otherwise
/// self-supervision only (1, 0).
Gate gate(const RigidTransform2& t1, const RigidTransform2& g1, const RigidTransform2& t2, const RigidTransform2& g2,
          const Mask& y, const GatingConfig& config);

/// Weights for one sample under `config`: (1, 1) in warmup, the gate in the gated phase, and
/// (1, 0) whenever consistency is disabled.
Gate sample_weights(const RigidTransform2& t1, const RigidTransform2& g1, const RigidTransform2& t2,
                    const RigidTransform2& g2, const Mask& y, const GatingConfig& config);

/// One training pair: the label y, two perturbations and the predicted corrections for g_k y.
struct ObjectiveSample {
  RigidTransform2 g1, t1, g2, t2;
  const Mask* y = nullptr;
};

struct ObjectiveResult {
  double value = 0.0;
  double self_supervised_part = 0.0;
  double consistency_part = 0.0;
  std::vector<Gate> gates;
  /// d(value)/d(t1), d(value)/d(t2) per sample, including the 1/batch factor.
  std::vector<TransformGrad> d_t1, d_t2;
};

/**
 * Batch mean of alpha_s (J_s(g1, t1) + J_s(g2, t2)) / 2 + alpha_c J_c. When `gates` is given it
 * is used as-is (the gate is a constant within a step); otherwise weights come from
 * sample_weights().
 */
ObjectiveResult joint_objective(std::span<const ObjectiveSample> batch, const GatingConfig& config, double scale,
                                const std::vector<Gate>* gates = nullptr);

}  // namespace acorrect
