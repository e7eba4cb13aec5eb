#include "acorrect/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace acorrect {

namespace {

/// Value and gradient of || M(t) B - Q ||^2 with respect to the parameters of t.
std::pair<double, TransformGrad> product_residual(const RigidTransform2& t, const Eigen::Matrix3d& b,
                                                  const Eigen::Matrix3d& q, double scale) {
  const Eigen::Matrix3d d = scaled_matrix(t, scale) * b - q;
  const double c = std::cos(t.theta()), s = std::sin(t.theta());
  Eigen::Matrix3d d_rot;
  d_rot << -s, -c, 0.0,
           c, -s, 0.0,
           0.0, 0.0, 0.0;
  const Eigen::Matrix3d d_theta = d_rot * b;
  return {d.squaredNorm(), {2.0 * d(0, 2) / scale, 2.0 * d(1, 2) / scale, 2.0 * d.cwiseProduct(d_theta).sum()}};
}

void check_scale(double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("loss scale must be positive");
}

}  // namespace

double self_supervised_loss(const RigidTransform2& g, const RigidTransform2& t, double scale) {
  return transform_distance_sq(inverse(g), t, scale);
}

double consistency_loss(const RigidTransform2& t1, const RigidTransform2& g1, const RigidTransform2& t2,
                        const RigidTransform2& g2, double scale) {
  return transform_distance_sq(compose(t1, g1), compose(t2, g2), scale);
}

SelfSupervisedTerm self_supervised_term(const RigidTransform2& g, const RigidTransform2& t, double scale) {
  check_scale(scale);
  const auto [value, grad] = product_residual(t, Eigen::Matrix3d::Identity(), scaled_matrix(inverse(g), scale), scale);
  return {value, grad};
}

ConsistencyTerm consistency_term(const RigidTransform2& t1, const RigidTransform2& g1, const RigidTransform2& t2,
                                 const RigidTransform2& g2, double scale) {
  check_scale(scale);
  const Eigen::Matrix3d b1 = scaled_matrix(g1, scale), b2 = scaled_matrix(g2, scale);
  const Eigen::Matrix3d p1 = scaled_matrix(t1, scale) * b1, p2 = scaled_matrix(t2, scale) * b2;
  const auto [value, grad1] = product_residual(t1, b1, p2, scale);
  const auto grad2 = product_residual(t2, b2, p1, scale).second;
  return {value, grad1, grad2};
}

double gate_statistic(const RigidTransform2& t1, const RigidTransform2& g1, const RigidTransform2& t2,
                      const RigidTransform2& g2, const Mask& y) {
  const WarpProbe probe(y);
  const std::size_t lit = y.lit_count();
  return std::min(probe.iou_with(compose(t1, g1), y, lit), probe.iou_with(compose(t2, g2), y, lit));
}

Gate gate(const RigidTransform2& t1, const RigidTransform2& g1, const RigidTransform2& t2, const RigidTransform2& g2,
          const Mask& y, const GatingConfig& config) {
  return gate_statistic(t1, g1, t2, g2, y) < config.iou_threshold ? Gate{0, 1} : Gate{1, 0};
}

Gate sample_weights(const RigidTransform2& t1, const RigidTransform2& g1, const RigidTransform2& t2,
                    const RigidTransform2& g2, const Mask& y, const GatingConfig& config) {
  if (!config.consistency) return {1, 0};
  if (config.phase == TrainingPhase::warmup) return {1, 1};
  return gate(t1, g1, t2, g2, y, config);
}

ObjectiveResult joint_objective(std::span<const ObjectiveSample> batch, const GatingConfig& config, double scale,
                                const std::vector<Gate>* gates) {
  check_scale(scale);
  if (gates && gates->size() != batch.size()) throw std::invalid_argument("gate count does not match the batch");
  ObjectiveResult r;
  if (batch.empty()) return r;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ObjectiveSample& s = batch[i];
    Gate w{1, 1};
    if (gates) {
      w = (*gates)[i];
    } else if (!config.consistency) {
      w = {1, 0};
    } else if (config.phase == TrainingPhase::gated) {
      if (!s.y) throw std::invalid_argument("gated objective needs the label mask");
      w = gate(s.t1, s.g1, s.t2, s.g2, *s.y, config);
    }
    r.gates.push_back(w);
    TransformGrad d1{}, d2{};
    if (w.alpha_s) {
      const auto a = self_supervised_term(s.g1, s.t1, scale);
      const auto b = self_supervised_term(s.g2, s.t2, scale);
      r.self_supervised_part += 0.5 * (a.value + b.value) * inv_n;
      for (int k = 0; k < 3; ++k) {
        d1[k] += 0.5 * a.d_t[k] * inv_n;
        d2[k] += 0.5 * b.d_t[k] * inv_n;
      }
    }
    if (w.alpha_c) {
      const auto c = consistency_term(s.t1, s.g1, s.t2, s.g2, scale);
      r.consistency_part += c.value * inv_n;
      for (int k = 0; k < 3; ++k) {
        d1[k] += c.d_t1[k] * inv_n;
        d2[k] += c.d_t2[k] * inv_n;
      }
    }
    r.d_t1.push_back(d1);
    r.d_t2.push_back(d2);
  }
  r.value = r.self_supervised_part + r.consistency_part;
  return r;
}

}  // namespace acorrect
