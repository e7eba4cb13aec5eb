#pragma once

#include <Eigen/Core>

#include <iosfwd>

#include "json.hpp"

namespace acorrect {

/// A point in the image-centered frame: origin at the image center, +x right, +y down, in pixels.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double theta);

/**
 * @brief Rigid motion of the plane (SE(2)) acting in the image-centered frame.
 *
 * The transform maps p to R(theta) p + (tx, ty). Composition follows the matrix
 * product convention: compose(a, b) applies b first, then a.
 *
 * Homogeneous form
 * ----------------
 * [ cos -sin tx ]
 * [ sin  cos ty ]
 * [  0    0   1 ]
 */
class RigidTransform2 {
 public:
  RigidTransform2() = default;
  RigidTransform2(double tx, double ty, double theta);

  static RigidTransform2 identity() { return {}; }
  static RigidTransform2 translation(double tx, double ty) { return {tx, ty, 0.0}; }
  static RigidTransform2 rotation(double theta) { return {0.0, 0.0, theta}; }

  double tx() const { return tx_; }
  double ty() const { return ty_; }
  double theta() const { return theta_; }

  Eigen::Matrix3d to_matrix() const;

  friend bool operator==(const RigidTransform2&, const RigidTransform2&) = default;

 private:
  double tx_ = 0.0;
  double ty_ = 0.0;
  double theta_ = 0.0;
};

RigidTransform2 compose(const RigidTransform2& a, const RigidTransform2& b);
RigidTransform2 inverse(const RigidTransform2& t);

/// Rotation by theta about `center`, i.e. T(c) R(theta) T(-c). Fixes `center`.
RigidTransform2 rotation_about(const Point2& center, double theta);

Point2 apply(const RigidTransform2& t, const Point2& p);

/// Homogeneous matrix with the translation column divided by `scale`.
Eigen::Matrix3d scaled_matrix(const RigidTransform2& t, double scale);

/**
 * Squared Frobenius norm of the difference of the scaled homogeneous matrices of a and b.
 * Throws std::invalid_argument for scale <= 0.
 */
double transform_distance_sq(const RigidTransform2& a, const RigidTransform2& b, double scale);

std::ostream& operator<<(std::ostream& os, const RigidTransform2& t);

void to_json(nlohmann::json& j, const RigidTransform2& t);
void from_json(const nlohmann::json& j, RigidTransform2& t);
void to_json(nlohmann::json& j, const Point2& p);
void from_json(const nlohmann::json& j, Point2& p);

}  // namespace acorrect
