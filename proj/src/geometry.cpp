#include "acorrect/geometry.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace acorrect {

double normalize_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(theta, two_pi);  // [-pi, pi]
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

RigidTransform2::RigidTransform2(double tx, double ty, double theta)
    : tx_(tx), ty_(ty), theta_(normalize_angle(theta)) {}

Eigen::Matrix3d RigidTransform2::to_matrix() const { return scaled_matrix(*this, 1.0); }

Eigen::Matrix3d scaled_matrix(const RigidTransform2& t, double scale) {
  const double c = std::cos(t.theta());
  const double s = std::sin(t.theta());
  Eigen::Matrix3d m;
  m << c, -s, t.tx() / scale,
       s, c, t.ty() / scale,
       0.0, 0.0, 1.0;
  return m;
}

RigidTransform2 compose(const RigidTransform2& a, const RigidTransform2& b) {
  const double c = std::cos(a.theta());
  const double s = std::sin(a.theta());
  return {c * b.tx() - s * b.ty() + a.tx(), s * b.tx() + c * b.ty() + a.ty(), a.theta() + b.theta()};
}

RigidTransform2 inverse(const RigidTransform2& t) {
  const double c = std::cos(t.theta());
  const double s = std::sin(t.theta());
  // -R^T t
  return {-(c * t.tx() + s * t.ty()), -(-s * t.tx() + c * t.ty()), -t.theta()};
}

RigidTransform2 rotation_about(const Point2& center, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {center.x - (c * center.x - s * center.y), center.y - (s * center.x + c * center.y), theta};
}

Point2 apply(const RigidTransform2& t, const Point2& p) {
  const double c = std::cos(t.theta());
  const double s = std::sin(t.theta());
  return {c * p.x - s * p.y + t.tx(), s * p.x + c * p.y + t.ty()};
}

double transform_distance_sq(const RigidTransform2& a, const RigidTransform2& b, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("transform_distance_sq: scale must be positive");
  return (scaled_matrix(a, scale) - scaled_matrix(b, scale)).squaredNorm();
}

std::ostream& operator<<(std::ostream& os, const RigidTransform2& t) {
  return os << "(" << t.tx() << ", " << t.ty() << ", " << t.theta() << ")";
}

void to_json(nlohmann::json& j, const RigidTransform2& t) {
  j = nlohmann::json{{"tx", t.tx()}, {"ty", t.ty()}, {"theta", t.theta()}};
}

void from_json(const nlohmann::json& j, RigidTransform2& t) {
  t = RigidTransform2(j.at("tx").get<double>(), j.at("ty").get<double>(), j.at("theta").get<double>());
}

void to_json(nlohmann::json& j, const Point2& p) { j = nlohmann::json::array({p.x, p.y}); }

void from_json(const nlohmann::json& j, Point2& p) { p = {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace acorrect
