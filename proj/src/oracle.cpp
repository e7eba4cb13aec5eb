#include "acorrect/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <numbers>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace acorrect {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Candidate {
  int i, j, k;
  RigidTransform2 t;
  double score;
  double identity_distance;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.identity_distance != b.identity_distance) return a.identity_distance < b.identity_distance;
  return std::make_tuple(a.t.tx(), a.t.ty(), a.t.theta()) < std::make_tuple(b.t.tx(), b.t.ty(), b.t.theta());
}

}  // namespace

RigidTransform2 grid_transform(const Point2& center, double dx, double dy, double phi) {
  return compose(RigidTransform2::translation(dx, dy), rotation_about(center, phi));
}

GridParameters grid_parameters(const RigidTransform2& t, const Point2& center) {
  const Point2 moved = apply(t, center);
  return {moved.x - center.x, moved.y - center.y, t.theta()};
}

RigidTransform2 oracle_align(const AlignmentScore& score, const Mask& annotation, const OracleGrid& grid) {
  if (!(grid.translation_step > 0.0) || !(grid.rotation_step_deg > 0.0) || grid.translation_range < 0.0 ||
      grid.rotation_range_deg < 0.0 || grid.candidates < 1 || grid.coarse_translation_factor < 1 ||
      grid.coarse_rotation_factor < 1)
    throw std::invalid_argument("oracle_align: empty search grid");

  const Point2 center = annotation.centroid();
  const double scale = 0.5 * annotation.width();
  const int kt = static_cast<int>(std::floor(grid.translation_range / grid.translation_step + 1e-9));
  const int kr = static_cast<int>(std::floor(grid.rotation_range_deg / grid.rotation_step_deg + 1e-9));

  std::unordered_map<long long, Candidate> seen;
  auto evaluate = [&](int i, int j, int k) -> const Candidate& {
    const long long key = (static_cast<long long>(i + kt) * (2 * kt + 1) + (j + kt)) * (2 * kr + 1) + (k + kr);
    if (auto it = seen.find(key); it != seen.end()) return it->second;
    const RigidTransform2 t =
        grid_transform(center, i * grid.translation_step, j * grid.translation_step, k * grid.rotation_step_deg * kDegToRad);
    Candidate c{i, j, k, t, score(t), transform_distance_sq(t, RigidTransform2::identity(), scale)};
    return seen.emplace(key, c).first->second;
  };

  std::optional<Candidate> best;
  auto consider = [&](const Candidate& c) {
    if (!best || better(c, *best)) best = c;
  };

  if (!grid.coarse_to_fine) {
    for (int i = -kt; i <= kt; ++i)
      for (int j = -kt; j <= kt; ++j)
        for (int k = -kr; k <= kr; ++k) consider(evaluate(i, j, k));
    return best->t;
  }

  const int cf = grid.coarse_translation_factor, rf = grid.coarse_rotation_factor;
  std::vector<Candidate> coarse;
  for (int i = -(kt / cf) * cf; i <= kt; i += cf)
    for (int j = -(kt / cf) * cf; j <= kt; j += cf)
      for (int k = -(kr / rf) * rf; k <= kr; k += rf) coarse.push_back(evaluate(i, j, k));
  const auto keep = std::min<std::size_t>(coarse.size(), static_cast<std::size_t>(grid.candidates));
  std::partial_sort(coarse.begin(), coarse.begin() + static_cast<std::ptrdiff_t>(keep), coarse.end(), better);
  for (const auto& c : coarse) consider(c);
  for (std::size_t n = 0; n < keep; ++n) {
    const Candidate seed = coarse[n];
    for (int i = std::max(-kt, seed.i - cf + 1); i <= std::min(kt, seed.i + cf - 1); ++i)
      for (int j = std::max(-kt, seed.j - cf + 1); j <= std::min(kt, seed.j + cf - 1); ++j)
        for (int k = std::max(-kr, seed.k - rf + 1); k <= std::min(kr, seed.k + rf - 1); ++k) consider(evaluate(i, j, k));
  }
  // Hill-climb on the full-resolution grid until the best point is a local maximum.
  for (;;) {
    const Candidate at = *best;
    for (int i = std::max(-kt, at.i - 1); i <= std::min(kt, at.i + 1); ++i)
      for (int j = std::max(-kt, at.j - 1); j <= std::min(kt, at.j + 1); ++j)
        for (int k = std::max(-kr, at.k - 2); k <= std::min(kr, at.k + 2); ++k) consider(evaluate(i, j, k));
    if (best->i == at.i && best->j == at.j && best->k == at.k) break;
  }
  return best->t;
}

RigidTransform2 GroundTruthOracle::align(const Mask& gt, const Mask& noisy, const OracleGrid& grid) const {
  if (!gt.same_shape(noisy)) throw std::invalid_argument("GroundTruthOracle: dimension mismatch");
  const WarpProbe probe(noisy);
  const std::size_t gt_lit = gt.lit_count();
  return oracle_align([&](const RigidTransform2& t) { return probe.iou_with(t, gt, gt_lit); }, noisy, grid);
}

Mask ImageOracle::likelihood(const Image& image) const {
  Mask out(image.width(), image.height());
  const double inv = 1.0 / (2.0 * sigma_ * sigma_);
  for (int r = 0; r < image.height(); ++r)
    for (int c = 0; c < image.width(); ++c) {
      double d = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double e = image.at(k, c, r) - appearance_[k];
        d += e * e;
      }
      out.at(c, r) = static_cast<float>(std::exp(-d * inv));
    }
  return out;
}

RigidTransform2 ImageOracle::align(const Image& image, const Mask& annotation, const OracleGrid& grid) const {
  if (image.width() != annotation.width() || image.height() != annotation.height())
    throw std::invalid_argument("ImageOracle: dimension mismatch");
  const Mask like = likelihood(image);
  const double n_total = static_cast<double>(like.size());
  double sum = 0.0, sum_sq = 0.0;
  for (float v : like.data()) {
    sum += v;
    sum_sq += static_cast<double>(v) * v;
  }
  const double mean = sum / n_total;
  const double var = std::max(sum_sq / n_total - mean * mean, 1e-12);
  const WarpProbe probe(annotation);
  const auto ld = like.data();
  auto ncc = [&](const RigidTransform2& t) {
    thread_local std::vector<int> lit;
    probe.lit_pixels(t, lit);
    if (lit.empty()) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (int idx : lit) s += ld[static_cast<std::size_t>(idx)];
    const double frac = lit.size() / n_total;
    const double cov = s / n_total - frac * mean;
    const double var_w = frac - frac * frac;
    if (var_w <= 0.0) return -std::numeric_limits<double>::infinity();
    return cov / std::sqrt(var_w * var);
  };
  return oracle_align(ncc, annotation, grid);
}

}  // namespace acorrect
