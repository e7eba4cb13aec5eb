#include "acorrect/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "acorrect/inductive.hpp"

namespace acorrect {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr int kMaxPlacementAttempts = 500;

std::vector<float> value_noise(Rng& rng, int w, int h, int cell) {
  const int gw = w / cell + 2, gh = h / cell + 2;
  std::vector<float> grid(static_cast<std::size_t>(gw) * gh);
  for (auto& v : grid) v = static_cast<float>(rng.uniform());
  std::vector<float> out(static_cast<std::size_t>(w) * h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double fx = static_cast<double>(c) / cell, fy = static_cast<double>(r) / cell;
      const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
      double ux = fx - ix, uy = fy - iy;
      ux = ux * ux * (3.0 - 2.0 * ux);
      uy = uy * uy * (3.0 - 2.0 * uy);
      auto g = [&](int x, int y) { return grid[static_cast<std::size_t>(y) * gw + x]; };
      const double top = g(ix, iy) * (1 - ux) + g(ix + 1, iy) * ux;
      const double bottom = g(ix, iy + 1) * (1 - ux) + g(ix + 1, iy + 1) * ux;
      out[static_cast<std::size_t>(r) * w + c] = static_cast<float>(top * (1 - uy) + bottom * uy);
    }
  return out;
}

/// Textured ground: two octaves of value noise mixing vegetation and soil, a low-frequency
/// gradient, and per-pixel grain.
Image render_background(Rng& rng, int w, int h) {
  const auto coarse = value_noise(rng, w, h, 16);
  const auto fine = value_noise(rng, w, h, 6);
  const Rgb green{static_cast<float>(rng.uniform(0.30, 0.40)), static_cast<float>(rng.uniform(0.45, 0.55)),
                  static_cast<float>(rng.uniform(0.25, 0.32))};
  const Rgb soil{static_cast<float>(rng.uniform(0.55, 0.65)), static_cast<float>(rng.uniform(0.48, 0.56)),
                 static_cast<float>(rng.uniform(0.36, 0.44))};
  const double grad_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double grad_strength = rng.uniform(0.0, 0.12);
  Image img(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const double mixv = std::clamp(0.7 * coarse[i] + 0.3 * fine[i], 0.0, 1.0);
      const Point2 p = pixel_center(c, r, w, h);
      const double grad = grad_strength * (p.x * std::cos(grad_angle) + p.y * std::sin(grad_angle)) / w;
      const double grain = rng.uniform(-0.03, 0.03);
      Rgb px;
      for (int k = 0; k < 3; ++k)
        px[k] = static_cast<float>(std::clamp(green[k] * (1 - mixv) + soil[k] * mixv + grad + grain, 0.0, 1.0));
      img.set(c, r, px);
    }
  return img;
}

void quantize(Image& img) {
  for (auto& v : img.data()) v = static_cast<float>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)) / 255.0f;
}

Rgb quantized(const Rgb& c) {
  Rgb out;
  for (int k = 0; k < 3; ++k) out[k] = static_cast<float>(std::lround(std::clamp(c[k], 0.0f, 1.0f) * 255.0f)) / 255.0f;
  return out;
}

double segment_distance_sq(const Point2& p, const Point2& a, const Point2& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len_sq = dx * dx + dy * dy;
  const double u = len_sq > 0 ? std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len_sq, 0.0, 1.0) : 0.0;
  const double ex = a.x + u * dx - p.x, ey = a.y + u * dy - p.y;
  return ex * ex + ey * ey;
}

void paint_segment(Image& img, const Point2& a, const Point2& b, double width, const Rgb& color) {
  const double r_sq = 0.25 * width * width;
  for (int row = 0; row < img.height(); ++row)
    for (int col = 0; col < img.width(); ++col)
      if (segment_distance_sq(pixel_center(col, row, img.width(), img.height()), a, b) <= r_sq)
        img.set(col, row, color);
}

void paint_disc(Image& img, const Point2& center, double radius, const Rgb& color) {
  for (int row = 0; row < img.height(); ++row)
    for (int col = 0; col < img.width(); ++col) {
      const Point2 p = pixel_center(col, row, img.width(), img.height());
      if ((p.x - center.x) * (p.x - center.x) + (p.y - center.y) * (p.y - center.y) <= radius * radius)
        img.set(col, row, color);
    }
}

bool respects_margin(const Mask& m, int margin) {
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      if (m.at(c, r) >= kLitThreshold &&
          (c < margin || r < margin || c > m.width() - 1 - margin || r > m.height() - 1 - margin))
        return false;
  return true;
}

/// True when a lit pixel of `m` lies within `gap` pixels (Chebyshev) of a lit pixel of `other`.
bool touches(const Mask& m, const Mask& other, int gap) {
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c) {
      if (m.at(c, r) < kLitThreshold) continue;
      for (int dr = -gap; dr <= gap; ++dr)
        for (int dc = -gap; dc <= gap; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && cc >= 0 && rr < m.height() && cc < m.width() && other.at(cc, rr) >= kLitThreshold) return true;
        }
    }
  return false;
}

void validate(const SceneParams& p) {
  if (p.width <= 0 || p.height <= 0) throw std::invalid_argument("scene dimensions must be positive");
  if (!(p.noise_ratio >= 0.0 && p.noise_ratio <= 1.0)) throw std::invalid_argument("noise_ratio must be in [0, 1]");
  if (p.margin < 26) throw std::invalid_argument("margin must be at least 26px");
  if (!(p.annotation_thickness >= 1.0)) throw std::invalid_argument("annotation thickness must be >= 1");
  if (p.bounds.max_translation < 0 || p.bounds.max_rotation_deg < 0)
    throw std::invalid_argument("perturbation bounds must be non-negative");
}

/// Draws one uniform and one perturbation per instance so that the noisy subsets at increasing
/// noise ratios are nested and share their perturbations.
void assign_label_noise(Scene& scene, double noise_ratio, Rng& rng) {
  for (auto& a : scene.annotations) {
    const double u = rng.uniform();
    const RigidTransform2 g = sample_perturbation(rng, scene.meta.bounds, a.gt_mask.centroid());
    a.is_noisy = u < noise_ratio;
    set_perturbation(a, a.is_noisy ? g : RigidTransform2::identity());
  }
}

void sort_canonical(Scene& scene) {
  std::vector<Point2> centroids;
  for (const auto& a : scene.annotations) centroids.push_back(a.gt_mask.centroid());
  const auto order = canonical_order(centroids);
  std::vector<ObjectAnnotation> sorted;
  sorted.reserve(order.size());
  for (auto i : order) sorted.push_back(std::move(scene.annotations[i]));
  scene.annotations = std::move(sorted);
}

}  // namespace

std::string to_string(ObjectKind kind) { return kind == ObjectKind::track ? "track" : "building"; }

ObjectKind parse_object_kind(const std::string& s) {
  if (s == "track" || s == "tracks") return ObjectKind::track;
  if (s == "building" || s == "buildings") return ObjectKind::building;
  throw std::invalid_argument("unknown object kind: " + s);
}

RigidTransform2 sample_perturbation(Rng& rng, double max_translation, double max_rotation_deg, const Point2& center) {
  const double tx = rng.uniform(-max_translation, max_translation);
  const double ty = rng.uniform(-max_translation, max_translation);
  const double theta = rng.uniform(-max_rotation_deg, max_rotation_deg) * kDegToRad;
  return compose(RigidTransform2::translation(tx, ty), rotation_about(center, theta));
}

RigidTransform2 sample_perturbation(Rng& rng, const PerturbationBounds& bounds, const Point2& center) {
  return sample_perturbation(rng, bounds.max_translation, bounds.max_rotation_deg, center);
}

PerturbationParameters perturbation_parameters(const RigidTransform2& g, const Point2& center) {
  const Point2 moved = apply(g, center);
  return {moved.x - center.x, moved.y - center.y, g.theta()};
}

Mask render_annotation(const std::vector<Point2>& geometry, ObjectKind kind, const SceneParams& params) {
  if (kind == ObjectKind::track)
    return rasterize_polyline(geometry, params.annotation_thickness, params.width, params.height);
  return rasterize_polygon(geometry, params.width, params.height);
}

void set_perturbation(ObjectAnnotation& annotation, const RigidTransform2& g) {
  annotation.gt_perturbation = g;
  annotation.noisy_mask = g == RigidTransform2::identity() ? annotation.gt_mask : warp(annotation.gt_mask, g);
}

void resample_label_noise(Scene& scene, double noise_ratio, std::uint64_t seed) {
  if (!(noise_ratio >= 0.0 && noise_ratio <= 1.0)) throw std::invalid_argument("noise_ratio must be in [0, 1]");
  Rng rng(seed);
  assign_label_noise(scene, noise_ratio, rng);
  scene.meta.noise_ratio = noise_ratio;
}

Scene generate_track_scene(std::uint64_t seed, const SceneParams& params) {
  validate(params);
  if (params.count < 1 || params.count > 4) throw std::invalid_argument("n_tracks must be in 1..=4");
  if (!(params.spacing >= 8.0)) throw std::invalid_argument("track spacing must be at least 8px");

  Scene scene;
  scene.seed = seed;
  scene.meta = params;
  scene.meta.kind = ObjectKind::track;
  const int w = params.width, h = params.height;

  Rng rng(mix_seed(seed, 1));
  scene.image = render_background(rng, w, h);
  const float shade = static_cast<float>(rng.uniform(0.10, 0.22));
  const Rgb track_color{shade, shade * 0.95f, shade * 0.9f};

  const int n = params.count;
  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxPlacementAttempts) throw std::invalid_argument("could not place tracks within the margin");
    const double tilt = rng.uniform(-params.max_tilt_deg, params.max_tilt_deg) * kDegToRad;
    const Point2 dir{std::sin(tilt), std::cos(tilt)};
    const Point2 normal{std::cos(tilt), -std::sin(tilt)};
    const double length = rng.uniform(40.0, 60.0);
    const double half_free_x = 0.5 * w - params.margin, half_free_y = 0.5 * h - params.margin;
    const Point2 center{rng.uniform(-half_free_x, half_free_x) * 0.5, rng.uniform(-half_free_y, half_free_y) * 0.5};
    std::vector<double> offsets(n);
    for (int k = 1; k < n; ++k) offsets[k] = offsets[k - 1] + params.spacing * rng.uniform(0.9, 1.15);
    const double mid = 0.5 * offsets.back();

    std::vector<ObjectAnnotation> annotations;
    bool ok = true;
    for (int k = 0; k < n && ok; ++k) {
      const double off = offsets[k] - mid;
      const double lo = -0.5 * length + rng.uniform(-4.0, 4.0), hi = 0.5 * length + rng.uniform(-4.0, 4.0);
      const double local_tilt = rng.uniform(-1.5, 1.5) * kDegToRad;
      const Point2 base{center.x + normal.x * off, center.y + normal.y * off};
      const Point2 d{dir.x * std::cos(local_tilt) - dir.y * std::sin(local_tilt),
                     dir.x * std::sin(local_tilt) + dir.y * std::cos(local_tilt)};
      ObjectAnnotation a;
      a.kind = ObjectKind::track;
      a.geometry = {{base.x + d.x * lo, base.y + d.y * lo}, {base.x + d.x * hi, base.y + d.y * hi}};
      a.gt_mask = render_annotation(a.geometry, ObjectKind::track, params);
      a.appearance = track_color;
      ok = respects_margin(a.gt_mask, params.margin);
      annotations.push_back(std::move(a));
    }
    if (!ok) continue;
    scene.annotations = std::move(annotations);
    break;
  }

  for (const auto& a : scene.annotations) {
    if (params.asymmetric_clutter) {
      const Point2 p0 = a.geometry.front(), p1 = a.geometry.back();
      const double len = std::hypot(p1.x - p0.x, p1.y - p0.y);
      const Point2 nrm{(p1.y - p0.y) / len, -(p1.x - p0.x) / len};
      const int blobs = rng.uniform_int(2, 5);
      for (int b = 0; b < blobs; ++b) {
        const double u = rng.uniform(0.1, 0.9);
        const double side = 0.5 * params.track_width + rng.uniform(3.0, 6.0);
        const Point2 c{p0.x + (p1.x - p0.x) * u + nrm.x * side, p0.y + (p1.y - p0.y) * u + nrm.y * side};
        const float g = static_cast<float>(rng.uniform(0.15, 0.3));
        paint_disc(scene.image, c, rng.uniform(1.5, 3.0), Rgb{g * 0.6f, g * 1.3f, g * 0.5f});
      }
    }
  }
  for (const auto& a : scene.annotations) paint_segment(scene.image, a.geometry[0], a.geometry[1], params.track_width, a.appearance);
  quantize(scene.image);
  for (auto& a : scene.annotations) a.appearance = quantized(track_color);

  sort_canonical(scene);
  Rng noise_rng(mix_seed(seed, 2));
  assign_label_noise(scene, params.noise_ratio, noise_rng);
  return scene;
}

Scene generate_building_scene(std::uint64_t seed, const SceneParams& params) {
  validate(params);
  if (params.count < 1 || params.count > 6) throw std::invalid_argument("n_buildings must be in 1..=6");

  Scene scene;
  scene.seed = seed;
  scene.meta = params;
  scene.meta.kind = ObjectKind::building;
  const int w = params.width, h = params.height;

  Rng rng(mix_seed(seed, 1));
  scene.image = render_background(rng, w, h);

  // Distinct roof intensities.
  std::vector<float> levels = {0.08f, 0.22f, 0.78f, 0.9f, 0.15f, 0.85f};
  for (std::size_t i = levels.size() - 1; i > 0; --i)
    std::swap(levels[i], levels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)))]);

  // Footprints shrink as the count grows so six fit inside the margin; overlap is tested on the
  // rasters with a 2px gap, restarting the whole layout when one footprint cannot be placed.
  const double max_side = params.count <= 3 ? 22.0 : 16.0;
  const double lim_x = 0.5 * w - params.margin, lim_y = 0.5 * h - params.margin;
  for (int layout = 0;; ++layout) {
    if (layout == kMaxPlacementAttempts) throw std::invalid_argument("could not place buildings without overlap");
    scene.annotations.clear();
    Mask occupied(w, h);
    bool ok = true;
    for (int k = 0; k < params.count && ok; ++k) {
      ok = false;
      for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        const double a = rng.uniform(8.0, max_side), b = rng.uniform(8.0, max_side);
        const double angle = rng.uniform(0.0, std::numbers::pi);
        const Point2 c{rng.uniform(-lim_x, lim_x), rng.uniform(-lim_y, lim_y)};
        const Point2 local[4] = {{-a / 2, -b / 2}, {a / 2, -b / 2}, {a / 2, b / 2}, {-a / 2, b / 2}};
        std::vector<Point2> poly;
        for (const auto& q : local) {
          const double x = q.x + rng.uniform(-1.5, 1.5), y = q.y + rng.uniform(-1.5, 1.5);
          poly.push_back({c.x + x * std::cos(angle) - y * std::sin(angle), c.y + x * std::sin(angle) + y * std::cos(angle)});
        }
        Mask footprint = render_annotation(poly, ObjectKind::building, params);
        if (!respects_margin(footprint, params.margin) || touches(footprint, occupied, 2)) continue;
        ObjectAnnotation ann;
        ann.kind = ObjectKind::building;
        ann.geometry = std::move(poly);
        ann.gt_mask = std::move(footprint);
        const float lvl = levels[static_cast<std::size_t>(k)];
        ann.appearance = quantized(Rgb{lvl, lvl * 0.92f, lvl * 0.85f});
        occupied += ann.gt_mask;
        scene.annotations.push_back(std::move(ann));
        ok = true;
      }
    }
    if (ok) break;
  }
  for (const auto& a : scene.annotations)
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        if (a.gt_mask.at(c, r) >= kLitThreshold) scene.image.set(c, r, a.appearance);
  quantize(scene.image);

  sort_canonical(scene);
  Rng noise_rng(mix_seed(seed, 2));
  assign_label_noise(scene, params.noise_ratio, noise_rng);
  return scene;
}

Scene generate_scene(std::uint64_t seed, const SceneParams& params) {
  return params.kind == ObjectKind::track ? generate_track_scene(seed, params) : generate_building_scene(seed, params);
}

RigidTransform2 scene_symmetry() { return RigidTransform2::rotation(std::numbers::pi); }

Scene make_symmetric_track_scene(std::uint64_t seed, SymmetryAxis axis) {
  SceneParams params;
  params.kind = ObjectKind::track;
  params.count = 1;
  params.noise_ratio = 1.0;
  const int w = params.width, h = params.height;

  Scene scene;
  scene.seed = seed;
  scene.meta = params;
  Rng rng(mix_seed(seed, 1));
  scene.image = render_background(rng, w, h);
  const float shade = static_cast<float>(rng.uniform(0.10, 0.22));
  const Rgb track_color{shade, shade * 0.95f, shade * 0.9f};
  const double half = 0.5 * rng.uniform(40.0, 60.0);

  ObjectAnnotation a;
  a.kind = ObjectKind::track;
  a.appearance = quantized(track_color);
  if (axis == SymmetryAxis::vertical)
    a.geometry = {{0.0, -half}, {0.0, half}};
  else
    a.geometry = {{-half, 0.0}, {half, 0.0}};
  paint_segment(scene.image, a.geometry[0], a.geometry[1], params.track_width, track_color);
  quantize(scene.image);

  // Point reflection through the center maps pixel (c, r) to (w-1-c, h-1-r); copy one half onto
  // the other so the image is exactly invariant.
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const int mc = w - 1 - c, mr = h - 1 - r;
      if (r * w + c < mr * w + mc) scene.image.set(mc, mr, scene.image.get(c, r));
    }
  a.gt_mask = render_annotation(a.geometry, ObjectKind::track, params);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (a.gt_mask.at(c, r) >= kLitThreshold) a.gt_mask.at(w - 1 - c, h - 1 - r) = 1.0f;

  Rng noise_rng(mix_seed(seed, 2));
  a.is_noisy = true;
  set_perturbation(a, sample_perturbation(noise_rng, params.bounds, a.gt_mask.centroid()));
  scene.annotations.push_back(std::move(a));
  return scene;
}

void to_json(nlohmann::json& j, const SceneParams& p) {
  j = nlohmann::json{{"kind", to_string(p.kind)},
                     {"width", p.width},
                     {"height", p.height},
                     {"count", p.count},
                     {"spacing", p.spacing},
                     {"noise_ratio", p.noise_ratio},
                     {"max_translation", p.bounds.max_translation},
                     {"max_rotation_deg", p.bounds.max_rotation_deg},
                     {"track_width", p.track_width},
                     {"annotation_thickness", p.annotation_thickness},
                     {"max_tilt_deg", p.max_tilt_deg},
                     {"margin", p.margin},
                     {"asymmetric_clutter", p.asymmetric_clutter}};
}

void from_json(const nlohmann::json& j, SceneParams& p) {
  p.kind = parse_object_kind(j.at("kind").get<std::string>());
  p.width = j.at("width").get<int>();
  p.height = j.at("height").get<int>();
  p.count = j.at("count").get<int>();
  p.spacing = j.at("spacing").get<double>();
  p.noise_ratio = j.at("noise_ratio").get<double>();
  p.bounds.max_translation = j.at("max_translation").get<double>();
  p.bounds.max_rotation_deg = j.at("max_rotation_deg").get<double>();
  p.track_width = j.at("track_width").get<double>();
  p.annotation_thickness = j.at("annotation_thickness").get<double>();
  p.max_tilt_deg = j.at("max_tilt_deg").get<double>();
  p.margin = j.at("margin").get<int>();
  p.asymmetric_clutter = j.at("asymmetric_clutter").get<bool>();
}

}  // namespace acorrect
