#include "acorrect/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "acorrect/errors.hpp"
#include "acorrect/parallel.hpp"

namespace acorrect {

namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const DatasetSpec& s) {
  j = json{{"kind", to_string(s.kind)},
           {"count", s.count},
           {"noise_ratio", s.noise_ratio},
           {"seed", s.seed},
           {"width", s.width},
           {"height", s.height},
           {"min_instances", s.min_instances},
           {"max_instances", s.max_instances},
           {"min_spacing", s.min_spacing},
           {"max_spacing", s.max_spacing},
           {"asymmetric_clutter", s.asymmetric_clutter}};
}

void from_json(const json& j, DatasetSpec& s) {
  DatasetSpec d;
  s.kind = parse_object_kind(j.value("kind", to_string(d.kind)));
  s.count = j.value("count", d.count);
  s.noise_ratio = j.value("noise_ratio", d.noise_ratio);
  s.seed = j.value("seed", d.seed);
  s.width = j.value("width", d.width);
  s.height = j.value("height", d.height);
  s.min_instances = j.value("min_instances", d.min_instances);
  s.max_instances = j.value("max_instances", d.max_instances);
  s.min_spacing = j.value("min_spacing", d.min_spacing);
  s.max_spacing = j.value("max_spacing", d.max_spacing);
  s.asymmetric_clutter = j.value("asymmetric_clutter", d.asymmetric_clutter);
}

void validate(const DatasetSpec& s) {
  if (!(s.noise_ratio >= 0.0 && s.noise_ratio <= 1.0)) throw UsageError("noise ratio must be in [0, 1]");
  if (s.width < 64 || s.height < 64) throw UsageError("scene size must be at least 64px");
  const int limit = s.kind == ObjectKind::track ? 4 : 6;
  if (s.min_instances < 1 || s.max_instances > limit || s.min_instances > s.max_instances)
    throw UsageError("instance count range must lie in 1.." + std::to_string(limit));
  if (!(s.min_spacing >= 8.0) || s.max_spacing < s.min_spacing) throw UsageError("spacing range must start at 8px or more");
}

std::string scene_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%05zu", index);
  return buf;
}

std::vector<Scene> generate_dataset(const DatasetSpec& spec) {
  validate(spec);
  std::vector<Scene> scenes(spec.count);
  parallel_for(spec.count, [&](std::size_t i) {
    const std::uint64_t seed = mix_seed(spec.seed, i);
    Rng rng(mix_seed(seed, 5));
    SceneParams p;
    p.kind = spec.kind;
    p.width = spec.width;
    p.height = spec.height;
    p.count = rng.uniform_int(spec.min_instances, spec.max_instances);
    p.spacing = rng.uniform(spec.min_spacing, spec.max_spacing);
    p.noise_ratio = spec.noise_ratio;
    p.asymmetric_clutter = spec.asymmetric_clutter;
    scenes[i] = generate_scene(seed, p);
  });
  return scenes;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

json annotations_json(const Scene& scene) {
  json instances = json::array();
  for (const auto& a : scene.annotations)
    instances.push_back({{"kind", to_string(a.kind)},
                         {"geometry", a.geometry},
                         {"gt_perturbation", a.gt_perturbation},
                         {"is_noisy", a.is_noisy},
                         {"appearance", a.appearance}});
  return {{"seed", scene.seed}, {"params", scene.meta}, {"instances", std::move(instances)}};
}

Scene scene_from_json(const json& j, Image image) {
  Scene s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.meta = j.at("params").get<SceneParams>();
  if (image.width() != s.meta.width || image.height() != s.meta.height)
    throw DataError("image size does not match the scene parameters");
  s.image = std::move(image);
  for (const auto& inst : j.at("instances")) {
    ObjectAnnotation a;
    a.kind = parse_object_kind(inst.at("kind").get<std::string>());
    a.geometry = inst.at("geometry").get<std::vector<Point2>>();
    a.is_noisy = inst.at("is_noisy").get<bool>();
    a.appearance = inst.at("appearance").get<Rgb>();
    a.gt_mask = render_annotation(a.geometry, a.kind, s.meta);
    set_perturbation(a, inst.at("gt_perturbation").get<RigidTransform2>());
    s.annotations.push_back(std::move(a));
  }
  if (s.annotations.empty()) throw DataError("scene without annotations");
  return s;
}

}  // namespace

void write_dataset(const fs::path& dir, const DatasetSpec& spec, const std::vector<Scene>& scenes) {
  std::error_code ec;
  fs::create_directories(dir / "scenes", ec);
  if (ec) throw DataError("cannot create " + (dir / "scenes").string() + ": " + ec.message());
  std::size_t instances = 0, noisy = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const fs::path sd = dir / "scenes" / scene_dir_name(i);
    fs::create_directories(sd, ec);
    if (ec) throw DataError("cannot create " + sd.string());
    write_png(sd / "image.png", scenes[i].image);
    write_text(sd / "annotations.json", annotations_json(scenes[i]).dump(2) + "\n");
    for (const auto& a : scenes[i].annotations) {
      ++instances;
      noisy += a.is_noisy;
    }
  }
  const json manifest = {{"generator_version", kGeneratorVersion},
                         {"seed", spec.seed},
                         {"noise_ratio", spec.noise_ratio},
                         {"kind", to_string(spec.kind)},
                         {"counts", {{"scenes", scenes.size()}, {"instances", instances}, {"noisy_instances", noisy}}},
                         {"spec", spec}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  Dataset d;
  d.manifest = read_json(dir / "manifest.json");
  std::size_t n = 0;
  try {
    n = d.manifest.at("counts").at("scenes").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError("malformed manifest: " + std::string(e.what()));
  }
  d.scenes.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const fs::path sd = dir / "scenes" / scene_dir_name(i);
    Image image;
    try {
      image = read_image_png(sd / "image.png");
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
    try {
      d.scenes[i] = scene_from_json(read_json(sd / "annotations.json"), std::move(image));
    } catch (const json::exception& e) {
      throw DataError(sd.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw DataError(sd.string() + ": " + e.what());
    }
  });
  return d;
}

}  // namespace acorrect
