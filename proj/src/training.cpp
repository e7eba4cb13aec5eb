#include "acorrect/training.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <stdexcept>

#include "acorrect/errors.hpp"
#include "acorrect/inductive.hpp"
#include "acorrect/parallel.hpp"
#include "acorrect/predictor.hpp"

namespace acorrect {

using nlohmann::json;

Adam::Adam(std::size_t n, AdamConfig config)
    : config_(config), m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))), v_(m_) {}

void Adam::step(Eigen::VectorXf& params, const Eigen::VectorXd& grad) {
  if (grad.size() != m_.size() || params.size() != m_.size())
    throw std::invalid_argument("Adam: gradient size does not match the parameters");
  for (Eigen::Index k = 0; k < grad.size(); ++k)
    if (!std::isfinite(grad[k]))
      throw NumericError("non-finite gradient at parameter " + std::to_string(k) + " (step " + std::to_string(t_ + 1) + ")");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (Eigen::Index k = 0; k < grad.size(); ++k) {
    m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * grad[k];
    v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * grad[k] * grad[k];
    const double update = config_.lr * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + config_.epsilon);
    params[k] = static_cast<float>(params[k] - update);
  }
}

bool PlateauScheduler::observe(double objective) {
  recent_.push_back(objective);
  sum_ += objective;
  if (static_cast<int>(recent_.size()) > window_) {
    sum_ -= recent_.front();
    recent_.erase(recent_.begin());
  }
  if (fired_ || static_cast<int>(recent_.size()) < window_) return false;
  const double mean = sum_ / window_;
  if (!best_ || mean < *best_ * (1.0 - threshold_)) {
    best_ = mean;
    stale_ = 0;
    return false;
  }
  if (++stale_ >= patience_) {
    fired_ = true;
    return true;
  }
  return false;
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"warmup_steps", c.warmup_steps},
           {"iou_threshold", c.iou_threshold},
           {"lr", c.lr},
           {"batch_size", c.batch_size},
           {"seed", c.seed},
           {"max_steps", c.max_steps},
           {"noise_ratio", c.noise_ratio ? json(*c.noise_ratio) : json(nullptr)},
           {"dataset_path", c.dataset_path},
           {"use_memory", c.use_memory},
           {"use_consistency", c.use_consistency},
           {"teacher_forcing", c.teacher_forcing},
           {"plateau_window", c.plateau_window},
           {"plateau_patience", c.plateau_patience},
           {"plateau_threshold", c.plateau_threshold},
           {"architecture", c.architecture}};
}

void from_json(const json& j, TrainConfig& c) {
  const TrainConfig d = c;
  c.warmup_steps = j.value("warmup_steps", d.warmup_steps);
  c.iou_threshold = j.value("iou_threshold", d.iou_threshold);
  c.lr = j.value("lr", d.lr);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.seed = j.value("seed", d.seed);
  c.max_steps = j.value("max_steps", d.max_steps);
  if (j.contains("noise_ratio")) {
    if (j["noise_ratio"].is_null())
      c.noise_ratio.reset();
    else
      c.noise_ratio = j["noise_ratio"].get<double>();
  }
  c.dataset_path = j.value("dataset_path", d.dataset_path);
  c.use_memory = j.value("use_memory", d.use_memory);
  c.use_consistency = j.value("use_consistency", d.use_consistency);
  c.teacher_forcing = j.value("teacher_forcing", d.teacher_forcing);
  c.plateau_window = j.value("plateau_window", d.plateau_window);
  c.plateau_patience = j.value("plateau_patience", d.plateau_patience);
  c.plateau_threshold = j.value("plateau_threshold", d.plateau_threshold);
  if (j.contains("architecture")) c.architecture = j["architecture"].get<NetArchitecture>();
}

std::string curve_csv_header() { return "step,objective,self_supervised_share,consistency_share,lr,gate_rate"; }

std::string curve_csv_row(const CurveRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.9g,%.6f,%.6f,%.9g,%.6f", r.step, r.objective, r.self_supervised_share,
                r.consistency_share, r.lr, r.gate_rate);
  return buf;
}

namespace {

/// Training labels of one scene; they differ from the stored noisy masks when the noise ratio is
/// overridden.
using Labels = std::vector<const Mask*>;

Labels stored_labels(const Scene& scene) {
  Labels l;
  for (const auto& a : scene.annotations) l.push_back(&a.noisy_mask);
  return l;
}

struct Layout {
  std::vector<Mask> ordered;  // every label, perturbed unless it belongs to the target
  std::vector<std::size_t> order;
  std::size_t position = 0;  // position of the target instance in processing order
};

Layout perturbed_layout(const Scene& scene, const Labels& labels, std::size_t instance, Rng& rng) {
  const std::size_t n = labels.size();
  std::vector<Mask> masks(n);
  std::vector<Point2> centroids(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Mask& y = *labels[j];
    const RigidTransform2 h = sample_perturbation(rng, scene.meta.bounds, y.centroid());
    masks[j] = j == instance ? y : warp(y, h);
    centroids[j] = masks[j].centroid();
  }
  Layout l;
  l.order = canonical_order(centroids);
  for (std::size_t p = 0; p < n; ++p) {
    l.ordered.push_back(std::move(masks[l.order[p]]));
    if (l.order[p] == instance) l.position = p;
  }
  return l;
}

TrainingExample finish_example(const Scene& scene, const Labels& labels, std::size_t scene_index, std::size_t instance,
                               Rng& rng, Mask memory) {
  TrainingExample ex;
  ex.scene = scene_index;
  ex.instance = instance;
  ex.label = *labels[instance];
  const Point2 c = ex.label.centroid();
  ex.g1 = sample_perturbation(rng, scene.meta.bounds, c);
  ex.g2 = sample_perturbation(rng, scene.meta.bounds, c);
  ex.memory = std::move(memory);
  return ex;
}

TrainingExample teacher_forced_example(const Scene& scene, const Labels& labels, std::size_t scene_index,
                                       std::size_t instance, Rng& rng) {
  if (instance >= labels.size()) throw std::out_of_range("training example: no such instance");
  const Layout l = perturbed_layout(scene, labels, instance, rng);
  Mask memory(scene.image.width(), scene.image.height());
  for (std::size_t p = 0; p < l.ordered.size(); ++p) {
    if (p < l.position)
      memory += *labels[l.order[p]];
    else if (p > l.position)
      memory += l.ordered[p];
  }
  return finish_example(scene, labels, scene_index, instance, rng, std::move(memory));
}

TrainingExample free_running_example(const Scene& scene, const Labels& labels, std::size_t scene_index,
                                     std::size_t instance, Rng& rng, const AlignmentNet& net, bool use_memory) {
  if (instance >= labels.size()) throw std::out_of_range("training example: no such instance");
  Layout l = perturbed_layout(scene, labels, instance, rng);
  const std::size_t position = l.position;
  CorrectionSession session = init_session(scene.image, std::move(l.ordered), std::move(l.order));
  const NetPredictor predictor(net, use_memory);
  for (std::size_t p = 0; p < position; ++p) step(session, predictor);
  return finish_example(scene, labels, scene_index, instance, rng, session.memory());
}

}  // namespace

TrainingExample make_training_example(const Scene& scene, std::size_t scene_index, std::size_t instance, Rng& rng) {
  return teacher_forced_example(scene, stored_labels(scene), scene_index, instance, rng);
}

TrainingExample make_free_running_example(const Scene& scene, std::size_t scene_index, std::size_t instance, Rng& rng,
                                          const AlignmentNet& net, bool use_memory) {
  return free_running_example(scene, stored_labels(scene), scene_index, instance, rng, net, use_memory);
}

TrainResult train(const std::vector<Scene>& scenes, const TrainConfig& config,
                  const std::function<void(const CurveRow&, const AlignmentNet&)>& progress) {
  if (scenes.empty()) throw DataError("training set is empty");
  if (config.batch_size < 1 || config.max_steps < 0 || config.warmup_steps < 0)
    throw std::invalid_argument("batch_size must be positive and step counts non-negative");
  if (!(config.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  const auto& arch = config.architecture;
  for (const auto& s : scenes)
    if (s.image.width() != arch.width || s.image.height() != arch.height)
      throw DataError("scene size does not match the network architecture");
  std::vector<Labels> labels;
  std::deque<Mask> relabeled;
  for (const auto& s : scenes) labels.push_back(stored_labels(s));
  if (config.noise_ratio) {
    if (!(*config.noise_ratio >= 0.0 && *config.noise_ratio <= 1.0)) throw std::invalid_argument("noise_ratio must be in [0, 1]");
    for (std::size_t k = 0; k < scenes.size(); ++k) {
      Scene copy = scenes[k];
      resample_label_noise(copy, *config.noise_ratio, mix_seed(copy.seed, 2));
      for (std::size_t j = 0; j < copy.annotations.size(); ++j) {
        auto& a = copy.annotations[j];
        if (a.gt_perturbation == RigidTransform2::identity()) {
          labels[k][j] = &scenes[k].annotations[j].gt_mask;
        } else {
          relabeled.push_back(std::move(a.noisy_mask));
          labels[k][j] = &relabeled.back();
        }
      }
    }
  }

  TrainResult result{AlignmentNet(arch), {}, std::nullopt};
  AlignmentNet& net = result.net;
  Rng init_rng(mix_seed(config.seed, 11));
  net.initialize(init_rng);
  Adam adam(arch.parameter_count(), {config.lr});
  PlateauScheduler plateau(config.plateau_window, config.plateau_patience, config.plateau_threshold);
  Rng rng(mix_seed(config.seed, 12));

  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const double scale = 0.5 * arch.width;
  GatingConfig gating;
  gating.iou_threshold = config.iou_threshold;
  gating.warmup_steps = config.warmup_steps;
  gating.consistency = config.use_consistency;

  using Tape = AlignmentNet::Tape;
  std::vector<TrainingExample> examples(batch);
  std::vector<std::uint64_t> example_seeds(batch);
  std::vector<std::size_t> picks_scene(batch), picks_instance(batch);
  std::vector<Tape> tapes(2 * batch);
  std::vector<AlignmentNet::Output> outputs(2 * batch);
  std::vector<Eigen::VectorXf> grads(batch);

  for (int step_no = 1; step_no <= config.max_steps; ++step_no) {
    gating.phase = step_no > config.warmup_steps ? TrainingPhase::gated : TrainingPhase::warmup;
    for (std::size_t b = 0; b < batch; ++b) {
      picks_scene[b] = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(scenes.size()) - 1));
      picks_instance[b] =
          static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(scenes[picks_scene[b]].annotations.size()) - 1));
      example_seeds[b] = rng.next();
    }

    parallel_for(batch, [&](std::size_t b) {
      Rng ex_rng(example_seeds[b]);
      const Scene& s = scenes[picks_scene[b]];
      const Labels& l = labels[picks_scene[b]];
      examples[b] = config.use_memory && !config.teacher_forcing
                        ? free_running_example(s, l, picks_scene[b], picks_instance[b], ex_rng, net, true)
                        : teacher_forced_example(s, l, picks_scene[b], picks_instance[b], ex_rng);
      const TrainingExample& ex = examples[b];
      const Mask* memory = config.use_memory ? &ex.memory : nullptr;
      outputs[2 * b] = net.forward(make_input<float>(s.image, warp(ex.label, ex.g1), memory), &tapes[2 * b]);
      outputs[2 * b + 1] = net.forward(make_input<float>(s.image, warp(ex.label, ex.g2), memory), &tapes[2 * b + 1]);
    });

    std::vector<ObjectiveSample> samples(batch);
    for (std::size_t b = 0; b < batch; ++b)
      samples[b] = {examples[b].g1, to_transform(outputs[2 * b]), examples[b].g2, to_transform(outputs[2 * b + 1]),
                    &examples[b].label};
    const ObjectiveResult obj = joint_objective(samples, gating, scale);
    if (!std::isfinite(obj.value)) throw NumericError("non-finite objective at step " + std::to_string(step_no));

    parallel_for(batch, [&](std::size_t b) {
      grads[b] = Eigen::VectorXf::Zero(static_cast<Eigen::Index>(arch.parameter_count()));
      const auto& d1 = obj.d_t1[b];
      const auto& d2 = obj.d_t2[b];
      net.backward(tapes[2 * b], {static_cast<float>(d1[0]), static_cast<float>(d1[1]), static_cast<float>(d1[2])}, grads[b]);
      net.backward(tapes[2 * b + 1], {static_cast<float>(d2[0]), static_cast<float>(d2[1]), static_cast<float>(d2[2])},
                   grads[b]);
    });
    Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.parameter_count()));
    for (std::size_t b = 0; b < batch; ++b) total += grads[b].cast<double>();
    adam.step(net.parameters(), total);

    std::size_t gated_to_consistency = 0;
    for (const auto& g : obj.gates) gated_to_consistency += g.alpha_s == 0 && g.alpha_c == 1;
    const double denom = obj.value > 0.0 ? obj.value : 1.0;
    CurveRow row{step_no,
                 obj.value,
                 obj.value > 0.0 ? obj.self_supervised_part / denom : 0.0,
                 obj.value > 0.0 ? obj.consistency_part / denom : 0.0,
                 adam.lr(),
                 static_cast<double>(gated_to_consistency) / static_cast<double>(batch)};
    result.curve.push_back(row);
    if (progress) progress(row, net);
    if (plateau.observe(obj.value)) {
      adam.set_lr(adam.lr() / 10.0);
      result.lr_drop_step = step_no;
    }
  }
  return result;
}

}  // namespace acorrect
