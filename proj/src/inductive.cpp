#include "acorrect/inductive.hpp"

#include <numeric>
#include <stdexcept>

namespace acorrect {

std::vector<std::size_t> canonical_order(std::span<const Point2> centroids) {
  if (centroids.empty()) throw std::invalid_argument("canonical_order: no annotations");
  std::vector<std::size_t> remaining(centroids.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<std::size_t> order;
  order.reserve(centroids.size());
  while (!remaining.empty()) {
    double min_x = centroids[remaining.front()].x;
    for (auto i : remaining) min_x = std::min(min_x, centroids[i].x);
    std::size_t pick_pos = remaining.size();
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      const auto i = remaining[k];
      if (centroids[i].x - min_x >= 1.0) continue;
      if (pick_pos == remaining.size() || centroids[i].y > centroids[remaining[pick_pos]].y) pick_pos = k;
    }
    order.push_back(remaining[pick_pos]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick_pos));
  }
  return order;
}

std::vector<std::size_t> canonical_order(std::span<const Mask> annotations) {
  std::vector<Point2> centroids;
  centroids.reserve(annotations.size());
  for (const auto& m : annotations) centroids.push_back(m.centroid());
  return canonical_order(centroids);
}

CorrectionSession init_session(Image image, std::vector<Mask> annotations, std::vector<std::size_t> original_indices) {
  if (annotations.empty()) throw std::invalid_argument("init_session: no annotations");
  for (const auto& a : annotations)
    if (a.width() != image.width() || a.height() != image.height())
      throw std::invalid_argument("init_session: annotation and image sizes differ");
  if (original_indices.empty()) {
    original_indices.resize(annotations.size());
    std::iota(original_indices.begin(), original_indices.end(), 0);
  }
  if (original_indices.size() != annotations.size()) throw std::invalid_argument("init_session: index map size mismatch");

  CorrectionSession s;
  s.memory_ = Mask(image.width(), image.height());
  for (std::size_t j = 1; j < annotations.size(); ++j) s.memory_ += annotations[j];
  s.image_ = std::move(image);
  s.annotations_ = std::move(annotations);
  s.original_ = std::move(original_indices);
  return s;
}

CorrectionSession start_session(Image image, const std::vector<Mask>& annotations) {
  const auto order = canonical_order(annotations);
  std::vector<Mask> ordered;
  ordered.reserve(order.size());
  for (auto i : order) ordered.push_back(annotations[i]);
  return init_session(std::move(image), std::move(ordered), order);
}

RigidTransform2 step(CorrectionSession& s, const AlignmentPredictor& predictor) {
  if (s.finished()) throw std::logic_error("step: session already finished");
  const std::size_t i = s.step_ - 1;
  const Mask& y = s.annotations_[i];
  const RigidTransform2 t = predictor.predict({s.image_, s.memory_, y, s.original_[i]});
  s.memory_ += warp(y, t);
  if (i + 1 < s.annotations_.size()) s.memory_ -= s.annotations_[i + 1];
  s.corrections_.push_back(t);
  ++s.step_;
  return t;
}

Mask CorrectionSession::expanded_memory() const {
  // After k = step_ - 1 completed steps: sum_{j <= k} warp(y_j, t_j) + sum_{j >= k + 2} y_j.
  const std::size_t done = step_ - 1;
  Mask m(image_.width(), image_.height());
  for (std::size_t j = 0; j < done; ++j) m += warp(annotations_[j], corrections_[j]);
  for (std::size_t j = done + 1; j < annotations_.size(); ++j) m += annotations_[j];
  return m;
}

std::vector<CorrectionRecord> run_to_completion(CorrectionSession& session, const AlignmentPredictor& predictor) {
  while (!session.finished()) step(session, predictor);
  std::vector<CorrectionRecord> out;
  out.reserve(session.size());
  for (std::size_t j = 0; j < session.size(); ++j)
    out.push_back({session.original_indices()[j], session.corrections()[j],
                   warp(session.annotations()[j], session.corrections()[j])});
  return out;
}

}  // namespace acorrect
