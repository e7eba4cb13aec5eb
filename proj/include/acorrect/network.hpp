#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <vector>

#include "acorrect/geometry.hpp"
#include "acorrect/raster.hpp"
#include "acorrect/rng.hpp"

namespace acorrect {

/**
 * Layout of the alignment network:
 *
 *   input  in_channels x H x W   (R, G, B, annotation, memory)
 *   conv   3x3, stride 2, pad 1, tanh     one block per entry of conv_widths
 *   pool   global average
 *   fc     C_last -> hidden, tanh
 *   fc     hidden -> 3
 *   squash (W/2, H/2, theta_bound) * tanh(.)  ->  (tx, ty, theta)
 */
struct NetArchitecture {
  int in_channels = 5;
  int width = 128;
  int height = 128;
  std::vector<int> conv_widths = {16, 32, 64, 64, 64};
  int hidden = 32;
  double theta_bound = 0.2;

  static NetArchitecture standard() { return {}; }
  /// Two-block net on 16x16 inputs for gradient checking.
  static NetArchitecture tiny() { return {5, 16, 16, {4, 8}, 8, 0.2}; }

  std::size_t parameter_count() const;
  std::array<double, 3> output_bounds() const { return {0.5 * width, 0.5 * height, theta_bound}; }

  friend bool operator==(const NetArchitecture&, const NetArchitecture&) = default;
};

void to_json(nlohmann::json& j, const NetArchitecture& a);
void from_json(const nlohmann::json& j, NetArchitecture& a);

/// Packs (image - 0.5, annotation, memory) into a channels x (H*W) matrix, pixel-major columns.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> make_input(const Image& image, const Mask& annotation,
                                                                 const Mask* memory);

/**
 * Convolutional alignment predictor with a hand-written reverse pass. Parameters live in one
 * flat vector; Scalar = float for training and inference, double for gradient checking.
 */
template <typename Scalar>
class ConvNet {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Output = std::array<Scalar, 3>;

  /// Activations recorded by a forward pass, consumed by backward().
  struct Tape {
    bool recorded = false;
    std::vector<Mat> columns;      // im2col input of each conv block
    std::vector<Mat> activations;  // tanh output of each conv block
    Vec pooled;
    Vec hidden;
    Output squashed{};  // tanh of the final linear outputs
  };

  explicit ConvNet(NetArchitecture arch = NetArchitecture::standard());

  /// Uniform(-sqrt(3/fan_in), +sqrt(3/fan_in)) weights, zero biases, zero final layer.
  void initialize(Rng& rng, bool zero_final_layer = true);

  const NetArchitecture& architecture() const { return arch_; }
  Vec& parameters() { return params_; }
  const Vec& parameters() const { return params_; }

  /// `input` is in_channels x (H*W). When `tape` is non-null the pass is recorded on it.
  Output forward(const Mat& input, Tape* tape = nullptr) const;

  /// Accumulates d(objective)/d(parameters) into `grad` given d(objective)/d(output).
  /// Throws std::logic_error if `tape` holds no recorded forward pass.
  void backward(const Tape& tape, const Output& d_output, Vec& grad) const;

  template <typename Other>
  ConvNet<Other> cast() const {
    ConvNet<Other> out(arch_);
    out.parameters() = params_.template cast<Other>();
    return out;
  }

 private:
  struct ConvLayout {
    int in_channels, out_channels;
    int in_h, in_w, out_h, out_w;
    std::size_t weight_offset, bias_offset;
  };

  void build_layout();

  NetArchitecture arch_;
  std::vector<ConvLayout> convs_;
  std::size_t fc1_w_ = 0, fc1_b_ = 0, fc2_w_ = 0, fc2_b_ = 0;
  Vec params_;
};

extern template class ConvNet<float>;
extern template class ConvNet<double>;

using AlignmentNet = ConvNet<float>;

/// Convenience wrapper: packs the rasters and returns the output as a transform.
/// Throws std::invalid_argument when raster sizes do not match the architecture.
RigidTransform2 forward(const AlignmentNet& net, const Image& image, const Mask& memory, const Mask& annotation);

template <typename Scalar>
RigidTransform2 to_transform(const std::array<Scalar, 3>& out) {
  return {static_cast<double>(out[0]), static_cast<double>(out[1]), static_cast<double>(out[2])};
}

}  // namespace acorrect
