#include "acorrect/network.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace acorrect {

namespace {

/// The bound as a Scalar no larger than the exact value, so saturated outputs never exceed it.
template <typename Scalar>
Scalar bound_below(double b) {
  Scalar s = static_cast<Scalar>(b);
  if (static_cast<double>(s) > b) s = std::nextafter(s, Scalar(0));
  return s;
}

}  // namespace

std::size_t NetArchitecture::parameter_count() const {
  std::size_t n = 0;
  int channels = in_channels;
  for (int w : conv_widths) {
    n += static_cast<std::size_t>(w) * 9 * channels + w;
    channels = w;
  }
  n += static_cast<std::size_t>(hidden) * channels + hidden;
  n += 3 * static_cast<std::size_t>(hidden) + 3;
  return n;
}

void to_json(nlohmann::json& j, const NetArchitecture& a) {
  j = nlohmann::json{{"in_channels", a.in_channels}, {"width", a.width},   {"height", a.height},
                     {"conv_widths", a.conv_widths}, {"hidden", a.hidden}, {"theta_bound", a.theta_bound}};
}

void from_json(const nlohmann::json& j, NetArchitecture& a) {
  a.in_channels = j.at("in_channels").get<int>();
  a.width = j.at("width").get<int>();
  a.height = j.at("height").get<int>();
  a.conv_widths = j.at("conv_widths").get<std::vector<int>>();
  a.hidden = j.at("hidden").get<int>();
  a.theta_bound = j.at("theta_bound").get<double>();
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> make_input(const Image& image, const Mask& annotation,
                                                                 const Mask* memory) {
  const int w = image.width(), h = image.height();
  if (annotation.width() != w || annotation.height() != h || (memory && !memory->same_shape(annotation)))
    throw std::invalid_argument("make_input: raster dimensions differ");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> in(5, static_cast<Eigen::Index>(w) * h);
  const auto ann = annotation.data();
  for (Eigen::Index p = 0; p < in.cols(); ++p) {
    const auto pi = static_cast<std::size_t>(p);
    for (int k = 0; k < 3; ++k) in(k, p) = static_cast<Scalar>(image.data()[static_cast<std::size_t>(k) * w * h + pi] - 0.5f);
    in(3, p) = static_cast<Scalar>(ann[pi]);
    in(4, p) = memory ? static_cast<Scalar>(memory->data()[pi]) : Scalar(0);
  }
  return in;
}

template Eigen::MatrixXf make_input<float>(const Image&, const Mask&, const Mask*);
template Eigen::MatrixXd make_input<double>(const Image&, const Mask&, const Mask*);

template <typename Scalar>
ConvNet<Scalar>::ConvNet(NetArchitecture arch) : arch_(std::move(arch)) {
  build_layout();
  params_ = Vec::Zero(static_cast<Eigen::Index>(arch_.parameter_count()));
}

template <typename Scalar>
void ConvNet<Scalar>::build_layout() {
  if (arch_.in_channels < 1 || arch_.width < 1 || arch_.height < 1 || arch_.conv_widths.empty() || arch_.hidden < 1)
    throw std::invalid_argument("invalid network architecture");
  convs_.clear();
  std::size_t off = 0;
  int channels = arch_.in_channels, h = arch_.height, w = arch_.width;
  for (int width : arch_.conv_widths) {
    ConvLayout c{channels, width, h, w, (h + 1) / 2, (w + 1) / 2, off, 0};
    off += static_cast<std::size_t>(width) * 9 * channels;
    c.bias_offset = off;
    off += width;
    convs_.push_back(c);
    channels = width;
    h = c.out_h;
    w = c.out_w;
  }
  fc1_w_ = off;
  off += static_cast<std::size_t>(arch_.hidden) * channels;
  fc1_b_ = off;
  off += arch_.hidden;
  fc2_w_ = off;
  off += 3 * static_cast<std::size_t>(arch_.hidden);
  fc2_b_ = off;
}

template <typename Scalar>
void ConvNet<Scalar>::initialize(Rng& rng, bool zero_final_layer) {
  params_.setZero();
  auto fill = [&](std::size_t off, std::size_t count, int fan_in) {
    const double a = std::sqrt(3.0 / fan_in);
    for (std::size_t i = 0; i < count; ++i) params_[static_cast<Eigen::Index>(off + i)] = static_cast<Scalar>(rng.uniform(-a, a));
  };
  for (const auto& c : convs_) fill(c.weight_offset, static_cast<std::size_t>(c.out_channels) * 9 * c.in_channels, 9 * c.in_channels);
  const int last = convs_.back().out_channels;
  fill(fc1_w_, static_cast<std::size_t>(arch_.hidden) * last, last);
  if (!zero_final_layer) {
    fill(fc2_w_, 3 * static_cast<std::size_t>(arch_.hidden), arch_.hidden);
    fill(fc2_b_, 3, arch_.hidden);
  }
}

template <typename Scalar>
typename ConvNet<Scalar>::Output ConvNet<Scalar>::forward(const Mat& input, Tape* tape) const {
  if (input.rows() != arch_.in_channels || input.cols() != static_cast<Eigen::Index>(arch_.width) * arch_.height)
    throw std::invalid_argument("network input does not match the architecture");
  if (tape) {
    tape->recorded = false;
    tape->columns.resize(convs_.size());
    tape->activations.resize(convs_.size());
  }

  Mat local_col, local_act;
  const Mat* current = &input;
  for (std::size_t l = 0; l < convs_.size(); ++l) {
    const ConvLayout& c = convs_[l];
    Mat& col = tape ? tape->columns[l] : local_col;
    col.setZero(9 * c.in_channels, static_cast<Eigen::Index>(c.out_h) * c.out_w);
    const Scalar* src = current->data();
    for (int oy = 0; oy < c.out_h; ++oy)
      for (int ox = 0; ox < c.out_w; ++ox) {
        Scalar* dst = col.data() + static_cast<std::size_t>(oy * c.out_w + ox) * 9 * c.in_channels;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy + ky - 1;
          if (iy < 0 || iy >= c.in_h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox + kx - 1;
            if (ix < 0 || ix >= c.in_w) continue;
            std::memcpy(dst + (ky * 3 + kx) * c.in_channels, src + static_cast<std::size_t>(iy * c.in_w + ix) * c.in_channels,
                        sizeof(Scalar) * c.in_channels);
          }
        }
      }
    const Eigen::Map<const Mat> weights(params_.data() + c.weight_offset, c.out_channels, 9 * c.in_channels);
    const Eigen::Map<const Vec> bias(params_.data() + c.bias_offset, c.out_channels);
    Mat& act = tape ? tape->activations[l] : local_act;
    Mat z = weights * col;
    z.colwise() += bias;
    act = z.array().tanh().matrix();
    current = &act;  // im2col of the next block reads it before `act` is overwritten
  }

  const int last = convs_.back().out_channels;
  Vec pooled = current->rowwise().mean();
  const Eigen::Map<const Mat> w1(params_.data() + fc1_w_, arch_.hidden, last);
  const Eigen::Map<const Vec> b1(params_.data() + fc1_b_, arch_.hidden);
  Vec hidden = (w1 * pooled + b1).array().tanh().matrix();
  const Eigen::Map<const Mat> w2(params_.data() + fc2_w_, 3, arch_.hidden);
  const Eigen::Map<const Vec> b2(params_.data() + fc2_b_, 3);
  const Vec z = w2 * hidden + b2;

  const auto bounds = arch_.output_bounds();
  Output squashed{}, out{};
  for (int i = 0; i < 3; ++i) {
    squashed[i] = std::tanh(z[i]);
    out[i] = bound_below<Scalar>(bounds[i]) * squashed[i];
  }
  if (tape) {
    tape->pooled = std::move(pooled);
    tape->hidden = std::move(hidden);
    tape->squashed = squashed;
    tape->recorded = true;
  }
  return out;
}

template <typename Scalar>
void ConvNet<Scalar>::backward(const Tape& tape, const Output& d_output, Vec& grad) const {
  if (!tape.recorded) throw std::logic_error("backward called without a recorded forward pass");
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer has the wrong size");

  const auto bounds = arch_.output_bounds();
  Vec dz(3);
  for (int i = 0; i < 3; ++i)
    dz[i] = d_output[i] * bound_below<Scalar>(bounds[i]) * (Scalar(1) - tape.squashed[i] * tape.squashed[i]);

  const int last = convs_.back().out_channels;
  Eigen::Map<Mat> gw2(grad.data() + fc2_w_, 3, arch_.hidden);
  Eigen::Map<Vec> gb2(grad.data() + fc2_b_, 3);
  gw2.noalias() += dz * tape.hidden.transpose();
  gb2 += dz;

  const Eigen::Map<const Mat> w2(params_.data() + fc2_w_, 3, arch_.hidden);
  const Vec dh = ((w2.transpose() * dz).array() * (Scalar(1) - tape.hidden.array().square())).matrix();
  Eigen::Map<Mat> gw1(grad.data() + fc1_w_, arch_.hidden, last);
  Eigen::Map<Vec> gb1(grad.data() + fc1_b_, arch_.hidden);
  gw1.noalias() += dh * tape.pooled.transpose();
  gb1 += dh;

  const Eigen::Map<const Mat> w1(params_.data() + fc1_w_, arch_.hidden, last);
  const Vec dpooled = w1.transpose() * dh;

  const Mat& last_act = tape.activations.back();
  Mat dact = (dpooled / static_cast<Scalar>(last_act.cols())).replicate(1, last_act.cols());

  for (std::size_t l = convs_.size(); l-- > 0;) {
    const ConvLayout& c = convs_[l];
    const Mat& act = tape.activations[l];
    const Mat& col = tape.columns[l];
    const Mat dzl = (dact.array() * (Scalar(1) - act.array().square())).matrix();
    Eigen::Map<Mat> gw(grad.data() + c.weight_offset, c.out_channels, 9 * c.in_channels);
    Eigen::Map<Vec> gb(grad.data() + c.bias_offset, c.out_channels);
    gw.noalias() += dzl * col.transpose();
    gb += dzl.rowwise().sum();
    if (l == 0) break;

    const Eigen::Map<const Mat> weights(params_.data() + c.weight_offset, c.out_channels, 9 * c.in_channels);
    const Mat dcol = weights.transpose() * dzl;
    Mat dprev = Mat::Zero(c.in_channels, static_cast<Eigen::Index>(c.in_h) * c.in_w);
    for (int oy = 0; oy < c.out_h; ++oy)
      for (int ox = 0; ox < c.out_w; ++ox) {
        const Scalar* src = dcol.data() + static_cast<std::size_t>(oy * c.out_w + ox) * 9 * c.in_channels;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy + ky - 1;
          if (iy < 0 || iy >= c.in_h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox + kx - 1;
            if (ix < 0 || ix >= c.in_w) continue;
            Scalar* dst = dprev.data() + static_cast<std::size_t>(iy * c.in_w + ix) * c.in_channels;
            const Scalar* s = src + (ky * 3 + kx) * c.in_channels;
            for (int ch = 0; ch < c.in_channels; ++ch) dst[ch] += s[ch];
          }
        }
      }
    dact = std::move(dprev);
  }
}

template class ConvNet<float>;
template class ConvNet<double>;

RigidTransform2 forward(const AlignmentNet& net, const Image& image, const Mask& memory, const Mask& annotation) {
  const auto& arch = net.architecture();
  if (image.width() != arch.width || image.height() != arch.height)
    throw std::invalid_argument("image size does not match the network architecture");
  return to_transform(net.forward(make_input<float>(image, annotation, &memory)));
}

}  // namespace acorrect
