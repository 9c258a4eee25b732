#pragma once

#include "rankopt/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace rankopt {

using Index = Eigen::Index;

// Fully connected embedding network: rectified hidden layers, identity output.
//
// All parameters live in one flat vector. Layer l occupies a contiguous slice
// holding its weight matrix (fan_out x fan_in, column-major) followed by its
// bias (fan_out). Layers are stored in forward order.
template <typename Scalar>
class EmbeddingModel {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  // Post-activation outputs of every layer; activations[0] is the input.
  struct Forward {
    std::vector<Matrix> activations;
    const Matrix& output() const { return activations.back(); }
  };

  EmbeddingModel(std::vector<Eigen::Index> layer_dims, Vector weights)
      : dims_(std::move(layer_dims)), weights_(std::move(weights)) {
    if (dims_.size() < 2) throw ContractError("model: need at least input and output widths");
    for (auto w : dims_)
      if (w < 1) throw ContractError("model: layer widths must be >= 1");
    if (weights_.size() != parameter_count(dims_))
      throw ContractError("model: expected " + std::to_string(parameter_count(dims_)) +
                          " weights, got " + std::to_string(weights_.size()));
  }

  static Eigen::Index parameter_count(const std::vector<Eigen::Index>& dims) {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) n += (dims[l] + 1) * dims[l + 1];
    return n;
  }

  static EmbeddingModel zeros(std::vector<Eigen::Index> dims) {
    const auto n = parameter_count(dims);
    return EmbeddingModel(std::move(dims), Vector::Zero(n));
  }

  // Glorot-uniform weights, zero biases.
  static EmbeddingModel glorot(std::vector<Eigen::Index> dims, std::uint64_t seed) {
    auto model = zeros(std::move(dims));
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
      const auto fan_in = model.dims_[l], fan_out = model.dims_[l + 1];
      const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> uni(-a, a);
      auto w = model.weight(l);
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = static_cast<Scalar>(uni(rng));
    }
    return model;
  }

  const std::vector<Eigen::Index>& layer_dims() const { return dims_; }
  const Vector& weights() const { return weights_; }
  Vector& weights() { return weights_; }
  std::size_t num_layers() const { return dims_.size() - 1; }
  Eigen::Index input_dim() const { return dims_.front(); }
  Eigen::Index output_dim() const { return dims_.back(); }

  Eigen::Map<const Matrix> weight(std::size_t l) const {
    return {weights_.data() + offset(l), dims_[l + 1], dims_[l]};
  }
  Eigen::Map<Matrix> weight(std::size_t l) {
    return {weights_.data() + offset(l), dims_[l + 1], dims_[l]};
  }
  Eigen::Map<const Vector> bias(std::size_t l) const {
    return {weights_.data() + offset(l) + dims_[l] * dims_[l + 1], dims_[l + 1]};
  }
  Eigen::Map<Vector> bias(std::size_t l) {
    return {weights_.data() + offset(l) + dims_[l] * dims_[l + 1], dims_[l + 1]};
  }

  // Columns of `inputs` are points.
  Forward forward(const Eigen::Ref<const Matrix>& inputs) const {
    if (inputs.rows() != input_dim())
      throw ContractError("embed: input dimension " + std::to_string(inputs.rows()) +
                          " does not match model input " + std::to_string(input_dim()));
    Forward f;
    f.activations.reserve(dims_.size());
    f.activations.emplace_back(inputs);
    for (std::size_t l = 0; l < num_layers(); ++l) {
      Matrix z = (weight(l) * f.activations.back()).colwise() + bias(l);
      if (l + 1 < num_layers()) z = z.cwiseMax(Scalar(0));
      f.activations.push_back(std::move(z));
    }
    return f;
  }

  Matrix embed_all(const Eigen::Ref<const Matrix>& inputs) const {
    return std::move(forward(inputs).activations.back());
  }

  Vector embed(const Eigen::Ref<const Vector>& x) const {
    return embed_all(x).col(0);
  }

  // Gradient with respect to the flat weight vector, given the gradient of
  // some scalar objective with respect to the network outputs (one column per
  // input point of the forward pass).
  Vector backward(const Forward& f, const Eigen::Ref<const Matrix>& output_grad) const {
    Vector grad = Vector::Zero(weights_.size());
    Matrix delta = output_grad;
    for (std::size_t l = num_layers(); l-- > 0;) {
      const Matrix& in = f.activations[l];
      Eigen::Map<Matrix>(grad.data() + offset(l), dims_[l + 1], dims_[l]).noalias() =
          delta * in.transpose();
      Eigen::Map<Vector>(grad.data() + offset(l) + dims_[l] * dims_[l + 1], dims_[l + 1]) =
          delta.rowwise().sum();
      if (l == 0) break;
      Matrix upstream = weight(l).transpose() * delta;
      // ReLU derivative, taken as 0 at the kink.
      delta = upstream.cwiseProduct(
          (in.array() > Scalar(0)).template cast<Scalar>().matrix());
    }
    return grad;
  }

 private:
  Eigen::Index offset(std::size_t l) const {
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < l; ++i) off += (dims_[i] + 1) * dims_[i + 1];
    return off;
  }

  std::vector<Eigen::Index> dims_;
  Vector weights_;
};

using Model = EmbeddingModel<double>;

inline std::vector<Eigen::Index> default_layer_dims(Eigen::Index input_dim) {
  return {input_dim, 64, 32};
}

}  // namespace rankopt
