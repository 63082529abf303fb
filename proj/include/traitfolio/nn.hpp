#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "traitfolio/error.hpp"
#include "traitfolio/io.hpp"

namespace traitfolio::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class OutputHead { Linear, Softmax };

// y = W x + b, W is (out x in).
struct Layer {
  Matrix weight;
  Vector bias;
};

// Column-wise softmax, shifted by the column max.
inline Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double top = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - top).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

// Activations cached by a forward pass. activations[0] is the input,
// activations[l] (l >= 1) the ReLU output feeding layer l.
struct ForwardPass {
  std::vector<Matrix> activations;
  Matrix logits;
  Matrix output;
};

// Dense ReLU network with a Linear or Softmax head.
class DenseNet {
 public:
  DenseNet() = default;

  // Weights and biases drawn uniformly from +-1/sqrt(fan_in).
  DenseNet(std::vector<std::size_t> sizes, OutputHead head, std::uint64_t seed)
      : sizes_(std::move(sizes)), head_(head), seed_(seed) {
    check_sizes();
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const auto in = static_cast<Eigen::Index>(sizes_[l]);
      const auto out = static_cast<Eigen::Index>(sizes_[l + 1]);
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> uniform(-bound, bound);
      Layer layer{Matrix(out, in), Vector(out)};
      for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = uniform(rng);
      }
      for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = uniform(rng);
      layers_.push_back(std::move(layer));
    }
  }

  static DenseNet zeros(std::vector<std::size_t> sizes, OutputHead head) {
    DenseNet net(std::move(sizes), head, 0);
    for (auto& layer : net.layers_) {
      layer.weight.setZero();
      layer.bias.setZero();
    }
    return net;
  }

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  OutputHead head() const { return head_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
    return n;
  }

  // Inputs are columns.
  ForwardPass forward_pass(const Matrix& inputs) const {
    if (static_cast<std::size_t>(inputs.rows()) != input_size()) {
      throw ShapeError("network expects " + std::to_string(input_size()) +
                       " inputs, got " + std::to_string(inputs.rows()));
    }
    ForwardPass pass;
    pass.activations.reserve(layers_.size());
    pass.activations.push_back(inputs);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * pass.activations.back();
      z.colwise() += layers_[l].bias;
      if (l + 1 < layers_.size()) {
        pass.activations.push_back(z.cwiseMax(0.0));
      } else {
        pass.logits = std::move(z);
      }
    }
    pass.output = head_ == OutputHead::Softmax ? softmax_columns(pass.logits) : pass.logits;
    return pass;
  }

  Matrix forward_batch(const Matrix& inputs) const { return forward_pass(inputs).output; }

  Vector forward(const Vector& input) const {
    return forward_pass(Matrix(input)).output.col(0);
  }

  // Pre-head outputs (the softmax logits for a Softmax head).
  Vector logits(const Vector& input) const {
    return forward_pass(Matrix(input)).logits.col(0);
  }

  bool congruent(const DenseNet& other) const {
    return sizes_ == other.sizes_ && head_ == other.head_;
  }

 private:
  void check_sizes() const {
    if (sizes_.size() < 2) throw ShapeError("a network needs at least one layer");
    for (auto s : sizes_) {
      if (s == 0) throw ShapeError("layer sizes must be positive");
    }
  }

  std::vector<std::size_t> sizes_;
  OutputHead head_ = OutputHead::Linear;
  std::uint64_t seed_ = 0;
  std::vector<Layer> layers_;
};

// Parameter gradients (summed over the batch) and per-column input gradients.
struct Gradients {
  std::vector<Layer> layers;
  Matrix input;
};

// Reverse-mode gradients of sum_columns(output . upstream).
inline Gradients backward(const DenseNet& net, const ForwardPass& pass,
                          const Matrix& upstream) {
  if (upstream.rows() != pass.output.rows() || upstream.cols() != pass.output.cols()) {
    throw ShapeError("upstream gradient does not match the network output");
  }
  Matrix delta;
  if (net.head() == OutputHead::Softmax) {
    // d softmax: y * (u - <y, u>)
    const Eigen::RowVectorXd dots = (pass.output.array() * upstream.array()).colwise().sum();
    delta = (pass.output.array() * (upstream.rowwise() - dots).array()).matrix();
  } else {
    delta = upstream;
  }

  const auto& layers = net.layers();
  Gradients grads;
  grads.layers.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& a = pass.activations[l];
    grads.layers[l].weight = delta * a.transpose();
    grads.layers[l].bias = delta.rowwise().sum();
    Matrix upstream_a = layers[l].weight.transpose() * delta;
    if (l == 0) {
      grads.input = std::move(upstream_a);
    } else {
      delta = (upstream_a.array() * (a.array() > 0.0).cast<double>()).matrix();
    }
  }
  return grads;
}

inline Gradients backward(const DenseNet& net, const Vector& input, const Vector& upstream) {
  return backward(net, net.forward_pass(Matrix(input)), Matrix(upstream));
}

// Adaptive moment estimation with bias correction.
struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(const DenseNet& net, AdamConfig config = {}) : config_(config) {
    for (const auto& layer : net.layers()) {
      first_.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                        Vector::Zero(layer.bias.size())});
      second_.push_back(first_.back());
    }
  }

  std::size_t steps() const { return steps_; }

  void step(DenseNet& net, const Gradients& grads, double lr) {
    auto& layers = net.layers();
    if (grads.layers.size() != layers.size() || first_.size() != layers.size()) {
      throw ShapeError("gradient layout does not match the network");
    }
    ++steps_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weight, grads.layers[l].weight, first_[l].weight, second_[l].weight,
             lr, c1, c2);
      update(layers[l].bias, grads.layers[l].bias, first_[l].bias, second_[l].bias, lr, c1,
             c2);
    }
  }

 private:
  template <typename Param>
  void update(Param& param, const Param& grad, Param& m, Param& v, double lr, double c1,
              double c2) const {
    if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
      throw ShapeError("gradient shape does not match parameter shape");
    }
    m = config_.beta1 * m + (1.0 - config_.beta1) * grad;
    v = config_.beta2 * v + (1.0 - config_.beta2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.epsilon);
  }

  AdamConfig config_;
  std::vector<Layer> first_;
  std::vector<Layer> second_;
  std::size_t steps_ = 0;
};

// target <- (1 - tau) target + tau source
inline void soft_update(DenseNet& target, const DenseNet& source, double tau) {
  if (!target.congruent(source)) throw ShapeError("soft update between different topologies");
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("tau must lie in [0,1]");
  for (std::size_t l = 0; l < target.layers().size(); ++l) {
    auto& t = target.layers()[l];
    const auto& s = source.layers()[l];
    t.weight = (1.0 - tau) * t.weight + tau * s.weight;
    t.bias = (1.0 - tau) * t.bias + tau * s.bias;
  }
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON with a topology header and a row-major parameter payload.

inline constexpr std::string_view kCheckpointFormat = "traitfolio.densenet";
inline constexpr int kCheckpointVersion = 1;

inline std::string_view to_string(OutputHead head) {
  return head == OutputHead::Softmax ? "softmax" : "linear";
}

inline nlohmann::json to_json(const DenseNet& net) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) params.push_back(layer.weight(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) params.push_back(layer.bias(r));
  }
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"layer_sizes", net.sizes()},
          {"head", to_string(net.head())},
          {"seed", net.seed()},
          {"parameters", std::move(params)}};
}

inline DenseNet from_json(const nlohmann::json& doc,
                          const std::optional<std::vector<std::size_t>>& expected_sizes = {},
                          std::optional<OutputHead> expected_head = {}) {
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat) {
      throw ParseError("not a network checkpoint");
    }
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version " + doc.at("version").dump());
    }
    const auto sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
    const auto head_name = doc.at("head").get<std::string>();
    if (head_name != "softmax" && head_name != "linear") {
      throw ParseError("unknown output head '" + head_name + "'");
    }
    const OutputHead head = head_name == "softmax" ? OutputHead::Softmax : OutputHead::Linear;
    if (expected_sizes && *expected_sizes != sizes) {
      throw ShapeError("checkpoint topology does not match the expected layer sizes");
    }
    if (expected_head && *expected_head != head) {
      throw ShapeError("checkpoint head does not match the expected head");
    }
    DenseNet net(sizes, head, doc.at("seed").get<std::uint64_t>());
    const auto& params = doc.at("parameters");
    if (!params.is_array() || params.size() != net.parameter_count()) {
      throw ShapeError("checkpoint holds " + std::to_string(params.size()) +
                       " parameters, topology needs " + std::to_string(net.parameter_count()));
    }
    std::size_t i = 0;
    for (auto& layer : net.layers()) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
          layer.weight(r, c) = params[i++].get<double>();
        }
      }
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = params[i++].get<double>();
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const DenseNet& net, const std::filesystem::path& path) {
  io::write_file(path, to_json(net).dump() + "\n");
}

inline DenseNet load_checkpoint(const std::filesystem::path& path,
                                const std::optional<std::vector<std::size_t>>& expected_sizes = {},
                                std::optional<OutputHead> expected_head = {}) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    return from_json(doc, expected_sizes, expected_head);
  } catch (const Error& e) {
    if (e.category() == Error::Category::Config) {
      throw ParseError(path.string() + ": " + e.what());
    }
    throw;
  }
}

}  // namespace traitfolio::nn
