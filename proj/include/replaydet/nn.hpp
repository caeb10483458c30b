#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "replaydet/rng.hpp"

// Minimal single-sample feed-forward networks with hand-written backprop.
// Activations are flat vectors; convolutional layers use channel-major
// layout (index = channel * length + position).
namespace replaydet::nn {

enum class LayerKind : std::uint32_t {
  kLinear = 1,
  kConv1d = 2,
  kConvTranspose1d = 3,
  kRelu = 4,
  kLeakyRelu = 5,
};

struct Layer {
  LayerKind kind = LayerKind::kLinear;
  int in_channels = 1;
  int in_length = 0;
  int out_channels = 1;
  int out_length = 0;
  int kernel = 4;
  int stride = 2;
  int padding = 1;
  double slope = 0.0;  // leaky ReLU negative slope
  std::size_t param_offset = 0;
  std::size_t param_count = 0;

  int in_size() const { return in_channels * in_length; }
  int out_size() const { return out_channels * out_length; }
};

class Sequential {
 public:
  // Per-call record of every layer input plus the final output.
  struct Trace {
    std::vector<std::vector<double>> activations;
  };

  Sequential() = default;
  explicit Sequential(int input_size) : input_size_(input_size) {}

  Sequential& linear(int out_features);
  // Kernel 4, stride 2, padding 1: length halves.
  Sequential& conv1d(int out_channels);
  // Kernel 4, stride 2, padding 1: length doubles.
  Sequential& conv_transpose1d(int out_channels);
  // Reinterprets the current flat output as channels x length.
  Sequential& reshape(int channels);
  Sequential& relu();
  Sequential& leaky_relu(double slope = 0.2);

  int input_size() const { return input_size_; }
  int output_size() const;
  std::size_t num_params() const { return params_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init(Rng& rng);

  std::vector<double> forward(std::span<const double> x,
                              Trace* trace = nullptr) const;

  // Adds dLoss/dparams to `param_grad` (skipped when empty) and returns
  // dLoss/dinput.
  std::vector<double> backward(const Trace& trace,
                               std::span<const double> grad_out,
                               std::span<double> param_grad) const;

  void write(std::ostream& out) const;
  static Sequential read(std::istream& in);

 private:
  int current_channels() const;
  int current_length() const;
  Layer& push(Layer layer);

  int input_size_ = 0;
  int reshape_channels_ = 1;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

class Adam {
 public:
  Adam(std::size_t num_params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

double softplus(double x);
double sigmoid(double x);

}  // namespace replaydet::nn
