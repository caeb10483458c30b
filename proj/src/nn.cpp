#include "replaydet/nn.hpp"

#include <cmath>

#include "replaydet/binary_io.hpp"
#include "replaydet/error.hpp"

namespace replaydet::nn {
namespace {

constexpr std::uint32_t kNetworkTag = 0x4E455431;  // "NET1"

}  // namespace

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

int Sequential::output_size() const {
  return layers_.empty() ? input_size_ : layers_.back().out_size();
}

int Sequential::current_channels() const {
  return reshape_channels_;
}

int Sequential::current_length() const {
  return output_size() / reshape_channels_;
}

Layer& Sequential::push(Layer layer) {
  layer.param_offset = params_.size();
  params_.resize(params_.size() + layer.param_count, 0.0);
  layers_.push_back(layer);
  return layers_.back();
}

Sequential& Sequential::linear(int out_features) {
  require(out_features > 0, "linear layer needs a positive width");
  Layer l;
  l.kind = LayerKind::kLinear;
  l.in_channels = 1;
  l.in_length = output_size();
  l.out_channels = 1;
  l.out_length = out_features;
  l.param_count = static_cast<std::size_t>(out_features) * (l.in_length + 1);
  push(l);
  reshape_channels_ = 1;
  return *this;
}

Sequential& Sequential::reshape(int channels) {
  require(channels > 0 && output_size() % channels == 0,
          "reshape must divide the current size");
  reshape_channels_ = channels;
  return *this;
}

Sequential& Sequential::conv1d(int out_channels) {
  Layer l;
  l.kind = LayerKind::kConv1d;
  l.in_channels = current_channels();
  l.in_length = current_length();
  l.out_channels = out_channels;
  l.out_length = (l.in_length + 2 * l.padding - l.kernel) / l.stride + 1;
  require(l.out_length >= 1, "convolution input too short");
  l.param_count = static_cast<std::size_t>(out_channels) *
                  (static_cast<std::size_t>(l.in_channels) * l.kernel + 1);
  push(l);
  reshape_channels_ = out_channels;
  return *this;
}

Sequential& Sequential::conv_transpose1d(int out_channels) {
  Layer l;
  l.kind = LayerKind::kConvTranspose1d;
  l.in_channels = current_channels();
  l.in_length = current_length();
  l.out_channels = out_channels;
  l.out_length = (l.in_length - 1) * l.stride - 2 * l.padding + l.kernel;
  l.param_count = static_cast<std::size_t>(l.in_channels) * out_channels * l.kernel +
                  static_cast<std::size_t>(out_channels);
  push(l);
  reshape_channels_ = out_channels;
  return *this;
}

Sequential& Sequential::relu() {
  Layer l;
  l.kind = LayerKind::kRelu;
  l.in_channels = l.out_channels = current_channels();
  l.in_length = l.out_length = current_length();
  push(l);
  return *this;
}

Sequential& Sequential::leaky_relu(double slope) {
  Layer l;
  l.kind = LayerKind::kLeakyRelu;
  l.in_channels = l.out_channels = current_channels();
  l.in_length = l.out_length = current_length();
  l.slope = slope;
  push(l);
  return *this;
}

void Sequential::init(Rng& rng) {
  for (const Layer& l : layers_) {
    if (l.param_count == 0) continue;
    double fan_in = 1.0;
    switch (l.kind) {
      case LayerKind::kLinear: fan_in = l.in_length; break;
      case LayerKind::kConv1d: fan_in = l.in_channels * l.kernel; break;
      case LayerKind::kConvTranspose1d: fan_in = l.out_channels * l.kernel; break;
      default: break;
    }
    const double bound = 1.0 / std::sqrt(fan_in);
    for (std::size_t i = 0; i < l.param_count; ++i)
      params_[l.param_offset + i] = rng.uniform(-bound, bound);
  }
}

std::vector<double> Sequential::forward(std::span<const double> x,
                                        Trace* trace) const {
  require(static_cast<int>(x.size()) == input_size_,
          "network input size mismatch");
  std::vector<double> cur(x.begin(), x.end());
  if (trace) {
    trace->activations.clear();
    trace->activations.reserve(layers_.size() + 1);
  }
  for (const Layer& l : layers_) {
    if (trace) trace->activations.push_back(cur);
    const double* p = params_.data() + l.param_offset;
    std::vector<double> out(static_cast<std::size_t>(l.out_size()), 0.0);
    switch (l.kind) {
      case LayerKind::kLinear: {
        const int in = l.in_length, n_out = l.out_length;
        const double* bias = p + static_cast<std::size_t>(n_out) * in;
        for (int o = 0; o < n_out; ++o) {
          const double* row = p + static_cast<std::size_t>(o) * in;
          double acc = bias[o];
          for (int i = 0; i < in; ++i) acc += row[i] * cur[static_cast<std::size_t>(i)];
          out[static_cast<std::size_t>(o)] = acc;
        }
        break;
      }
      case LayerKind::kConv1d: {
        const double* bias =
            p + static_cast<std::size_t>(l.out_channels) * l.in_channels * l.kernel;
        for (int o = 0; o < l.out_channels; ++o)
          for (int t = 0; t < l.out_length; ++t) {
            double acc = bias[o];
            for (int c = 0; c < l.in_channels; ++c) {
              const double* w = p + (static_cast<std::size_t>(o) * l.in_channels + c) * l.kernel;
              for (int k = 0; k < l.kernel; ++k) {
                const int idx = t * l.stride - l.padding + k;
                if (idx < 0 || idx >= l.in_length) continue;
                acc += w[k] * cur[static_cast<std::size_t>(c * l.in_length + idx)];
              }
            }
            out[static_cast<std::size_t>(o * l.out_length + t)] = acc;
          }
        break;
      }
      case LayerKind::kConvTranspose1d: {
        const double* bias =
            p + static_cast<std::size_t>(l.in_channels) * l.out_channels * l.kernel;
        for (int o = 0; o < l.out_channels; ++o)
          for (int t = 0; t < l.out_length; ++t)
            out[static_cast<std::size_t>(o * l.out_length + t)] = bias[o];
        for (int c = 0; c < l.in_channels; ++c)
          for (int t = 0; t < l.in_length; ++t) {
            const double v = cur[static_cast<std::size_t>(c * l.in_length + t)];
            for (int o = 0; o < l.out_channels; ++o) {
              const double* w = p + (static_cast<std::size_t>(c) * l.out_channels + o) * l.kernel;
              for (int k = 0; k < l.kernel; ++k) {
                const int idx = t * l.stride - l.padding + k;
                if (idx < 0 || idx >= l.out_length) continue;
                out[static_cast<std::size_t>(o * l.out_length + idx)] += w[k] * v;
              }
            }
          }
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = cur[i] > 0 ? cur[i] : 0.0;
        break;
      case LayerKind::kLeakyRelu:
        for (std::size_t i = 0; i < out.size(); ++i)
          out[i] = cur[i] > 0 ? cur[i] : l.slope * cur[i];
        break;
    }
    cur = std::move(out);
  }
  if (trace) trace->activations.push_back(cur);
  return cur;
}

std::vector<double> Sequential::backward(const Trace& trace,
                                         std::span<const double> grad_out,
                                         std::span<double> param_grad) const {
  require(trace.activations.size() == layers_.size() + 1,
          "trace does not match the network");
  require(static_cast<int>(grad_out.size()) == output_size(),
          "output gradient size mismatch");
  const bool want_params = !param_grad.empty();
  if (want_params)
    require(param_grad.size() == params_.size(), "parameter gradient size mismatch");

  std::vector<double> g(grad_out.begin(), grad_out.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& l = layers_[li];
    const std::vector<double>& x = trace.activations[li];
    const double* p = params_.data() + l.param_offset;
    double* gp = want_params ? param_grad.data() + l.param_offset : nullptr;
    std::vector<double> gx(static_cast<std::size_t>(l.in_size()), 0.0);
    switch (l.kind) {
      case LayerKind::kLinear: {
        const int in = l.in_length, n_out = l.out_length;
        for (int o = 0; o < n_out; ++o) {
          const double go = g[static_cast<std::size_t>(o)];
          if (go == 0.0) continue;
          const double* row = p + static_cast<std::size_t>(o) * in;
          for (int i = 0; i < in; ++i) gx[static_cast<std::size_t>(i)] += row[i] * go;
          if (gp) {
            double* grow = gp + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) grow[i] += go * x[static_cast<std::size_t>(i)];
            gp[static_cast<std::size_t>(n_out) * in + o] += go;
          }
        }
        break;
      }
      case LayerKind::kConv1d: {
        const std::size_t bias_at =
            static_cast<std::size_t>(l.out_channels) * l.in_channels * l.kernel;
        for (int o = 0; o < l.out_channels; ++o)
          for (int t = 0; t < l.out_length; ++t) {
            const double go = g[static_cast<std::size_t>(o * l.out_length + t)];
            if (go == 0.0) continue;
            if (gp) gp[bias_at + static_cast<std::size_t>(o)] += go;
            for (int c = 0; c < l.in_channels; ++c) {
              const std::size_t w_at = (static_cast<std::size_t>(o) * l.in_channels + c) * l.kernel;
              for (int k = 0; k < l.kernel; ++k) {
                const int idx = t * l.stride - l.padding + k;
                if (idx < 0 || idx >= l.in_length) continue;
                const auto xi = static_cast<std::size_t>(c * l.in_length + idx);
                gx[xi] += p[w_at + static_cast<std::size_t>(k)] * go;
                if (gp) gp[w_at + static_cast<std::size_t>(k)] += go * x[xi];
              }
            }
          }
        break;
      }
      case LayerKind::kConvTranspose1d: {
        const std::size_t bias_at =
            static_cast<std::size_t>(l.in_channels) * l.out_channels * l.kernel;
        if (gp)
          for (int o = 0; o < l.out_channels; ++o)
            for (int t = 0; t < l.out_length; ++t)
              gp[bias_at + static_cast<std::size_t>(o)] +=
                  g[static_cast<std::size_t>(o * l.out_length + t)];
        for (int c = 0; c < l.in_channels; ++c)
          for (int t = 0; t < l.in_length; ++t) {
            const auto xi = static_cast<std::size_t>(c * l.in_length + t);
            double acc = 0.0;
            for (int o = 0; o < l.out_channels; ++o) {
              const std::size_t w_at = (static_cast<std::size_t>(c) * l.out_channels + o) * l.kernel;
              for (int k = 0; k < l.kernel; ++k) {
                const int idx = t * l.stride - l.padding + k;
                if (idx < 0 || idx >= l.out_length) continue;
                const double go = g[static_cast<std::size_t>(o * l.out_length + idx)];
                acc += p[w_at + static_cast<std::size_t>(k)] * go;
                if (gp) gp[w_at + static_cast<std::size_t>(k)] += go * x[xi];
              }
            }
            gx[xi] = acc;
          }
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = x[i] > 0 ? g[i] : 0.0;
        break;
      case LayerKind::kLeakyRelu:
        for (std::size_t i = 0; i < gx.size(); ++i)
          gx[i] = x[i] > 0 ? g[i] : l.slope * g[i];
        break;
    }
    g = std::move(gx);
  }
  return g;
}

void Sequential::write(std::ostream& out) const {
  binary::write_u32(out, kNetworkTag);
  binary::write_u32(out, static_cast<std::uint32_t>(input_size_));
  binary::write_u32(out, static_cast<std::uint32_t>(layers_.size()));
  for (const Layer& l : layers_) {
    binary::write_u32(out, static_cast<std::uint32_t>(l.kind));
    binary::write_u32(out, static_cast<std::uint32_t>(l.in_channels));
    binary::write_u32(out, static_cast<std::uint32_t>(l.in_length));
    binary::write_u32(out, static_cast<std::uint32_t>(l.out_channels));
    binary::write_u32(out, static_cast<std::uint32_t>(l.out_length));
    binary::write_f64(out, l.slope);
  }
  binary::write_u64(out, params_.size());
  binary::write_f64_array(out, params_.data(), params_.size());
}

Sequential Sequential::read(std::istream& in) {
  binary::Reader r(in, ErrorCode::kCorruptModel);
  if (r.u32() != kNetworkTag) r.corrupt("bad network tag");
  Sequential net(static_cast<int>(r.u32()));
  const std::uint32_t count = r.u32();
  if (count > 1000) r.corrupt("implausible layer count");
  int expected_in = net.input_size_;
  for (std::uint32_t i = 0; i < count; ++i) {
    Layer l;
    l.kind = static_cast<LayerKind>(r.u32());
    l.in_channels = static_cast<int>(r.u32());
    l.in_length = static_cast<int>(r.u32());
    l.out_channels = static_cast<int>(r.u32());
    l.out_length = static_cast<int>(r.u32());
    l.slope = r.f64();
    if (l.in_size() != expected_in) r.corrupt("layer shapes do not chain");
    switch (l.kind) {
      case LayerKind::kLinear:
        l.param_count = static_cast<std::size_t>(l.out_length) * (l.in_length + 1);
        break;
      case LayerKind::kConv1d:
        l.param_count = static_cast<std::size_t>(l.out_channels) *
                        (static_cast<std::size_t>(l.in_channels) * l.kernel + 1);
        break;
      case LayerKind::kConvTranspose1d:
        l.param_count =
            static_cast<std::size_t>(l.in_channels) * l.out_channels * l.kernel +
            static_cast<std::size_t>(l.out_channels);
        break;
      case LayerKind::kRelu:
      case LayerKind::kLeakyRelu:
        l.param_count = 0;
        break;
      default:
        r.corrupt("unknown layer kind");
    }
    expected_in = l.out_size();
    net.push(l);
  }
  net.reshape_channels_ = net.layers_.empty() ? 1 : net.layers_.back().out_channels;
  const std::uint64_t n = r.u64();
  if (n != net.params_.size()) r.corrupt("parameter count mismatch");
  r.bytes(net.params_.data(), n * sizeof(double));
  return net;
}

Adam::Adam(std::size_t num_params, double lr, double beta1, double beta2,
           double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(num_params, 0.0), v_(num_params, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  require(params.size() == m_.size() && grads.size() == m_.size(),
          "optimizer size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace replaydet::nn
