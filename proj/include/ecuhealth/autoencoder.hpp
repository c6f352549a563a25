#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecuhealth/domain.hpp"
#include "ecuhealth/error.hpp"
#include "ecuhealth/matrix.hpp"
#include "ecuhealth/metrics.hpp"
#include "ecuhealth/random.hpp"

namespace ecuhealth {

inline constexpr std::size_t kBottleneckWidth = 12;

enum class Activation { tanh, identity };

inline std::string_view to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

inline Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw Error(Errc::parse_error, "unknown activation '" + std::string(s) + "'");
}

/// Fully connected layer; weights are row-major (outputs x inputs).
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> biases;
  Activation activation = Activation::identity;

  double weight(std::size_t out, std::size_t in) const { return weights[out * inputs + in]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct AutoencoderModel {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().inputs; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().outputs; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.biases.size();
    return n;
  }

  /// Checks layer chaining, buffer sizes and finiteness of every parameter.
  void validate() const {
    if (layers.empty()) throw Error(Errc::invalid_argument, "autoencoder has no layers");
    if (input_dim() != output_dim()) {
      throw Error(Errc::dimension_mismatch, "autoencoder input and output widths differ");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.weights.size() != l.inputs * l.outputs || l.biases.size() != l.outputs) {
        throw Error(Errc::dimension_mismatch, "layer " + std::to_string(i) + " buffers do not match its shape");
      }
      if (i > 0 && layers[i - 1].outputs != l.inputs) {
        throw Error(Errc::dimension_mismatch, "layer " + std::to_string(i) + " does not chain");
      }
      for (double w : l.weights) {
        if (!std::isfinite(w)) throw Error(Errc::invalid_argument, "non-finite weight");
      }
      for (double b : l.biases) {
        if (!std::isfinite(b)) throw Error(Errc::invalid_argument, "non-finite bias");
      }
    }
  }

  friend bool operator==(const AutoencoderModel&, const AutoencoderModel&) = default;
};

/// Builds a network with the given layer widths: tanh on hidden layers,
/// identity on the output. Weights are drawn uniformly from
/// +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
inline AutoencoderModel make_network(std::span<const std::size_t> widths, std::uint64_t seed) {
  if (widths.size() < 2) throw Error(Errc::invalid_argument, "a network needs at least two widths");
  Rng rng(derive_seed(seed, 0xAE1));
  AutoencoderModel model;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    DenseLayer layer;
    layer.inputs = widths[i];
    layer.outputs = widths[i + 1];
    layer.activation = (i + 2 == widths.size()) ? Activation::identity : Activation::tanh;
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
    layer.weights.resize(layer.inputs * layer.outputs);
    for (auto& w : layer.weights) w = rng.uniform(-limit, limit);
    layer.biases.assign(layer.outputs, 0.0);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

/// The 20 -> 12 -> 20 reconstruction network.
inline AutoencoderModel init_model(std::uint64_t seed) {
  const std::size_t widths[] = {kSensorCount, kBottleneckWidth, kSensorCount};
  return make_network(widths, seed);
}

namespace detail {

inline double activate(Activation a, double z) { return a == Activation::tanh ? std::tanh(z) : z; }

/// d(activation)/dz expressed through the activation output.
inline double activation_slope(Activation a, double out) {
  return a == Activation::tanh ? 1.0 - out * out : 1.0;
}

/// Per-layer activations of one forward pass; acts[0] is the input.
struct Tape {
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> deltas;

  explicit Tape(const AutoencoderModel& model) {
    acts.resize(model.layers.size() + 1);
    deltas.resize(model.layers.size());
    acts[0].resize(model.input_dim());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      acts[l + 1].resize(model.layers[l].outputs);
      deltas[l].resize(model.layers[l].outputs);
    }
  }
};

inline void run_forward(const AutoencoderModel& model, std::span<const double> x, Tape& tape) {
  std::copy(x.begin(), x.end(), tape.acts[0].begin());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    const auto& in = tape.acts[l];
    auto& out = tape.acts[l + 1];
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double* w = layer.weights.data() + o * layer.inputs;
      double z = layer.biases[o];
      for (std::size_t i = 0; i < layer.inputs; ++i) z += w[i] * in[i];
      out[o] = activate(layer.activation, z);
    }
  }
}

inline void check_input(const AutoencoderModel& model, std::size_t width) {
  if (width != model.input_dim()) {
    throw Error(Errc::dimension_mismatch, "frame has " + std::to_string(width) +
                                              " values, model expects " +
                                              std::to_string(model.input_dim()));
  }
}

}  // namespace detail

inline std::vector<double> forward(const AutoencoderModel& model, std::span<const double> frame) {
  detail::check_input(model, frame.size());
  detail::Tape tape(model);
  detail::run_forward(model, frame, tape);
  return tape.acts.back();
}

inline Matrix reconstruct(const AutoencoderModel& model, const Matrix& data) {
  detail::check_input(model, data.cols());
  detail::Tape tape(model);
  Matrix out(data.rows(), model.output_dim());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    detail::run_forward(model, data.row(r), tape);
    std::copy(tape.acts.back().begin(), tape.acts.back().end(), out.row(r).begin());
  }
  return out;
}

/// Mean squared reconstruction error over every sensor of every frame.
inline double loss(const AutoencoderModel& model, const Matrix& batch) {
  if (batch.empty()) throw Error(Errc::empty_batch, "loss of an empty batch");
  detail::check_input(model, batch.cols());
  detail::Tape tape(model);
  double sum = 0.0;
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    const auto x = batch.row(r);
    detail::run_forward(model, x, tape);
    const auto& y = tape.acts.back();
    for (std::size_t s = 0; s < y.size(); ++s) {
      const double e = y[s] - x[s];
      sum += e * e;
    }
  }
  return sum / static_cast<double>(batch.rows() * batch.cols());
}

struct LayerGradient {
  std::vector<double> weights;
  std::vector<double> biases;
};

/// Parameter gradients laid out exactly like the model's layers.
struct Gradient {
  std::vector<LayerGradient> layers;

  static Gradient zeros_like(const AutoencoderModel& model) {
    Gradient g;
    for (const auto& l : model.layers) {
      g.layers.push_back({std::vector<double>(l.weights.size(), 0.0),
                          std::vector<double>(l.biases.size(), 0.0)});
    }
    return g;
  }
};

namespace detail {

/// Adds the gradient of loss over rows[...] (normalized by `denominator`)
/// into `grad`, by backpropagation through the tape.
inline void accumulate_gradient(const AutoencoderModel& model, const Matrix& data,
                                std::span<const std::size_t> rows, double denominator,
                                Tape& tape, Gradient& grad) {
  const std::size_t n_layers = model.layers.size();
  for (auto r : rows) {
    const auto x = data.row(r);
    run_forward(model, x, tape);
    {
      const auto& out = tape.acts[n_layers];
      auto& delta = tape.deltas[n_layers - 1];
      const auto act = model.layers[n_layers - 1].activation;
      for (std::size_t s = 0; s < out.size(); ++s) {
        delta[s] = 2.0 * (out[s] - x[s]) / denominator * activation_slope(act, out[s]);
      }
    }
    for (std::size_t l = n_layers; l-- > 0;) {
      const auto& layer = model.layers[l];
      const auto& in = tape.acts[l];
      const auto& delta = tape.deltas[l];
      auto& gw = grad.layers[l].weights;
      auto& gb = grad.layers[l].biases;
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double d = delta[o];
        gb[o] += d;
        double* row = gw.data() + o * layer.inputs;
        for (std::size_t i = 0; i < layer.inputs; ++i) row[i] += d * in[i];
      }
      if (l == 0) break;
      auto& prev = tape.deltas[l - 1];
      const auto prev_act = model.layers[l - 1].activation;
      for (std::size_t i = 0; i < layer.inputs; ++i) {
        double sum = 0.0;
        for (std::size_t o = 0; o < layer.outputs; ++o) sum += layer.weights[o * layer.inputs + i] * delta[o];
        prev[i] = sum * activation_slope(prev_act, in[i]);
      }
    }
  }
}

}  // namespace detail

/// Exact gradient of loss(model, batch) with respect to every parameter.
inline Gradient gradient(const AutoencoderModel& model, const Matrix& batch) {
  if (batch.empty()) throw Error(Errc::empty_batch, "gradient of an empty batch");
  detail::check_input(model, batch.cols());
  std::vector<std::size_t> rows(batch.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  auto grad = Gradient::zeros_like(model);
  detail::Tape tape(model);
  detail::accumulate_gradient(model, batch, rows,
                              static_cast<double>(batch.rows() * model.output_dim()), tape, grad);
  return grad;
}

struct TrainConfig {
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::size_t early_stop_patience = 25;

  void validate() const {
    if (epochs < 1 || batch_size < 1 || early_stop_patience < 1) {
      throw Error(Errc::invalid_argument, "train config counts must be at least 1");
    }
    if (!std::isfinite(learning_rate) || !(learning_rate > 0.0)) {
      throw Error(Errc::invalid_argument, "learning rate must be finite and positive");
    }
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochLoss {
  double train_loss = 0.0;
  double validation_loss = 0.0;

  friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

struct TrainTrace {
  double initial_train_loss = 0.0;
  double initial_validation_loss = 0.0;
  std::vector<EpochLoss> epochs;
  /// Index into epochs of the returned checkpoint; empty when no epoch beat
  /// the initial parameters.
  std::optional<std::size_t> best_epoch;

  double best_validation_loss() const {
    return best_epoch ? epochs[*best_epoch].validation_loss : initial_validation_loss;
  }

  friend bool operator==(const TrainTrace&, const TrainTrace&) = default;
};

struct TrainResult {
  AutoencoderModel model;
  TrainTrace trace;
};

/// Mini-batch Adam on the reconstruction loss. Returns the parameters with
/// the lowest validation loss; stops after `early_stop_patience` epochs
/// without improvement. Batch order is drawn from the config seed.
inline TrainResult train(AutoencoderModel model, const Matrix& train_data,
                         const Matrix& validation_data, const TrainConfig& config) {
  config.validate();
  model.validate();
  if (train_data.empty()) throw Error(Errc::empty_dataset, "no training frames");
  if (validation_data.empty()) throw Error(Errc::empty_dataset, "no validation frames");
  detail::check_input(model, train_data.cols());
  detail::check_input(model, validation_data.cols());

  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;

  auto check_finite = [](double v, std::size_t epoch) {
    if (!std::isfinite(v)) {
      throw Error(Errc::diverged_loss, "loss became non-finite at epoch " + std::to_string(epoch));
    }
  };

  TrainResult result{model, {}};
  result.trace.initial_train_loss = loss(model, train_data);
  result.trace.initial_validation_loss = loss(model, validation_data);
  check_finite(result.trace.initial_train_loss, 0);
  check_finite(result.trace.initial_validation_loss, 0);
  double best = result.trace.initial_validation_loss;

  auto m = Gradient::zeros_like(model);
  auto v = Gradient::zeros_like(model);
  auto grad = Gradient::zeros_like(model);
  detail::Tape tape(model);
  Rng rng(derive_seed(config.seed, 0xBA7C));
  std::vector<std::size_t> order(train_data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t step = 0;
  std::size_t since_improvement = 0;
  const double width = static_cast<double>(model.output_dim());

  auto adam_update = [&](std::vector<double>& param, const std::vector<double>& g,
                         std::vector<double>& m1, std::vector<double>& m2, double lr_t) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      m1[i] = beta1 * m1[i] + (1.0 - beta1) * g[i];
      m2[i] = beta2 * m2[i] + (1.0 - beta2) * g[i] * g[i];
      param[i] -= lr_t * m1[i] / (std::sqrt(m2[i]) + eps);
    }
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      for (auto& lg : grad.layers) {
        std::fill(lg.weights.begin(), lg.weights.end(), 0.0);
        std::fill(lg.biases.begin(), lg.biases.end(), 0.0);
      }
      detail::accumulate_gradient(model, train_data, rows, static_cast<double>(rows.size()) * width,
                                  tape, grad);
      ++step;
      const double t = static_cast<double>(step);
      const double lr_t = config.learning_rate * std::sqrt(1.0 - std::pow(beta2, t)) /
                          (1.0 - std::pow(beta1, t));
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        adam_update(model.layers[l].weights, grad.layers[l].weights, m.layers[l].weights,
                    v.layers[l].weights, lr_t);
        adam_update(model.layers[l].biases, grad.layers[l].biases, m.layers[l].biases,
                    v.layers[l].biases, lr_t);
      }
    }
    const EpochLoss el{loss(model, train_data), loss(model, validation_data)};
    check_finite(el.train_loss, epoch + 1);
    check_finite(el.validation_loss, epoch + 1);
    result.trace.epochs.push_back(el);
    if (el.validation_loss < best) {
      best = el.validation_loss;
      result.model = model;
      result.trace.best_epoch = result.trace.epochs.size() - 1;
      since_improvement = 0;
    } else if (++since_improvement >= config.early_stop_patience) {
      break;
    }
  }
  return result;
}

/// Per-sensor R^2 of the reconstruction. Entries are empty for sensors whose
/// values are constant over the dataset (R^2 undefined there).
inline std::vector<std::optional<double>> reconstruction_r2(const AutoencoderModel& model,
                                                           const Matrix& data) {
  if (data.empty()) throw Error(Errc::empty_dataset, "R^2 of no frames");
  const Matrix recon = reconstruct(model, data);
  std::vector<std::optional<double>> out(data.cols());
  for (std::size_t s = 0; s < data.cols(); ++s) {
    const auto y = data.column(s);
    const auto yhat = recon.column(s);
    try {
      out[s] = r_squared(y, yhat);
    } catch (const Error& e) {
      if (e.code() != Errc::constant_target) throw;
    }
  }
  return out;
}

}  // namespace ecuhealth
