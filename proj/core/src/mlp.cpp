#include "pujoint/mlp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "pujoint/errors.hpp"
#include "pujoint/random.hpp"

namespace pujoint {

namespace {

constexpr std::array<char, 8> kCheckpointMagic = {'P', 'U', 'J', 'M', 'L', 'P', '\0', '\n'};
constexpr std::uint32_t kCheckpointVersion = 1;

double activate(Activation a, double z) noexcept {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::softplus: return z > 30.0 ? z : std::log1p(std::exp(z));
  }
  return z;
}

double activate_derivative(Activation a, double z) noexcept {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::softplus: return logistic(z);
  }
  return 1.0;
}

void check_sizes(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) throw ArgumentError("MLP needs at least an input and an output layer");
  if (sizes.back() != 1) throw ArgumentError("MLP output layer width must be 1");
  for (std::size_t s : sizes) {
    if (s == 0) throw ArgumentError("MLP layer widths must be positive");
  }
}

// Little-endian encoding independent of host byte order.
void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw FormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::softplus: return "softplus";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "softplus") return Activation::softplus;
  throw ArgumentError("unknown activation '" + std::string(name) + "'");
}

double logistic(double z) noexcept {
  // kept strictly inside (0,1) even where the exact value rounds to 0 or 1
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  if (z >= 0.0) return std::min(1.0 / (1.0 + std::exp(-z)), hi);
  const double e = std::exp(z);
  return std::max(e / (1.0 + e), lo);
}

MLPModel::MLPModel(std::vector<std::size_t> layer_sizes, Activation hidden)
    : sizes_(std::move(layer_sizes)), hidden_(hidden) {
  check_sizes(sizes_);
  layers_.reserve(sizes_.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    layers_.push_back(Layer{Matrix(sizes_[l + 1], sizes_[l]), std::vector<double>(sizes_[l + 1])});
  }
}

MLPModel::MLPModel(std::vector<std::size_t> layer_sizes, Activation hidden, std::uint64_t seed)
    : MLPModel(std::move(layer_sizes), hidden) {
  Rng rng(derive_seed(seed, "mlp-init"));
  for (auto& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weights.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : layer.weights.values()) w = dist(rng);
    for (double& b : layer.biases) b = dist(rng);
  }
}

MLPModel MLPModel::zeros(std::vector<std::size_t> layer_sizes, Activation hidden) {
  return MLPModel(std::move(layer_sizes), hidden);
}

std::size_t MLPModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.biases.size();
  return n;
}

Gradient Gradient::zeros_like(const MLPModel& model) {
  Gradient g;
  g.layers.reserve(model.layers().size());
  for (const auto& layer : model.layers()) {
    g.layers.push_back(Layer{Matrix(layer.weights.rows(), layer.weights.cols()),
                             std::vector<double>(layer.biases.size())});
  }
  return g;
}

bool Gradient::all_finite() const noexcept {
  for (const auto& layer : layers) {
    if (!layer.weights.all_finite()) return false;
    for (double b : layer.biases) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

bool Gradient::matches(const MLPModel& model) const noexcept {
  if (layers.size() != model.layers().size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& a = layers[l];
    const auto& b = model.layers()[l];
    if (a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols() ||
        a.biases.size() != b.biases.size()) {
      return false;
    }
  }
  return true;
}

ForwardPass forward_pass(const MLPModel& model, const Matrix& batch) {
  if (batch.cols() != model.input_dim()) {
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                     " columns, model expects " + std::to_string(model.input_dim()));
  }
  const auto& layers = model.layers();
  const std::size_t n = batch.rows();

  ForwardPass pass;
  pass.inputs_.reserve(layers.size());
  pass.preacts_.reserve(layers.size() - 1);
  pass.inputs_.push_back(batch);

  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    const Matrix& in = pass.inputs_.back();
    const std::size_t width = layer.weights.rows();
    const std::size_t fan_in = layer.weights.cols();
    // (in x out) copy so the inner loop runs over contiguous output units.
    Matrix wt(fan_in, width);
    for (std::size_t o = 0; o < width; ++o) {
      for (std::size_t i = 0; i < fan_in; ++i) wt(i, o) = layer.weights(o, i);
    }
    Matrix z(n, width);
    for (std::size_t s = 0; s < n; ++s) {
      auto x = in.row(s);
      auto zs = z.row(s);
      std::copy(layer.biases.begin(), layer.biases.end(), zs.begin());
      for (std::size_t i = 0; i < fan_in; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        auto w = wt.row(i);
        for (std::size_t o = 0; o < width; ++o) zs[o] += xi * w[o];
      }
    }
    if (l + 1 == layers.size()) {
      pass.output_.resize(n);
      for (std::size_t s = 0; s < n; ++s) pass.output_[s] = logistic(z(s, 0));
    } else {
      Matrix a(n, width);
      auto zv = z.values();
      auto av = a.values();
      for (std::size_t k = 0; k < zv.size(); ++k) av[k] = activate(model.hidden_activation(), zv[k]);
      pass.preacts_.push_back(std::move(z));
      pass.inputs_.push_back(std::move(a));
    }
  }
  return pass;
}

std::vector<double> forward(const MLPModel& model, const Matrix& batch) {
  auto pass = forward_pass(model, batch);
  return {pass.output().begin(), pass.output().end()};
}

Gradient backward(const MLPModel& model, const ForwardPass& pass, std::span<const double> upstream) {
  if (upstream.size() != pass.batch_size()) {
    throw ShapeError("backward: upstream length " + std::to_string(upstream.size()) +
                     " != batch rows " + std::to_string(pass.batch_size()));
  }
  const auto& layers = model.layers();
  if (pass.inputs_.size() != layers.size()) throw ShapeError("backward: pass/model mismatch");

  const std::size_t n = upstream.size();
  Gradient grad = Gradient::zeros_like(model);

  // dL/dz at the output unit.
  Matrix delta(n, 1);
  for (std::size_t s = 0; s < n; ++s) {
    const double p = pass.output_[s];
    delta(s, 0) = upstream[s] * p * (1.0 - p);
  }

  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& layer = layers[l];
    Layer& g = grad.layers[l];
    const Matrix& in = pass.inputs_[l];
    const std::size_t width = layer.weights.rows();
    const std::size_t fan_in = layer.weights.cols();

    for (std::size_t s = 0; s < n; ++s) {
      auto x = in.row(s);
      auto d = delta.row(s);
      for (std::size_t o = 0; o < width; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        auto gw = g.weights.row(o);
        for (std::size_t i = 0; i < fan_in; ++i) gw[i] += dv * x[i];
        g.biases[o] += dv;
      }
    }
    if (l == 0) break;

    const Matrix& z = pass.preacts_[l - 1];
    Matrix prev(n, fan_in);
    for (std::size_t s = 0; s < n; ++s) {
      auto d = delta.row(s);
      auto ps = prev.row(s);
      for (std::size_t o = 0; o < width; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        auto w = layer.weights.row(o);
        for (std::size_t i = 0; i < fan_in; ++i) ps[i] += dv * w[i];
      }
      auto zs = z.row(s);
      for (std::size_t i = 0; i < fan_in; ++i) {
        ps[i] *= activate_derivative(model.hidden_activation(), zs[i]);
      }
    }
    delta = std::move(prev);
  }
  return grad;
}

Gradient backward(const MLPModel& model, const Matrix& batch, std::span<const double> upstream) {
  return backward(model, forward_pass(model, batch), upstream);
}

void write_checkpoint(const MLPModel& model, std::ostream& out) {
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  put_u64(out, kCheckpointVersion);
  put_u64(out, static_cast<std::uint64_t>(model.hidden_activation()));
  put_u64(out, model.layer_sizes().size());
  for (std::size_t s : model.layer_sizes()) put_u64(out, s);
  for (const auto& layer : model.layers()) {
    for (double w : layer.weights.values()) put_f64(out, w);
    for (double b : layer.biases) put_f64(out, b);
  }
  if (!out) throw std::runtime_error("checkpoint write failed");
}

MLPModel read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kCheckpointMagic) throw FormatError("not a pujoint checkpoint (bad magic)");
  const auto version = get_u64(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto act = get_u64(in);
  if (act > static_cast<std::uint64_t>(Activation::softplus)) {
    throw FormatError("checkpoint has unknown activation code " + std::to_string(act));
  }
  const auto count = get_u64(in);
  if (count < 2 || count > 64) throw FormatError("checkpoint has implausible layer count");
  std::vector<std::size_t> sizes(count);
  for (auto& s : sizes) {
    s = get_u64(in);
    if (s == 0 || s > (1u << 24)) throw FormatError("checkpoint has implausible layer width");
  }
  if (sizes.back() != 1) throw FormatError("checkpoint output width is not 1");

  MLPModel model = MLPModel::zeros(sizes, static_cast<Activation>(act));
  for (auto& layer : model.layers()) {
    for (double& w : layer.weights.values()) w = get_f64(in);
    for (double& b : layer.biases) b = get_f64(in);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint has trailing bytes");
  return model;
}

void save_checkpoint(const MLPModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(model, out);
}

MLPModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace pujoint
