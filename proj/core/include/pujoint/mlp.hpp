#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "pujoint/matrix.hpp"

namespace pujoint {

enum class Activation : std::uint32_t { relu = 0, tanh = 1, softplus = 2 };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

// Logistic function, evaluated without overflow for large |z|.
double logistic(double z) noexcept;

// One affine layer. `weights` is (out x in).
struct Layer {
  Matrix weights;
  std::vector<double> biases;

  bool operator==(const Layer&) const = default;
};

// Feed-forward network R^d -> (0,1) with a single logistic output unit.
class MLPModel {
 public:
  MLPModel() = default;

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation for weights and biases.
  MLPModel(std::vector<std::size_t> layer_sizes, Activation hidden, std::uint64_t seed);

  static MLPModel zeros(std::vector<std::size_t> layer_sizes, Activation hidden);

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t input_dim() const noexcept { return sizes_.front(); }
  Activation hidden_activation() const noexcept { return hidden_; }
  std::size_t parameter_count() const noexcept;

  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  bool operator==(const MLPModel&) const = default;

 private:
  MLPModel(std::vector<std::size_t> layer_sizes, Activation hidden);

  std::vector<std::size_t> sizes_;
  Activation hidden_ = Activation::relu;
  std::vector<Layer> layers_;
};

// Per-parameter gradients with exactly the shapes of the owning model.
struct Gradient {
  std::vector<Layer> layers;

  static Gradient zeros_like(const MLPModel& model);
  bool all_finite() const noexcept;
  bool matches(const MLPModel& model) const noexcept;
};

// Activations retained from a forward pass for reuse by backward().
class ForwardPass {
 public:
  std::span<const double> output() const noexcept { return output_; }
  std::size_t batch_size() const noexcept { return output_.size(); }

 private:
  friend ForwardPass forward_pass(const MLPModel&, const Matrix&);
  friend Gradient backward(const MLPModel&, const ForwardPass&, std::span<const double>);

  std::vector<Matrix> inputs_;       // input to each layer
  std::vector<Matrix> preacts_;      // hidden pre-activations
  std::vector<double> output_;       // logistic outputs
};

ForwardPass forward_pass(const MLPModel& model, const Matrix& batch);

// One probability per row of `batch`.
std::vector<double> forward(const MLPModel& model, const Matrix& batch);

// Gradient of sum_n L_n w.r.t. every parameter, given upstream[n] = dL/dsigma_n.
Gradient backward(const MLPModel& model, const ForwardPass& pass, std::span<const double> upstream);
Gradient backward(const MLPModel& model, const Matrix& batch, std::span<const double> upstream);

// Binary checkpoint: magic, format version, activation, layer sizes, then raw
// little-endian IEEE-754 parameters. Round-trips bit-exactly.
void write_checkpoint(const MLPModel& model, std::ostream& out);
MLPModel read_checkpoint(std::istream& in);
void save_checkpoint(const MLPModel& model, const std::filesystem::path& path);
MLPModel load_checkpoint(const std::filesystem::path& path);

}  // namespace pujoint
