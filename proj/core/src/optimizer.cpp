#include "pujoint/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "pujoint/errors.hpp"

namespace pujoint {

namespace {

struct Moments {
  double beta1, beta2, eps, step, bias1, bias2;

  void apply(std::span<double> theta, std::span<const double> g, std::span<double> m,
             std::span<double> v, std::span<double> v_max) const {
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
      v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
      v_max[k] = std::max(v_max[k], v[k]);
      const double denom = std::sqrt(v_max[k] / bias2) + eps;
      theta[k] -= step * (m[k] / bias1) / denom;
    }
  }
};

}  // namespace

AmsGrad::AmsGrad(const MLPModel& model, AmsGradConfig config)
    : config_(config),
      m_(Gradient::zeros_like(model)),
      v_(Gradient::zeros_like(model)),
      v_max_(Gradient::zeros_like(model)) {
  if (!(config.step_size > 0.0)) throw ArgumentError("AMSGrad step size must be positive");
  if (!(config.beta1 > 0.0 && config.beta1 < 1.0) || !(config.beta2 > 0.0 && config.beta2 < 1.0)) {
    throw ArgumentError("AMSGrad decay rates must lie in (0,1)");
  }
  if (!(config.epsilon > 0.0)) throw ArgumentError("AMSGrad epsilon must be positive");
}

void AmsGrad::step(MLPModel& model, const Gradient& grad) {
  if (!grad.matches(model) || !m_.matches(model)) throw ShapeError("AMSGrad: gradient/model shape mismatch");
  if (!grad.all_finite()) throw NumericError("AMSGrad: non-finite gradient entry");

  ++steps_;
  const double t = static_cast<double>(steps_);
  const Moments rule{config_.beta1,
                     config_.beta2,
                     config_.epsilon,
                     config_.step_size,
                     1.0 - std::pow(config_.beta1, t),
                     1.0 - std::pow(config_.beta2, t)};

  auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    rule.apply(layers[l].weights.values(), grad.layers[l].weights.values(), m_.layers[l].weights.values(),
               v_.layers[l].weights.values(), v_max_.layers[l].weights.values());
    rule.apply(layers[l].biases, grad.layers[l].biases, m_.layers[l].biases, v_.layers[l].biases,
               v_max_.layers[l].biases);
  }
}

}  // namespace pujoint
