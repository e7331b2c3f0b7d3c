#pragma once

// Reference computations used only by the tests. Nothing here calls into the
// library's loss or gradient code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include <pujoint/mlp.hpp>

namespace oracle {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// KL([y,1-y] || [s,1-s]) straight from the definition.
inline double kl(double y, double s) {
  double out = 0.0;
  if (y > 0.0) out += y * std::log(y / s);
  if (y < 1.0) out += (1.0 - y) * std::log((1.0 - y) / (1.0 - s));
  return out;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Error of the Bayes rule for two unit-covariance Gaussians at +-m*(1,..,1) in
// `dim` dimensions with positive prior `prior`. Only the projection onto the
// mean difference matters; the 1-d integral of min(pi f+, (1-pi) f-) is taken
// with composite Simpson on [-L, L].
inline double gaussian_bayes_error(double m, std::size_t dim, double prior) {
  const double mu = m * std::sqrt(static_cast<double>(dim));
  auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
  auto f = [&](double t) { return std::min(prior * phi(t - mu), (1.0 - prior) * phi(t + mu)); };
  const double lo = -mu - 12.0, hi = mu + 12.0;
  const int n = 200000;
  const double h = (hi - lo) / n;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Visits every scalar parameter of a model in a fixed order.
template <class Fn>
void for_each_parameter(pujoint::MLPModel& model, Fn&& fn) {
  for (auto& layer : model.layers()) {
    for (double& w : layer.weights.values()) fn(w);
    for (double& b : layer.biases) fn(b);
  }
}

inline std::vector<double> flatten(const pujoint::Gradient& g) {
  std::vector<double> out;
  for (const auto& layer : g.layers) {
    out.insert(out.end(), layer.weights.values().begin(), layer.weights.values().end());
    out.insert(out.end(), layer.biases.begin(), layer.biases.end());
  }
  return out;
}

// Central differences of `loss` with respect to every parameter.
inline std::vector<double> numeric_gradient(pujoint::MLPModel model,
                                            const std::function<double(const pujoint::MLPModel&)>& loss,
                                            double step = 1e-5) {
  std::vector<double> out;
  pujoint::MLPModel probe = model;
  std::vector<double*> slots;
  for_each_parameter(probe, [&](double& p) { slots.push_back(&p); });
  for (double* p : slots) {
    const double saved = *p;
    *p = saved + step;
    const double up = loss(probe);
    *p = saved - step;
    const double down = loss(probe);
    *p = saved;
    out.push_back((up - down) / (2.0 * step));
  }
  return out;
}

// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

}  // namespace oracle
