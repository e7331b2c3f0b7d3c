#include "pujoint/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pujoint/errors.hpp"

namespace pujoint {

namespace {

void require_nonempty(std::span<const double> v, const char* what) {
  if (v.empty()) throw ArgumentError(std::string(what) + ": empty input");
}

void require_prior(double prior) {
  if (!(prior > 0.0 && prior < 1.0)) throw ArgumentError("class prior must lie in (0,1)");
}

double mean_of(std::span<const double> v, double (*f)(Surrogate, double) noexcept, Surrogate s) {
  double acc = 0.0;
  for (double x : v) acc += f(s, x);
  return acc / static_cast<double>(v.size());
}

double xlogx_ratio(double a, double b) noexcept { return a > 0.0 ? a * std::log(a / b) : 0.0; }

}  // namespace

double clamp_probability(double p) noexcept {
  return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

std::string_view to_string(Surrogate s) noexcept {
  return s == Surrogate::sigmoid ? "sigmoid" : "logistic";
}

Surrogate parse_surrogate(std::string_view name) {
  if (name == "sigmoid") return Surrogate::sigmoid;
  if (name == "logistic") return Surrogate::logistic;
  throw ArgumentError("unknown surrogate '" + std::string(name) + "' (expected sigmoid or logistic)");
}

double positive_loss(Surrogate s, double sigma) noexcept {
  return s == Surrogate::sigmoid ? 1.0 - sigma : -std::log(clamp_probability(sigma));
}

double positive_loss_derivative(Surrogate s, double sigma) noexcept {
  return s == Surrogate::sigmoid ? -1.0 : -1.0 / clamp_probability(sigma);
}

double negative_loss(Surrogate s, double sigma) noexcept {
  return s == Surrogate::sigmoid ? sigma : -std::log(1.0 - clamp_probability(sigma));
}

double negative_loss_derivative(Surrogate s, double sigma) noexcept {
  return s == Surrogate::sigmoid ? 1.0 : 1.0 / (1.0 - clamp_probability(sigma));
}

double binary_kl(double y, double sigma) noexcept {
  const double s = clamp_probability(sigma);
  return xlogx_ratio(y, s) + xlogx_ratio(1.0 - y, 1.0 - s);
}

double binary_kl_derivative(double y, double sigma) noexcept {
  const double s = clamp_probability(sigma);
  return -y / s + (1.0 - y) / (1.0 - s);
}

double mean_cross_entropy(std::span<const int> targets, double y) {
  if (targets.empty()) throw ArgumentError("mean_cross_entropy: empty targets");
  const double c = clamp_probability(y);
  double acc = 0.0;
  for (int t : targets) acc -= t == 1 ? std::log(c) : std::log(1.0 - c);
  return acc / static_cast<double>(targets.size());
}

LossValue pn_risk(std::span<const double> sigma_p, std::span<const double> sigma_n, double prior,
                  Surrogate surrogate) {
  require_nonempty(sigma_p, "pn_risk positives");
  require_nonempty(sigma_n, "pn_risk negatives");
  require_prior(prior);
  const double np = static_cast<double>(sigma_p.size());
  const double nn = static_cast<double>(sigma_n.size());

  LossValue out;
  out.value = prior * mean_of(sigma_p, positive_loss, surrogate) +
              (1.0 - prior) * mean_of(sigma_n, negative_loss, surrogate);
  out.grad.positive.resize(sigma_p.size());
  out.grad.unlabeled.resize(sigma_n.size());
  for (std::size_t i = 0; i < sigma_p.size(); ++i) {
    out.grad.positive[i] = prior * positive_loss_derivative(surrogate, sigma_p[i]) / np;
  }
  for (std::size_t i = 0; i < sigma_n.size(); ++i) {
    out.grad.unlabeled[i] = (1.0 - prior) * negative_loss_derivative(surrogate, sigma_n[i]) / nn;
  }
  return out;
}

LossValue upu_risk(std::span<const double> sigma_p, std::span<const double> sigma_u, double prior,
                   Surrogate surrogate) {
  require_nonempty(sigma_p, "upu_risk positives");
  require_nonempty(sigma_u, "upu_risk unlabeled");
  require_prior(prior);
  const double np = static_cast<double>(sigma_p.size());
  const double nu = static_cast<double>(sigma_u.size());

  LossValue out;
  out.value = prior * mean_of(sigma_p, positive_loss, surrogate) +
              (mean_of(sigma_u, negative_loss, surrogate) - prior * mean_of(sigma_p, negative_loss, surrogate));
  out.grad.positive.resize(sigma_p.size());
  out.grad.unlabeled.resize(sigma_u.size());
  for (std::size_t i = 0; i < sigma_p.size(); ++i) {
    out.grad.positive[i] = prior *
                           (positive_loss_derivative(surrogate, sigma_p[i]) -
                            negative_loss_derivative(surrogate, sigma_p[i])) /
                           np;
  }
  for (std::size_t i = 0; i < sigma_u.size(); ++i) {
    out.grad.unlabeled[i] = negative_loss_derivative(surrogate, sigma_u[i]) / nu;
  }
  return out;
}

PURiskValue PURiskValue::from_means(double prior, double mean_positive_loss_p, double mean_negative_loss_u,
                                    double mean_negative_loss_p, double threshold) {
  require_prior(prior);
  PURiskValue r;
  r.positive_term = prior * mean_positive_loss_p;
  r.correction = mean_negative_loss_u - prior * mean_negative_loss_p;
  r.clamped = r.correction < 0.0;
  r.ascent = r.correction < threshold;
  return r;
}

PURiskValue nnpu_risk(std::span<const double> sigma_p, std::span<const double> sigma_u, double prior,
                      Surrogate surrogate, double threshold) {
  require_nonempty(sigma_p, "nnpu_risk positives");
  require_nonempty(sigma_u, "nnpu_risk unlabeled");
  auto r = PURiskValue::from_means(prior, mean_of(sigma_p, positive_loss, surrogate),
                                   mean_of(sigma_u, negative_loss, surrogate),
                                   mean_of(sigma_p, negative_loss, surrogate), threshold);
  const double np = static_cast<double>(sigma_p.size());
  const double nu = static_cast<double>(sigma_u.size());
  r.grad.positive.resize(sigma_p.size());
  r.grad.unlabeled.resize(sigma_u.size());
  if (r.ascent) {
    // d(-correction)/dsigma
    for (std::size_t i = 0; i < sigma_p.size(); ++i) {
      r.grad.positive[i] = prior * negative_loss_derivative(surrogate, sigma_p[i]) / np;
    }
    for (std::size_t i = 0; i < sigma_u.size(); ++i) {
      r.grad.unlabeled[i] = -negative_loss_derivative(surrogate, sigma_u[i]) / nu;
    }
  } else {
    for (std::size_t i = 0; i < sigma_p.size(); ++i) {
      r.grad.positive[i] = prior *
                           (positive_loss_derivative(surrogate, sigma_p[i]) -
                            negative_loss_derivative(surrogate, sigma_p[i])) /
                           np;
    }
    for (std::size_t i = 0; i < sigma_u.size(); ++i) {
      r.grad.unlabeled[i] = negative_loss_derivative(surrogate, sigma_u[i]) / nu;
    }
  }
  return r;
}

LossValue class_loss(std::span<const double> sigma_p, std::span<const double> sigma_u,
                     std::span<const double> labels, double lambda, Surrogate positive_surrogate) {
  if (labels.size() != sigma_u.size()) {
    throw ShapeError("class_loss: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(sigma_u.size()) + " unlabeled predictions");
  }
  require_nonempty(sigma_p, "class_loss positives");
  require_nonempty(sigma_u, "class_loss unlabeled");
  if (!(lambda >= 0.0)) throw ArgumentError("class_loss: lambda must be nonnegative");
  const double np = static_cast<double>(sigma_p.size());
  const double nu = static_cast<double>(sigma_u.size());

  LossValue out;
  out.grad.positive.resize(sigma_p.size());
  out.grad.unlabeled.resize(sigma_u.size());
  double pos = 0.0;
  for (std::size_t i = 0; i < sigma_p.size(); ++i) {
    pos += positive_loss(positive_surrogate, sigma_p[i]);
    out.grad.positive[i] = lambda * positive_loss_derivative(positive_surrogate, sigma_p[i]) / np;
  }
  double noisy = 0.0;
  for (std::size_t i = 0; i < sigma_u.size(); ++i) {
    noisy += binary_kl(labels[i], sigma_u[i]);
    out.grad.unlabeled[i] = binary_kl_derivative(labels[i], sigma_u[i]) / nu;
  }
  out.value = lambda * pos / np + noisy / nu;
  return out;
}

LossValue reg1(std::span<const double> sigma_u, double prior) {
  require_nonempty(sigma_u, "reg1");
  require_prior(prior);
  const double nu = static_cast<double>(sigma_u.size());
  double mean = 0.0;
  for (double s : sigma_u) mean += s;
  mean /= nu;

  LossValue out;
  out.value = binary_kl(prior, mean);
  out.grad.unlabeled.assign(sigma_u.size(), binary_kl_derivative(prior, mean) / nu);
  return out;
}

LossValue reg2(std::span<const double> sigma_u) {
  require_nonempty(sigma_u, "reg2");
  const double nu = static_cast<double>(sigma_u.size());
  LossValue out;
  out.grad.unlabeled.resize(sigma_u.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < sigma_u.size(); ++i) {
    const double s = clamp_probability(sigma_u[i]);
    acc += s * std::log(s) + (1.0 - s) * std::log(1.0 - s);
    out.grad.unlabeled[i] = (std::log(s) - std::log(1.0 - s)) / nu;
  }
  out.value = acc / nu;
  return out;
}

JointLossTerms joint_loss(std::span<const double> sigma_p, std::span<const double> sigma_u,
                          std::span<const double> labels, const JointWeights& weights, double prior,
                          Surrogate positive_surrogate) {
  if (!(weights.alpha >= 0.0) || !(weights.beta >= 0.0)) {
    throw ArgumentError("joint_loss: alpha and beta must be nonnegative");
  }
  auto cls = class_loss(sigma_p, sigma_u, labels, weights.lambda, positive_surrogate);
  auto r1 = reg1(sigma_u, prior);
  auto r2 = reg2(sigma_u);

  JointLossTerms out;
  out.weights = weights;
  out.classification = cls.value;
  out.reg1 = r1.value;
  out.reg2 = r2.value;
  out.total = cls.value + weights.alpha * r1.value + weights.beta * r2.value;
  out.grad.positive = std::move(cls.grad.positive);
  out.grad.unlabeled = std::move(cls.grad.unlabeled);
  for (std::size_t i = 0; i < sigma_u.size(); ++i) {
    out.grad.unlabeled[i] += weights.alpha * r1.grad.unlabeled[i] + weights.beta * r2.grad.unlabeled[i];
  }
  return out;
}

}  // namespace pujoint
