#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace pujoint {

// Probabilities are clamped to [eps, 1-eps] before any logarithm.
inline constexpr double kProbabilityEpsilon = 1e-7;

double clamp_probability(double p) noexcept;

// Per-sample surrogate losses as functions of sigma = P(Y=1|x).
//   sigmoid:  l+(s) = 1 - s,        l-(s) = s
//   logistic: l+(s) = -log s,       l-(s) = -log(1 - s)
enum class Surrogate { sigmoid, logistic };

std::string_view to_string(Surrogate s) noexcept;
Surrogate parse_surrogate(std::string_view name);

double positive_loss(Surrogate s, double sigma) noexcept;
double positive_loss_derivative(Surrogate s, double sigma) noexcept;
double negative_loss(Surrogate s, double sigma) noexcept;
double negative_loss_derivative(Surrogate s, double sigma) noexcept;

// KL([y,1-y] || [s,1-s]) in nats, with 0 log 0 = 0 and s clamped.
double binary_kl(double y, double sigma) noexcept;
// d/dsigma of binary_kl, evaluated at the clamped sigma.
double binary_kl_derivative(double y, double sigma) noexcept;

// Mean of -(t log y + (1-t) log(1-y)) over hard targets t, y clamped.
double mean_cross_entropy(std::span<const int> targets, double y);

// dL/dsigma for each positive-population and each unlabeled/negative-population sample.
struct SampleGradients {
  std::vector<double> positive;
  std::vector<double> unlabeled;
};

struct LossValue {
  double value = 0.0;
  SampleGradients grad;
};

// pi_p * mean l+(sigma_p) + (1 - pi_p) * mean l-(sigma_n).
// grad.unlabeled holds the gradient for the negative sample.
LossValue pn_risk(std::span<const double> sigma_p, std::span<const double> sigma_n, double prior,
                  Surrogate surrogate = Surrogate::sigmoid);

// pi_p * mean l+(sigma_p) + mean l-(sigma_u) - pi_p * mean l-(sigma_p). May be negative.
LossValue upu_risk(std::span<const double> sigma_p, std::span<const double> sigma_u, double prior,
                   Surrogate surrogate = Surrogate::sigmoid);

// The two parts of the unbiased PU risk, its non-negative correction, and the
// gradient signal to follow.
struct PURiskValue {
  double positive_term = 0.0;  // pi_p * mean l+(sigma_p)
  double correction = 0.0;     // mean l-(sigma_u) - pi_p * mean l-(sigma_p)
  bool clamped = false;        // correction < 0
  bool ascent = false;         // correction < threshold: grad ascends the correction only
  SampleGradients grad;

  double value() const noexcept { return positive_term + (correction > 0.0 ? correction : 0.0); }
  double unbiased_value() const noexcept { return positive_term + correction; }

  // Assembles the risk from its component means (no gradients).
  static PURiskValue from_means(double prior, double mean_positive_loss_p, double mean_negative_loss_u,
                                double mean_negative_loss_p, double threshold = 0.0);
};

// Non-negative PU risk. When correction < threshold the gradient is that of
// -correction (gradient ascent on the correction term); otherwise that of the
// full unbiased risk.
PURiskValue nnpu_risk(std::span<const double> sigma_p, std::span<const double> sigma_u, double prior,
                      Surrogate surrogate = Surrogate::sigmoid, double threshold = 0.0);

// lambda * mean l+(sigma_p) + mean_i KL(y_i || sigma_u_i). The clean-positive
// term defaults to -log sigma so that it equals KL(1 || sigma).
LossValue class_loss(std::span<const double> sigma_p, std::span<const double> sigma_u,
                     std::span<const double> labels, double lambda,
                     Surrogate positive_surrogate = Surrogate::logistic);

// KL([pi_p, 1-pi_p] || [mean sigma_u, 1 - mean sigma_u]).
LossValue reg1(std::span<const double> sigma_u, double prior);

// mean_i sigma_i log sigma_i + (1 - sigma_i) log(1 - sigma_i)  (negative entropy, <= 0).
LossValue reg2(std::span<const double> sigma_u);

struct JointWeights {
  double lambda = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
};

struct JointLossTerms {
  double classification = 0.0;
  double reg1 = 0.0;
  double reg2 = 0.0;
  double total = 0.0;
  JointWeights weights;
  SampleGradients grad;
};

// classification + alpha * reg1 + beta * reg2.
JointLossTerms joint_loss(std::span<const double> sigma_p, std::span<const double> sigma_u,
                          std::span<const double> labels, const JointWeights& weights, double prior,
                          Surrogate positive_surrogate = Surrogate::logistic);

}  // namespace pujoint
