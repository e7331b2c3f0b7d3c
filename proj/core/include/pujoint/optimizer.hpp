#pragma once

#include <cstdint>
#include <vector>

#include "pujoint/mlp.hpp"

namespace pujoint {

struct AmsGradConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// AMSGrad: Adam moments with a running elementwise maximum of the second
// moment. theta -= step * m_hat / (sqrt(v_max_hat) + eps).
class AmsGrad {
 public:
  AmsGrad(const MLPModel& model, AmsGradConfig config);

  // Throws NumericError (leaving model and state untouched) if the gradient
  // holds a non-finite entry, ShapeError if shapes disagree.
  void step(MLPModel& model, const Gradient& grad);

  const AmsGradConfig& config() const noexcept { return config_; }
  std::uint64_t steps() const noexcept { return steps_; }
  const Gradient& first_moment() const noexcept { return m_; }
  const Gradient& second_moment() const noexcept { return v_; }
  const Gradient& max_second_moment() const noexcept { return v_max_; }

 private:
  AmsGradConfig config_;
  Gradient m_;
  Gradient v_;
  Gradient v_max_;
  std::uint64_t steps_ = 0;
};

}  // namespace pujoint
