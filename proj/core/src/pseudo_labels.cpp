#include "pujoint/pseudo_labels.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "pujoint/errors.hpp"
#include "pujoint/random.hpp"

namespace pujoint {

std::string_view to_string(InitStrategy s) noexcept {
  switch (s) {
    case InitStrategy::class_prior: return "class-prior";
    case InitStrategy::all_negative: return "all-negative";
    case InitStrategy::randomized_hard: return "randomized-hard";
  }
  return "unknown";
}

InitStrategy parse_init_strategy(std::string_view name) {
  if (name == "class-prior") return InitStrategy::class_prior;
  if (name == "all-negative") return InitStrategy::all_negative;
  if (name == "randomized-hard") return InitStrategy::randomized_hard;
  throw ArgumentError("unknown init strategy '" + std::string(name) +
                      "' (expected class-prior, all-negative or randomized-hard)");
}

std::vector<double> init_labels(InitStrategy strategy, std::size_t n_u, double prior, std::uint64_t seed) {
  if (!(prior > 0.0 && prior < 1.0)) throw ArgumentError("init_labels: class prior must lie in (0,1)");
  switch (strategy) {
    case InitStrategy::class_prior: return std::vector<double>(n_u, prior);
    case InitStrategy::all_negative: return std::vector<double>(n_u, 0.0);
    case InitStrategy::randomized_hard: {
      Rng rng = make_rng(seed, "init-labels");
      std::bernoulli_distribution coin(prior);
      std::vector<double> y(n_u);
      for (double& v : y) v = coin(rng) ? 1.0 : 0.0;
      return y;
    }
  }
  return {};
}

double initial_noise_rate(InitStrategy strategy, double prior) {
  if (!(prior > 0.0 && prior < 1.0)) throw ArgumentError("initial_noise_rate: class prior must lie in (0,1)");
  const double neg = 1.0 - prior;
  switch (strategy) {
    case InitStrategy::all_negative: return prior;
    case InitStrategy::randomized_hard: return 1.0 - neg * neg - prior * prior;
    case InitStrategy::class_prior: return prior >= 0.5 ? neg : prior;
  }
  return 0.0;
}

LambdaSchedule::LambdaSchedule(double initial, double floor, int epochs)
    : initial_(initial), floor_(floor), epochs_(epochs) {
  if (!(initial >= 0.0) || !(floor >= 0.0)) throw ArgumentError("lambda schedule values must be nonnegative");
  if (epochs < 2) throw ArgumentError("lambda schedule needs at least 2 epochs");
}

LambdaSchedule LambdaSchedule::for_sizes(double initial, std::size_t n_p, std::size_t n_u, int epochs) {
  if (n_u == 0) throw ArgumentError("lambda schedule needs n_u >= 1");
  return LambdaSchedule(initial, static_cast<double>(n_p) / static_cast<double>(n_u), epochs);
}

double LambdaSchedule::at(int epoch) const {
  if (epoch < 1 || epoch > epochs_) {
    throw ArgumentError("lambda schedule: epoch " + std::to_string(epoch) + " outside [1, " +
                        std::to_string(epochs_) + "]");
  }
  if (epoch == 1) return initial_;
  if (epoch == epochs_) return floor_;
  const double t = static_cast<double>(epochs_ - epoch) / static_cast<double>(epochs_ - 1);
  return t * (initial_ - floor_) + floor_;
}

PseudoLabelState::PseudoLabelState(std::vector<double> initial, int epochs, int window, int update_start)
    : initial_(initial),
      labels_(std::move(initial)),
      epochs_(epochs),
      window_(window),
      update_start_(update_start) {
  if (epochs < 1 || window < 1 || update_start < 1) {
    throw ArgumentError("pseudo-label state needs epochs, window and update start >= 1");
  }
  if (update_start < window) {
    throw ArgumentError("pseudo-label update start (" + std::to_string(update_start) +
                        ") must be >= window (" + std::to_string(window) + ")");
  }
  for (double y : labels_) {
    if (!(y >= 0.0 && y <= 1.0)) throw ArgumentError("pseudo-labels must lie in [0,1]");
  }
  predictions_ = Matrix(labels_.size(), static_cast<std::size_t>(epochs),
                        std::numeric_limits<double>::quiet_NaN());
}

void PseudoLabelState::check_cell(std::size_t index, int epoch) const {
  if (index >= labels_.size()) {
    throw ArgumentError("pseudo-label index " + std::to_string(index) + " out of range");
  }
  if (epoch < 1 || epoch > epochs_) {
    throw ArgumentError("pseudo-label epoch " + std::to_string(epoch) + " outside [1, " +
                        std::to_string(epochs_) + "]");
  }
}

void PseudoLabelState::record(std::size_t index, int epoch, double prediction) {
  check_cell(index, epoch);
  if (!(prediction >= 0.0 && prediction <= 1.0)) throw ArgumentError("recorded prediction must lie in [0,1]");
  predictions_(index, static_cast<std::size_t>(epoch - 1)) = prediction;
}

std::optional<double> PseudoLabelState::prediction(std::size_t index, int epoch) const {
  check_cell(index, epoch);
  const double v = predictions_(index, static_cast<std::size_t>(epoch - 1));
  if (std::isnan(v)) return std::nullopt;
  return v;
}

bool PseudoLabelState::update(std::size_t index, int epoch) {
  check_cell(index, epoch);
  if (epoch < update_start_) return false;
  double acc = 0.0;
  for (int l = epoch - window_ + 1; l <= epoch; ++l) {
    const double z = predictions_(index, static_cast<std::size_t>(l - 1));
    if (std::isnan(z)) {
      throw StateError("pseudo-label update for sample " + std::to_string(index) + " at epoch " +
                       std::to_string(epoch) + " is missing the prediction of epoch " + std::to_string(l));
    }
    acc += z;
  }
  labels_[index] = acc / static_cast<double>(window_);
  return true;
}

double PseudoLabelState::mean_label() const noexcept {
  if (labels_.empty()) return 0.0;
  return std::accumulate(labels_.begin(), labels_.end(), 0.0) / static_cast<double>(labels_.size());
}

void write_label_snapshot(std::ostream& out, std::span<const double> labels, std::span<const int> truth) {
  if (!truth.empty() && truth.size() != labels.size()) {
    throw ShapeError("label snapshot: truth length does not match labels");
  }
  out << (truth.empty() ? "index,y\n" : "index,y,truth\n");
  std::array<char, 32> buf{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::snprintf(buf.data(), buf.size(), "%.17g", labels[i]);
    out << i << ',' << buf.data();
    if (!truth.empty()) out << ',' << truth[i];
    out << '\n';
  }
}

}  // namespace pujoint
