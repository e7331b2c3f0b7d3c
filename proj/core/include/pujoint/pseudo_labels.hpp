#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pujoint/matrix.hpp"

namespace pujoint {

// How the unlabeled pool is labelled before training starts.
//   class_prior:     every label = pi_p
//   all_negative:    every label = 0
//   randomized_hard: each label independently 1 with probability pi_p, else 0
enum class InitStrategy { class_prior, all_negative, randomized_hard };

std::string_view to_string(InitStrategy s) noexcept;
InitStrategy parse_init_strategy(std::string_view name);

std::vector<double> init_labels(InitStrategy strategy, std::size_t n_u, double prior, std::uint64_t seed);

// Expected fraction of wrong initial labels, measured against hard labels
// thresholded at 0.5 for class_prior.
double initial_noise_rate(InitStrategy strategy, double prior);

// Linear decay of the clean-positive weight from `initial` at epoch 1 to
// `floor` (= n_p / n_u) at epoch `epochs`.
class LambdaSchedule {
 public:
  LambdaSchedule(double initial, double floor, int epochs);
  static LambdaSchedule for_sizes(double initial, std::size_t n_p, std::size_t n_u, int epochs);

  double at(int epoch) const;

  double initial() const noexcept { return initial_; }
  double floor() const noexcept { return floor_; }
  int epochs() const noexcept { return epochs_; }

 private:
  double initial_;
  double floor_;
  int epochs_;
};

// Soft labels y for the unlabeled pool plus the (n_u x epochs) record Z of
// per-epoch model predictions. Epochs are 1-based.
class PseudoLabelState {
 public:
  PseudoLabelState(std::vector<double> initial, int epochs, int window, int update_start);

  std::span<const double> labels() const noexcept { return labels_; }
  std::span<const double> initial_labels() const noexcept { return initial_; }
  std::size_t size() const noexcept { return labels_.size(); }
  int epochs() const noexcept { return epochs_; }
  int window() const noexcept { return window_; }
  int update_start() const noexcept { return update_start_; }

  void record(std::size_t index, int epoch, double prediction);

  // Recorded prediction, or std::nullopt if the cell was never written.
  std::optional<double> prediction(std::size_t index, int epoch) const;

  // If epoch >= update_start, replaces y[index] by the mean of the last
  // `window` recorded predictions ending at `epoch` and returns true.
  // Before update_start it is a no-op returning false.
  bool update(std::size_t index, int epoch);

  double mean_label() const noexcept;

 private:
  void check_cell(std::size_t index, int epoch) const;

  std::vector<double> initial_;
  std::vector<double> labels_;
  Matrix predictions_;  // NaN marks an unwritten cell
  int epochs_;
  int window_;
  int update_start_;
};

// CSV: index,y[,truth]
void write_label_snapshot(std::ostream& out, std::span<const double> labels,
                          std::span<const int> truth = {});

}  // namespace pujoint
