#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pujoint/data.hpp"
#include "pujoint/trainers.hpp"

namespace pujoint {

// 100 * fraction of rows where (score >= 0.5) disagrees with truth.
double error_rate(std::span<const double> scores, std::span<const int> truth);

double test_error(const MLPModel& model, const LabeledDataset& test);

// Error of thresholded pseudo-labels or model predictions on X_u against the
// hidden truth. Throws StateError when no truth is supplied.
double recovery_error(std::span<const double> values, std::span<const int> u_truth);

// Everything one trial needs: PU training and validation splits (with hidden
// truth) and a labeled test set.
struct TrialData {
  PUSplit train;
  PUSplit validation;
  LabeledDataset test;
};

using TrialDataFactory = std::function<TrialData(std::uint64_t seed)>;

// Fresh synthetic pool of exactly the needed class counts per trial, a PU split
// of (n_p, n_u) at `prior`, a validation partition at `val_fraction`, and an
// n_test test set at the same prior.
TrialDataFactory synthetic_trial_factory(SyntheticSpec spec, std::size_t n_p, std::size_t n_u, std::size_t n_test,
                                         double prior, double val_fraction);

// PU splits resampled per trial from a fixed labeled pool; fixed test set.
TrialDataFactory pool_trial_factory(std::shared_ptr<const LabeledDataset> pool,
                                    std::shared_ptr<const LabeledDataset> test, std::size_t n_p, std::size_t n_u,
                                    double prior, double val_fraction);

struct MethodSpec {
  std::string label;  // unique within a benchmark, e.g. "joint/class-prior"
  Method method = Method::joint;
  std::optional<InitStrategy> init;  // joint only
  TrainConfig config;

  static MethodSpec make(Method method, std::optional<InitStrategy> init, TrainConfig config);
};

struct TrialReport {
  std::string label;
  std::string method;
  std::string init;  // empty when not applicable
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double test_error = 0.0;
  std::optional<double> recovery_error_labels;  // thresholded final pseudo-labels
  double recovery_error_model = 0.0;            // thresholded selected-model predictions on X_u
  int selected_epoch = 0;
  double validation_loss = 0.0;
  std::uint64_t split_fingerprint = 0;
};

struct TrialOutcome {
  TrialReport report;
  TrainingTrace trace;
  MLPModel model;
  std::optional<std::vector<double>> final_labels;
};

// Trains `spec` on `data` with config.seed := seed and evaluates it.
TrialOutcome run_trial(const MethodSpec& spec, const TrialData& data, std::size_t trial, std::uint64_t seed);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  std::size_t count = 0;
};

Summary summarize(std::span<const double> values);

struct MethodAggregate {
  std::string label;
  std::string method;
  std::string init;
  std::vector<TrialReport> trials;

  Summary test_error() const;
  Summary recovery_error_model() const;
  std::optional<Summary> recovery_error_labels() const;
};

struct AggregateReport {
  std::string experiment;
  std::optional<double> prior;
  std::vector<MethodAggregate> methods;

  const MethodAggregate& at(std::string_view label) const;
};

struct BenchmarkOptions {
  std::string experiment = "benchmark";
  std::optional<double> prior;
  std::size_t trials = 10;
  std::uint64_t base_seed = 0;
  unsigned jobs = 1;

  // Returns a previously stored report for (method, trial) to skip rerunning it.
  std::function<std::optional<TrialReport>(const MethodSpec&, std::size_t trial)> lookup;
  // Called (serialised) after each freshly computed trial.
  std::function<void(const MethodSpec&, const TrialOutcome&)> on_complete;
};

// Trial t uses seed base_seed + t for every method, so all methods see the
// same data. Trials run on up to `jobs` threads; results are ordered by trial.
AggregateReport run_benchmark(std::span<const MethodSpec> methods, const TrialDataFactory& factory,
                              const BenchmarkOptions& options);

// {"schema": "pujoint-report/1", "experiments": [{experiment, prior, methods: [{..., trials: [...]}]}]}
void write_report_json(std::span<const AggregateReport> reports, std::ostream& out);
// experiment,prior,label,method,init,trial,seed,test_error,recovery_error_labels,
// recovery_error_model,selected_epoch,validation_loss,split_fingerprint
void write_report_csv(std::span<const AggregateReport> reports, std::ostream& out);

std::string trial_report_to_json(const TrialReport& report);
TrialReport trial_report_from_json(std::string_view text);

// Checks a report JSON document against the schema above; throws FormatError.
void validate_report_json(std::string_view text);

}  // namespace pujoint
