#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "pujoint/data.hpp"
#include "pujoint/losses.hpp"
#include "pujoint/mlp.hpp"
#include "pujoint/optimizer.hpp"
#include "pujoint/pseudo_labels.hpp"

namespace pujoint {

enum class Method { pn, upu, nnpu, joint };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view name);

struct EpochRecord;

// Invoked after every epoch with the record and the current (not the selected) model.
using EpochObserver = std::function<void(const EpochRecord&, const MLPModel&)>;
// Joint trainer only: called after every epoch with the pseudo-label state.
using LabelObserver = std::function<void(int epoch, const PseudoLabelState&)>;

struct TrainConfig {
  // optimisation
  double learning_rate = 0.005;
  std::size_t batch_size = 128;
  std::size_t batch_count = 0;  // overrides batch_size when nonzero
  int epochs = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  // model
  std::vector<std::size_t> hidden = {64, 64};
  Activation activation = Activation::relu;

  // risk estimators (PN / uPU / nnPU, and validation)
  Surrogate risk_surrogate = Surrogate::sigmoid;
  double ascent_threshold = 0.0;

  // joint optimisation
  int update_start = 20;
  int window = 10;
  double lambda_init = 10.0;
  double alpha = 10.0;
  double beta = 2.0;
  Surrogate positive_surrogate = Surrogate::logistic;
  std::optional<double> fixed_lambda;  // pins lambda instead of the linear schedule
  bool freeze_labels = false;          // never update pseudo-labels

  EpochObserver observer;
  LabelObserver label_observer;

  // Throws ArgumentError describing the first violated constraint.
  void validate(Method method) const;

  std::vector<std::size_t> layer_sizes(std::size_t input_dim) const;
};

struct ModelSnapshot {
  int epoch = 0;
  MLPModel model;
  double validation_loss = 0.0;
  std::optional<double> lambda;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean of the trainer's own per-batch objective
  double val_loss = 0.0;    // non-negative PU risk (PN risk for the PN trainer) on validation data
  std::optional<double> lambda;
  std::optional<double> mean_pseudo_label;
  std::size_t clamp_count = 0;  // batches whose nnPU correction fell below the threshold
};

struct TrainingTrace {
  std::vector<EpochRecord> epochs;

  double min_validation_loss() const;
  bool went_negative() const noexcept;
  std::size_t total_clamps() const noexcept;
};

struct TrainResult {
  ModelSnapshot best;
  TrainingTrace trace;
};

struct JointResult {
  ModelSnapshot best;
  TrainingTrace trace;
  PseudoLabelState labels;
};

TrainResult train_pn(const TrainConfig& config, const LabeledDataset& train, const LabeledDataset& validation);
TrainResult train_upu(const TrainConfig& config, const PUSample& train, const PUSample& validation);
TrainResult train_nnpu(const TrainConfig& config, const PUSample& train, const PUSample& validation);
JointResult train_joint(const TrainConfig& config, const PUSample& train, const PUSample& validation,
                        InitStrategy init);

// Non-negative PU risk of `model` on a PU sample (the model-selection criterion).
double validation_loss(const MLPModel& model, const PUSample& sample, Surrogate surrogate);

// CSV: epoch,train_loss,val_loss,lambda,mean_pseudo_label,clamp_count.
// Inapplicable optional columns are left empty.
void write_trace_csv(const TrainingTrace& trace, std::ostream& out);

}  // namespace pujoint
