#include "pujoint/trainers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "pujoint/errors.hpp"
#include "pujoint/random.hpp"

namespace pujoint {

namespace {

AmsGradConfig optimizer_config(const TrainConfig& c) {
  return AmsGradConfig{c.learning_rate, c.beta1, c.beta2, c.epsilon};
}

std::size_t batches_for(const TrainConfig& c, std::size_t n_first, std::size_t n_second) {
  if (c.batch_count != 0) return std::min({c.batch_count, n_first, n_second});
  return batch_count_for(n_first, n_second, c.batch_size);
}

// Forward pass over P rows stacked above U rows; splits the outputs.
struct StackedPass {
  ForwardPass pass;
  std::span<const double> positive;
  std::span<const double> unlabeled;

  StackedPass(const MLPModel& model, const Matrix& p, const Matrix& u)
      : pass(forward_pass(model, vstack(p, u))),
        positive(pass.output().subspan(0, p.rows())),
        unlabeled(pass.output().subspan(p.rows())) {}

  Gradient backward(const MLPModel& model, const SampleGradients& g) const {
    std::vector<double> upstream(g.positive);
    upstream.insert(upstream.end(), g.unlabeled.begin(), g.unlabeled.end());
    return pujoint::backward(model, pass, upstream);
  }
};

// Keeps the snapshot with the smallest validation loss (earliest on ties).
class SnapshotKeeper {
 public:
  void offer(int epoch, const MLPModel& model, double loss, std::optional<double> lambda) {
    if (!std::isfinite(loss)) throw NumericError("validation loss is not finite at epoch " + std::to_string(epoch));
    if (!best_ || loss < best_->validation_loss) best_ = ModelSnapshot{epoch, model, loss, lambda};
  }
  ModelSnapshot take() { return std::move(*best_); }

 private:
  std::optional<ModelSnapshot> best_;
};

void require_sample(const PUSample& s, const char* what) {
  if (s.n_p() == 0 || s.n_u() == 0) throw ArgumentError(std::string(what) + " needs nonempty P and U");
  if (s.positive.cols() != s.unlabeled.cols()) throw ShapeError(std::string(what) + ": P/U dimension mismatch");
  if (!(s.prior > 0.0 && s.prior < 1.0)) throw ArgumentError(std::string(what) + ": class prior must lie in (0,1)");
}

enum class PUObjective { unbiased, non_negative };

TrainResult train_pu(const TrainConfig& config, const PUSample& train, const PUSample& validation,
                     PUObjective objective) {
  const Method method = objective == PUObjective::unbiased ? Method::upu : Method::nnpu;
  config.validate(method);
  require_sample(train, "PU training data");
  require_sample(validation, "PU validation data");

  MLPModel model(config.layer_sizes(train.dim()), config.activation, config.seed);
  AmsGrad optimizer(model, optimizer_config(config));
  const std::size_t n_batches = batches_for(config, train.n_p(), train.n_u());
  const double threshold = objective == PUObjective::unbiased ? -std::numeric_limits<double>::infinity()
                                                              : config.ascent_threshold;

  TrainingTrace trace;
  SnapshotKeeper keeper;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto plan = deal_batches(train.n_p(), train.n_u(), n_batches, config.seed, static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    std::size_t clamps = 0;
    for (const auto& b : plan) {
      StackedPass pass(model, train.positive.select_rows(b.first), train.unlabeled.select_rows(b.second));
      auto risk = nnpu_risk(pass.positive, pass.unlabeled, train.prior, config.risk_surrogate, threshold);
      if (objective == PUObjective::unbiased) {
        loss_sum += risk.unbiased_value();
      } else {
        loss_sum += risk.value();
        if (risk.ascent) ++clamps;
      }
      optimizer.step(model, pass.backward(model, risk.grad));
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(plan.size());
    rec.val_loss = validation_loss(model, validation, config.risk_surrogate);
    rec.clamp_count = clamps;
    keeper.offer(epoch, model, rec.val_loss, std::nullopt);
    if (config.observer) config.observer(rec, model);
    trace.epochs.push_back(rec);
  }
  return {keeper.take(), std::move(trace)};
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::pn: return "pn";
    case Method::upu: return "upu";
    case Method::nnpu: return "nnpu";
    case Method::joint: return "joint";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "pn") return Method::pn;
  if (name == "upu") return Method::upu;
  if (name == "nnpu") return Method::nnpu;
  if (name == "joint") return Method::joint;
  throw ArgumentError("unknown method '" + std::string(name) + "' (expected pn, upu, nnpu or joint)");
}

void TrainConfig::validate(Method method) const {
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning rate must be positive");
  if (batch_size == 0 && batch_count == 0) throw ArgumentError("batch size must be >= 1");
  for (std::size_t h : hidden) {
    if (h == 0) throw ArgumentError("hidden layer widths must be >= 1");
  }
  if (method != Method::joint) return;
  if (epochs < 2) throw ArgumentError("joint training needs at least 2 epochs");
  if (window < 1) throw ArgumentError("label window r must be >= 1");
  if (update_start < window) throw ArgumentError("label update start must be >= window r");
  if (!(lambda_init >= 0.0)) throw ArgumentError("lambda_init must be nonnegative");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ArgumentError("alpha and beta must be nonnegative");
  if (fixed_lambda && !(*fixed_lambda >= 0.0)) throw ArgumentError("fixed lambda must be nonnegative");
}

std::vector<std::size_t> TrainConfig::layer_sizes(std::size_t input_dim) const {
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

double TrainingTrace::min_validation_loss() const {
  if (epochs.empty()) throw StateError("empty training trace");
  double best = epochs.front().val_loss;
  for (const auto& e : epochs) best = std::min(best, e.val_loss);
  return best;
}

bool TrainingTrace::went_negative() const noexcept {
  return std::any_of(epochs.begin(), epochs.end(), [](const EpochRecord& e) { return e.train_loss < 0.0; });
}

std::size_t TrainingTrace::total_clamps() const noexcept {
  std::size_t n = 0;
  for (const auto& e : epochs) n += e.clamp_count;
  return n;
}

double validation_loss(const MLPModel& model, const PUSample& sample, Surrogate surrogate) {
  const auto sp = forward(model, sample.positive);
  const auto su = forward(model, sample.unlabeled);
  return nnpu_risk(sp, su, sample.prior, surrogate).value();
}

TrainResult train_pn(const TrainConfig& config, const LabeledDataset& train, const LabeledDataset& validation) {
  config.validate(Method::pn);
  train.validate();
  validation.validate();

  auto by_class = [](const LabeledDataset& d) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < d.size(); ++i) (d.labels[i] == 1 ? pos : neg).push_back(i);
    return std::pair{d.features.select_rows(pos), d.features.select_rows(neg)};
  };
  const auto [train_p, train_n] = by_class(train);
  const auto [val_p, val_n] = by_class(validation);
  if (train_p.rows() == 0 || train_n.rows() == 0) throw ArgumentError("PN training needs both classes");
  if (val_p.rows() == 0 || val_n.rows() == 0) throw ArgumentError("PN validation needs both classes");
  const double prior = train.positive_fraction();

  MLPModel model(config.layer_sizes(train.dim()), config.activation, config.seed);
  AmsGrad optimizer(model, optimizer_config(config));
  const std::size_t n_batches = batches_for(config, train_p.rows(), train_n.rows());

  TrainingTrace trace;
  SnapshotKeeper keeper;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto plan = deal_batches(train_p.rows(), train_n.rows(), n_batches, config.seed,
                                   static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    for (const auto& b : plan) {
      StackedPass pass(model, train_p.select_rows(b.first), train_n.select_rows(b.second));
      auto risk = pn_risk(pass.positive, pass.unlabeled, prior, config.risk_surrogate);
      loss_sum += risk.value;
      optimizer.step(model, pass.backward(model, risk.grad));
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(plan.size());
    rec.val_loss = pn_risk(forward(model, val_p), forward(model, val_n), prior, config.risk_surrogate).value;
    keeper.offer(epoch, model, rec.val_loss, std::nullopt);
    if (config.observer) config.observer(rec, model);
    trace.epochs.push_back(rec);
  }
  return {keeper.take(), std::move(trace)};
}

TrainResult train_upu(const TrainConfig& config, const PUSample& train, const PUSample& validation) {
  return train_pu(config, train, validation, PUObjective::unbiased);
}

TrainResult train_nnpu(const TrainConfig& config, const PUSample& train, const PUSample& validation) {
  return train_pu(config, train, validation, PUObjective::non_negative);
}

JointResult train_joint(const TrainConfig& config, const PUSample& train, const PUSample& validation,
                        InitStrategy init) {
  config.validate(Method::joint);
  require_sample(train, "PU training data");
  require_sample(validation, "PU validation data");

  MLPModel model(config.layer_sizes(train.dim()), config.activation, config.seed);
  AmsGrad optimizer(model, optimizer_config(config));
  const std::size_t n_batches = batches_for(config, train.n_p(), train.n_u());
  const auto schedule = LambdaSchedule::for_sizes(config.lambda_init, train.n_p(), train.n_u(), config.epochs);
  PseudoLabelState state(init_labels(init, train.n_u(), train.prior, config.seed), config.epochs, config.window,
                         config.update_start);

  TrainingTrace trace;
  SnapshotKeeper keeper;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lambda = config.fixed_lambda.value_or(schedule.at(epoch));
    const JointWeights weights{lambda, config.alpha, config.beta};
    const auto batches = shuffle_batches(train, state.labels(), n_batches, config.seed,
                                         static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    for (const auto& mb : batches) {
      StackedPass pass(model, mb.positive, mb.unlabeled);
      // Gradient uses the labels as they were before this batch's update.
      auto terms = joint_loss(pass.positive, pass.unlabeled, mb.labels, weights, train.prior,
                              config.positive_surrogate);
      loss_sum += terms.total;
      Gradient grad = pass.backward(model, terms.grad);

      for (std::size_t k = 0; k < mb.u_index.size(); ++k) {
        state.record(mb.u_index[k], epoch, pass.unlabeled[k]);
        if (!config.freeze_labels) state.update(mb.u_index[k], epoch);
      }
      optimizer.step(model, grad);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches.size());
    rec.val_loss = validation_loss(model, validation, config.risk_surrogate);
    rec.lambda = lambda;
    rec.mean_pseudo_label = state.mean_label();
    keeper.offer(epoch, model, rec.val_loss, lambda);
    if (config.observer) config.observer(rec, model);
    if (config.label_observer) config.label_observer(epoch, state);
    trace.epochs.push_back(rec);
  }
  return {keeper.take(), std::move(trace), std::move(state)};
}

void write_trace_csv(const TrainingTrace& trace, std::ostream& out) {
  out << "epoch,train_loss,val_loss,lambda,mean_pseudo_label,clamp_count\n";
  for (const auto& e : trace.epochs) {
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss) << ',';
    if (e.lambda) out << format_double(*e.lambda);
    out << ',';
    if (e.mean_pseudo_label) out << format_double(*e.mean_pseudo_label);
    out << ',' << e.clamp_count << '\n';
  }
}

}  // namespace pujoint
