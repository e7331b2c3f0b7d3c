#include "pujoint/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "pujoint/errors.hpp"
#include "pujoint/random.hpp"

namespace pujoint {

using nlohmann::json;

namespace {

constexpr std::string_view kReportSchema = "pujoint-report/1";

json summary_json(const Summary& s) { return json{{"mean", s.mean}, {"std", s.std}, {"count", s.count}}; }

json trial_json(const TrialReport& r) {
  json j{{"label", r.label},
         {"method", r.method},
         {"init", r.init},
         {"trial", r.trial},
         {"seed", r.seed},
         {"test_error", r.test_error},
         {"recovery_error_model", r.recovery_error_model},
         {"selected_epoch", r.selected_epoch},
         {"validation_loss", r.validation_loss},
         {"split_fingerprint", r.split_fingerprint}};
  j["recovery_error_labels"] = r.recovery_error_labels ? json(*r.recovery_error_labels) : json(nullptr);
  return j;
}

TrialReport trial_from(const json& j) {
  TrialReport r;
  r.label = j.at("label").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.init = j.at("init").get<std::string>();
  r.trial = j.at("trial").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.test_error = j.at("test_error").get<double>();
  r.recovery_error_model = j.at("recovery_error_model").get<double>();
  if (!j.at("recovery_error_labels").is_null()) r.recovery_error_labels = j.at("recovery_error_labels").get<double>();
  r.selected_epoch = j.at("selected_epoch").get<int>();
  r.validation_loss = j.at("validation_loss").get<double>();
  r.split_fingerprint = j.at("split_fingerprint").get<std::uint64_t>();
  return r;
}

std::string csv_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double error_rate(std::span<const double> scores, std::span<const int> truth) {
  if (scores.empty()) throw ArgumentError("error_rate: empty input");
  if (scores.size() != truth.size()) throw ShapeError("error_rate: scores and truth differ in length");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int predicted = scores[i] >= 0.5 ? 1 : 0;
    if (predicted != truth[i]) ++wrong;
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(scores.size());
}

double test_error(const MLPModel& model, const LabeledDataset& test) {
  if (test.size() == 0) throw ArgumentError("test_error: empty test set");
  return error_rate(forward(model, test.features), test.labels);
}

double recovery_error(std::span<const double> values, std::span<const int> u_truth) {
  if (u_truth.empty()) throw StateError("recovery_error: hidden truth of X_u is unavailable");
  return error_rate(values, u_truth);
}

TrialDataFactory synthetic_trial_factory(SyntheticSpec spec, std::size_t n_p, std::size_t n_u, std::size_t n_test,
                                         double prior, double val_fraction) {
  if (!(prior > 0.0 && prior < 1.0)) throw ArgumentError("benchmark prior must lie in (0,1)");
  if (n_test == 0) throw ArgumentError("benchmark needs a nonempty test set");
  return [=](std::uint64_t seed) {
    const auto u_pos = static_cast<std::size_t>(std::llround(static_cast<double>(n_u) * prior));
    const auto pool = generate_synthetic_counts(spec, n_p + u_pos, n_u - u_pos, derive_seed(seed, "pool"));
    auto split = make_pu_split(pool, n_p, n_u, prior, seed);
    auto [train, validation] = split_validation(split, val_fraction, seed);
    return TrialData{std::move(train), std::move(validation),
                     generate_synthetic(spec, n_test, prior, derive_seed(seed, "test"))};
  };
}

TrialDataFactory pool_trial_factory(std::shared_ptr<const LabeledDataset> pool,
                                    std::shared_ptr<const LabeledDataset> test, std::size_t n_p, std::size_t n_u,
                                    double prior, double val_fraction) {
  if (!pool || !test) throw ArgumentError("pool_trial_factory: missing dataset");
  return [=](std::uint64_t seed) {
    auto split = make_pu_split(*pool, n_p, n_u, prior, seed);
    auto [train, validation] = split_validation(split, val_fraction, seed);
    return TrialData{std::move(train), std::move(validation), *test};
  };
}

MethodSpec MethodSpec::make(Method method, std::optional<InitStrategy> init, TrainConfig config) {
  if (method != Method::joint) init.reset();
  if (method == Method::joint && !init) init = InitStrategy::class_prior;
  std::string label(to_string(method));
  if (init) label += "/" + std::string(to_string(*init));
  return MethodSpec{std::move(label), method, init, std::move(config)};
}

TrialOutcome run_trial(const MethodSpec& spec, const TrialData& data, std::size_t trial, std::uint64_t seed) {
  TrainConfig config = spec.config;
  config.seed = seed;

  TrialOutcome out;
  ModelSnapshot best;
  switch (spec.method) {
    case Method::pn: {
      auto r = train_pn(config, to_labeled(data.train), to_labeled(data.validation));
      best = std::move(r.best);
      out.trace = std::move(r.trace);
      break;
    }
    case Method::upu:
    case Method::nnpu: {
      auto r = spec.method == Method::upu ? train_upu(config, data.train.sample, data.validation.sample)
                                          : train_nnpu(config, data.train.sample, data.validation.sample);
      best = std::move(r.best);
      out.trace = std::move(r.trace);
      break;
    }
    case Method::joint: {
      auto r = train_joint(config, data.train.sample, data.validation.sample,
                           spec.init.value_or(InitStrategy::class_prior));
      best = std::move(r.best);
      out.trace = std::move(r.trace);
      const auto labels = r.labels.labels();
      out.final_labels = std::vector<double>(labels.begin(), labels.end());
      break;
    }
  }

  TrialReport& rep = out.report;
  rep.label = spec.label;
  rep.method = std::string(to_string(spec.method));
  rep.init = spec.init ? std::string(to_string(*spec.init)) : std::string();
  rep.trial = trial;
  rep.seed = seed;
  rep.test_error = test_error(best.model, data.test);
  rep.recovery_error_model = recovery_error(forward(best.model, data.train.sample.unlabeled), data.train.u_truth);
  if (out.final_labels) rep.recovery_error_labels = recovery_error(*out.final_labels, data.train.u_truth);
  rep.selected_epoch = best.epoch;
  rep.validation_loss = best.validation_loss;
  rep.split_fingerprint = fingerprint(data.train);
  out.model = std::move(best.model);
  return out;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

Summary MethodAggregate::test_error() const {
  std::vector<double> v;
  for (const auto& t : trials) v.push_back(t.test_error);
  return summarize(v);
}

Summary MethodAggregate::recovery_error_model() const {
  std::vector<double> v;
  for (const auto& t : trials) v.push_back(t.recovery_error_model);
  return summarize(v);
}

std::optional<Summary> MethodAggregate::recovery_error_labels() const {
  std::vector<double> v;
  for (const auto& t : trials) {
    if (!t.recovery_error_labels) return std::nullopt;
    v.push_back(*t.recovery_error_labels);
  }
  if (v.empty()) return std::nullopt;
  return summarize(v);
}

const MethodAggregate& AggregateReport::at(std::string_view label) const {
  for (const auto& m : methods) {
    if (m.label == label) return m;
  }
  throw ArgumentError("report has no method '" + std::string(label) + "'");
}

AggregateReport run_benchmark(std::span<const MethodSpec> methods, const TrialDataFactory& factory,
                              const BenchmarkOptions& options) {
  if (options.trials < 2) throw ArgumentError("benchmark needs at least 2 trials");
  if (methods.empty()) throw ArgumentError("benchmark needs at least one method");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    for (std::size_t j = i + 1; j < methods.size(); ++j) {
      if (methods[i].label == methods[j].label) throw ArgumentError("duplicate method label '" + methods[i].label + "'");
    }
  }

  // results[t][m]
  std::vector<std::vector<TrialReport>> results(options.trials, std::vector<TrialReport>(methods.size()));
  std::mutex callback_mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t t = next++; t < options.trials; t = next++) {
      try {
        const std::uint64_t seed = options.base_seed + t;
        std::optional<TrialData> data;
        for (std::size_t m = 0; m < methods.size(); ++m) {
          if (options.lookup) {
            if (auto cached = options.lookup(methods[m], t)) {
              results[t][m] = std::move(*cached);
              continue;
            }
          }
          if (!data) data = factory(seed);
          auto outcome = run_trial(methods[m], *data, t, seed);
          results[t][m] = outcome.report;
          if (options.on_complete) {
            std::lock_guard lock(callback_mutex);
            options.on_complete(methods[m], outcome);
          }
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = options.trials;
      }
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(options.trials)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  AggregateReport report;
  report.experiment = options.experiment;
  report.prior = options.prior;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodAggregate agg;
    agg.label = methods[m].label;
    agg.method = std::string(to_string(methods[m].method));
    agg.init = methods[m].init ? std::string(to_string(*methods[m].init)) : std::string();
    for (std::size_t t = 0; t < options.trials; ++t) agg.trials.push_back(results[t][m]);
    report.methods.push_back(std::move(agg));
  }
  return report;
}

void write_report_json(std::span<const AggregateReport> reports, std::ostream& out) {
  json experiments = json::array();
  for (const auto& rep : reports) {
    json methods = json::array();
    for (const auto& m : rep.methods) {
      json trials = json::array();
      for (const auto& t : m.trials) trials.push_back(trial_json(t));
      json jm{{"label", m.label},
              {"method", m.method},
              {"init", m.init},
              {"test_error", summary_json(m.test_error())},
              {"recovery_error_model", summary_json(m.recovery_error_model())},
              {"trials", std::move(trials)}};
      const auto rl = m.recovery_error_labels();
      jm["recovery_error_labels"] = rl ? summary_json(*rl) : json(nullptr);
      methods.push_back(std::move(jm));
    }
    json je{{"experiment", rep.experiment}, {"methods", std::move(methods)}};
    je["prior"] = rep.prior ? json(*rep.prior) : json(nullptr);
    experiments.push_back(std::move(je));
  }
  out << json{{"schema", kReportSchema}, {"experiments", std::move(experiments)}}.dump(2) << '\n';
}

void write_report_csv(std::span<const AggregateReport> reports, std::ostream& out) {
  out << "experiment,prior,label,method,init,trial,seed,test_error,recovery_error_labels,"
         "recovery_error_model,selected_epoch,validation_loss,split_fingerprint\n";
  for (const auto& rep : reports) {
    for (const auto& m : rep.methods) {
      for (const auto& t : m.trials) {
        out << rep.experiment << ',' << (rep.prior ? csv_double(*rep.prior) : std::string()) << ',' << t.label << ','
            << t.method << ',' << t.init << ',' << t.trial << ',' << t.seed << ',' << csv_double(t.test_error) << ','
            << (t.recovery_error_labels ? csv_double(*t.recovery_error_labels) : std::string()) << ','
            << csv_double(t.recovery_error_model) << ',' << t.selected_epoch << ','
            << csv_double(t.validation_loss) << ',' << t.split_fingerprint << '\n';
      }
    }
  }
}

std::string trial_report_to_json(const TrialReport& report) { return trial_json(report).dump(2) + "\n"; }

TrialReport trial_report_from_json(std::string_view text) {
  try {
    return trial_from(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("trial report: ") + e.what());
  }
}

void validate_report_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("schema").get<std::string>() != kReportSchema) throw FormatError("report: unexpected schema tag");
    for (const auto& e : doc.at("experiments")) {
      e.at("experiment").get<std::string>();
      if (!e.at("prior").is_null()) e.at("prior").get<double>();
      for (const auto& m : e.at("methods")) {
        for (const char* key : {"test_error", "recovery_error_model"}) {
          m.at(key).at("mean").get<double>();
          m.at(key).at("std").get<double>();
        }
        for (const auto& t : m.at("trials")) {
          const auto r = trial_from(t);
          if (r.test_error < 0.0 || r.test_error > 100.0) throw FormatError("report: test_error outside [0,100]");
        }
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

}  // namespace pujoint
