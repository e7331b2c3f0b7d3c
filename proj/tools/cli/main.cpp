// pujoint: generate data, train one model, run paired benchmarks and prior sweeps.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>

#include <pujoint/errors.hpp>
#include <pujoint/evaluation.hpp>

#include "artifacts.hpp"
#include "config.hpp"

namespace fs = std::filesystem;
using namespace pujoint;
using namespace pujoint::cli;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

// Usage problems detected after argument parsing (bad combinations, existing files).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --out, else [experiment] output / sub, else $PUJOINT_OUT_DIR / leaf, else runs / leaf.
fs::path output_dir(const std::string& flag, const ExperimentConfig& config, const std::string& leaf,
                    const std::string& sub) {
  if (!flag.empty()) return flag;
  if (config.output) {
    fs::path p = *config.output;
    if (p.is_relative()) p = fs::path(config.document.file).parent_path() / p;
    return sub.empty() ? p : p / sub;
  }
  if (const char* env = std::getenv("PUJOINT_OUT_DIR"); env && *env) return fs::path(env) / leaf;
  return fs::path("runs") / leaf;
}

std::string fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string prior_name(double p) {
  std::ostringstream s;
  s << p;
  return s.str();
}

// ---- generate

struct GenerateArgs {
  std::string kind = "two-gaussians";
  std::size_t n = 10000;
  double prior = 0.5;
  double noise = 1.0;
  double separation = 1.0;
  std::size_t dim = 2;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

int cmd_generate(const GenerateArgs& a) {
  fs::path out = a.out;
  if (out.empty()) {
    const char* env = std::getenv("PUJOINT_OUT_DIR");
    out = fs::path(env && *env ? env : ".") / (a.kind + "-n" + std::to_string(a.n) + "-seed" + std::to_string(a.seed) + ".csv");
  }
  if (fs::exists(out) && !a.force) throw UsageError(out.string() + " already exists (use --force to overwrite)");
  SyntheticSpec spec{parse_synthetic_kind(a.kind), a.dim, a.separation, a.noise};
  LabeledDataset data;
  try {
    data = generate_synthetic(spec, a.n, a.prior, a.seed);
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  std::ostringstream s;
  write_csv(data, s);
  write_atomic(out, s.str(), check_dataset_csv);
  std::cerr << "pujoint: wrote " << data.size() << " rows (" << data.positives() << " positive) to " << out.string()
            << "\n";
  return 0;
}

// ---- train

struct TrainArgs {
  std::string config;
  std::string method;
  std::string init;
  std::string out;
  std::size_t trial = 0;
  std::optional<double> prior;
};

int cmd_train(const TrainArgs& a) {
  const auto config = load_experiment(a.config);
  const Method method = parse_method(a.method);
  std::optional<InitStrategy> init;
  if (method == Method::joint) {
    init = a.init.empty() ? InitStrategy::class_prior : parse_init_strategy(a.init);
  } else if (!a.init.empty()) {
    std::cerr << "pujoint: warning: --init is ignored for method " << a.method << "\n";
  }
  const double prior = resolve_prior(config, a.prior);
  auto train = config.train_config(method, prior);
  try {
    train.validate(method);
  } catch (const ArgumentError& e) {
    throw ConfigError(a.config, 0, 0, "training settings for " + a.method + ": " + e.what());
  }
  const auto spec = MethodSpec::make(method, init, train);
  const fs::path out = output_dir(a.out, config, config.name + "-" + label_dir(spec.label), "train-" + label_dir(spec.label));

  const std::uint64_t seed = config.base_seed + a.trial;
  const TrialData data = make_factory(config, prior)(seed);
  std::cerr << "pujoint: training " << spec.label << " (seed " << seed << ", prior " << prior_name(prior) << ", "
            << data.train.sample.n_p() << " positive / " << data.train.sample.n_u() << " unlabeled)\n";
  const auto outcome = run_trial(spec, data, a.trial, seed);

  write_atomic(out / "trace.csv", render_trace(outcome.trace), check_trace_csv);
  write_atomic(out / "model.bin", render_checkpoint(outcome.model), check_checkpoint);
  if (outcome.final_labels)
    write_atomic(out / "labels.csv", render_labels(*outcome.final_labels, data.train.u_truth),
                 [](const std::string& s) { check_csv(s, "index,y,truth"); });
  AggregateReport report;
  report.experiment = config.name;
  report.prior = prior;
  report.methods.push_back(MethodAggregate{spec.label, outcome.report.method, outcome.report.init, {outcome.report}});
  write_atomic(out / "report.json", render_report_json({&report, 1}),
               [](const std::string& s) { validate_report_json(s); });

  const auto& r = outcome.report;
  std::cout << spec.label << ": test error " << fixed(r.test_error) << ", recovery error (model) "
            << fixed(r.recovery_error_model);
  if (r.recovery_error_labels) std::cout << ", recovery error (labels) " << fixed(*r.recovery_error_labels);
  std::cout << ", selected epoch " << r.selected_epoch << "\n";
  std::cerr << "pujoint: artifacts in " << out.string() << "\n";
  return 0;
}

// ---- benchmark / sweep

struct BenchArgs {
  std::string config;
  std::string out;
  unsigned jobs = 1;
  std::optional<std::size_t> trials;
  std::optional<double> prior;
  std::vector<double> priors;
  bool dry_run = false;
};

// Lists the resolved method grid without training.
int dry_run(const ExperimentConfig& config, const std::vector<std::optional<double>>& priors, std::size_t trials) {
  for (const auto& p : priors) {
    std::cout << config.name << " prior " << (p ? prior_name(*p) : std::string("from data")) << ", " << trials
              << " trials, seeds " << config.base_seed << ".." << config.base_seed + trials - 1 << "\n";
    for (const auto& spec : config.method_specs(p)) {
      const auto& c = spec.config;
      std::cout << "  " << spec.label << ": epochs " << c.epochs << ", lr " << c.learning_rate << ", batch "
                << c.batch_size;
      if (spec.method == Method::joint)
        std::cout << ", lambda_init " << c.lambda_init << ", alpha " << c.alpha << ", beta " << c.beta
                  << ", update_start " << c.update_start << ", window " << c.window;
      std::cout << "\n";
    }
  }
  return 0;
}

// Runs the method x init x trial grid at one prior into `dir`, resuming completed trials.
AggregateReport run_grid(const ExperimentConfig& config, double prior, const fs::path& dir, unsigned jobs,
                         std::size_t trials) {
  const auto specs = config.method_specs(prior);
  const auto factory = make_factory(config, prior);

  std::mutex fp_mutex;
  std::map<std::size_t, std::uint64_t> fingerprints;
  auto split_fingerprint = [&](std::size_t t) {
    {
      std::lock_guard lock(fp_mutex);
      if (auto it = fingerprints.find(t); it != fingerprints.end()) return it->second;
    }
    const auto fp = fingerprint(factory(config.base_seed + t).train);
    std::lock_guard lock(fp_mutex);
    return fingerprints[t] = fp;
  };
  auto trial_dir = [&](const std::string& label, std::size_t t) {
    return dir / "trials" / label_dir(label) / ("trial-" + std::to_string(t));
  };

  const std::size_t total = specs.size() * trials;
  std::size_t done = 0, resumed = 0;
  std::mutex count_mutex;

  BenchmarkOptions o;
  o.experiment = config.name;
  o.prior = prior;
  o.trials = trials;
  o.base_seed = config.base_seed;
  o.jobs = jobs;
  o.lookup = [&](const MethodSpec& spec, std::size_t t) -> std::optional<TrialReport> {
    const fs::path d = trial_dir(spec.label, t);
    if (!fs::exists(d / "report.json") || !fs::exists(d / "trace.csv")) return std::nullopt;
    TrialReport r;
    try {
      r = trial_report_from_json(read_file(d / "report.json"));
      read_trace_csv(d / "trace.csv");
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (r.label != spec.label || r.trial != t || r.seed != config.base_seed + t ||
        r.split_fingerprint != split_fingerprint(t))
      return std::nullopt;
    std::lock_guard lock(count_mutex);
    ++done;
    ++resumed;
    return r;
  };
  o.on_complete = [&](const MethodSpec& spec, const TrialOutcome& outcome) {
    const auto t = outcome.report.trial;
    PUSplit train;
    if (outcome.final_labels) train = factory(outcome.report.seed).train;
    write_trial_dir(trial_dir(spec.label, t), outcome, train);
    std::lock_guard lock(count_mutex);
    ++done;
    std::cerr << "pujoint: [" << done << "/" << total << "] " << spec.label << " trial " << t << ": test error "
              << fixed(outcome.report.test_error) << "\n";
  };

  auto report = run_benchmark(specs, factory, o);
  if (resumed) std::cerr << "pujoint: resumed " << resumed << " completed trial(s) from " << dir.string() << "\n";

  std::vector<std::pair<std::string, std::vector<TrainingTrace>>> curves;
  for (const auto& spec : specs) {
    std::vector<TrainingTrace> traces;
    for (std::size_t t = 0; t < trials; ++t) traces.push_back(read_trace_csv(trial_dir(spec.label, t) / "trace.csv"));
    curves.emplace_back(spec.label, std::move(traces));
  }
  write_atomic(dir / "loss_curves.csv", render_loss_curves(curves), [](const std::string& s) {
    check_csv(s, "label,epoch,train_loss_mean,train_loss_std,val_loss_mean,val_loss_std");
  });
  return report;
}

void write_reports(const fs::path& dir, const std::vector<AggregateReport>& reports) {
  write_atomic(dir / "report.json", render_report_json(reports), [](const std::string& s) { validate_report_json(s); });
  write_atomic(dir / "report.csv", render_report_csv(reports), [](const std::string& s) {
    check_csv(s,
              "experiment,prior,label,method,init,trial,seed,test_error,recovery_error_labels,recovery_error_model,"
              "selected_epoch,validation_loss,split_fingerprint");
  });
}

void print_table(const AggregateReport& r) {
  std::cout << r.experiment;
  if (r.prior) std::cout << " (prior " << prior_name(*r.prior) << ")";
  std::cout << "\n";
  for (const auto& m : r.methods) {
    const auto te = m.test_error(), rm = m.recovery_error_model();
    std::cout << "  " << m.label << ": test error " << fixed(te.mean) << " +- " << fixed(te.std)
              << ", recovery error (model) " << fixed(rm.mean) << " +- " << fixed(rm.std);
    if (auto rl = m.recovery_error_labels())
      std::cout << ", recovery error (labels) " << fixed(rl->mean) << " +- " << fixed(rl->std);
    std::cout << "\n";
  }
}

int cmd_benchmark(const BenchArgs& a) {
  const auto config = load_experiment(a.config);
  const std::size_t trials = a.trials.value_or(config.trials);
  if (trials < 2) throw UsageError("a benchmark needs at least 2 trials");
  if (a.dry_run) return dry_run(config, {a.prior ? a.prior : config.prior}, trials);
  const double prior = resolve_prior(config, a.prior);
  const fs::path out = output_dir(a.out, config, config.name, "");
  std::vector<AggregateReport> reports{run_grid(config, prior, out, a.jobs, trials)};
  write_reports(out, reports);
  print_table(reports[0]);
  std::cerr << "pujoint: reports in " << out.string() << "\n";
  return 0;
}

int cmd_sweep(const BenchArgs& a) {
  const auto config = load_experiment(a.config);
  const std::size_t trials = a.trials.value_or(config.trials);
  if (trials < 2) throw UsageError("a sweep needs at least 2 trials");
  const auto priors = a.priors.empty() ? config.priors : a.priors;
  if (priors.empty()) throw UsageError("no priors given (set [experiment] priors or pass --priors)");
  const fs::path out = output_dir(a.out, config, config.name + "-sweep", "sweep");

  std::vector<AggregateReport> reports;
  for (double p : priors) {
    if (!(p > 0.0 && p < 1.0)) throw UsageError("prior " + prior_name(p) + " is outside (0,1)");
    for (Method m : config.methods) {
      try {
        config.train_config(m, p).validate(m);
      } catch (const ArgumentError& e) {
        throw ConfigError(a.config, 0, 0, "training settings for " + std::string(to_string(m)) + " at prior " +
                                              prior_name(p) + ": " + e.what());
      }
    }
  }
  if (a.dry_run) return dry_run(config, {priors.begin(), priors.end()}, trials);
  for (double p : priors) reports.push_back(run_grid(config, p, out / ("prior-" + prior_name(p)), a.jobs, trials));
  write_reports(out, reports);

  // one row per method, one test-error column pair per prior
  std::string header = "label";
  for (double p : priors) header += ",mean@" + prior_name(p) + ",std@" + prior_name(p);
  std::ostringstream table;
  table << header << "\n";
  for (std::size_t m = 0; m < reports[0].methods.size(); ++m) {
    table << reports[0].methods[m].label;
    for (const auto& r : reports) {
      const auto s = r.methods[m].test_error();
      table << ',' << fixed(s.mean, 4) << ',' << fixed(s.std, 4);
    }
    table << "\n";
  }
  write_atomic(out / "sweep.csv", table.str(), [header](const std::string& s) { check_csv(s, header); });
  for (const auto& r : reports) print_table(r);
  std::cerr << "pujoint: reports in " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pujoint: positive-unlabeled learning with joint pseudo-label optimisation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pujoint 0.1.0");

  const std::vector<std::string> kinds{"two-gaussians", "two-moons", "rings"};
  const std::vector<std::string> methods{"pn", "upu", "nnpu", "joint"};
  const std::vector<std::string> inits{"class-prior", "all-negative", "randomized-hard"};

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic labeled dataset as CSV");
  g->add_option("--kind", gen.kind, "Dataset family")->check(CLI::IsMember(kinds))->capture_default_str();
  g->add_option("--n", gen.n, "Number of rows")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--prior", gen.prior, "Positive fraction")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  g->add_option("--noise", gen.noise, "Noise scale")->check(CLI::NonNegativeNumber)->capture_default_str();
  g->add_option("--separation", gen.separation, "Class separation")->capture_default_str();
  g->add_option("--dim", gen.dim, "Feature dimension")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("--out", gen.out, "Output CSV (default: $PUJOINT_OUT_DIR or . )");
  g->add_flag("--force", gen.force, "Overwrite an existing file");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one model from an experiment config");
  t->add_option("config", tr.config, "Experiment config file")->required()->check(CLI::ExistingFile);
  t->add_option("--method", tr.method, "Training method")->required()->check(CLI::IsMember(methods));
  t->add_option("--init", tr.init, "Pseudo-label initialisation (joint only)")->check(CLI::IsMember(inits));
  t->add_option("--out", tr.out, "Output directory");
  t->add_option("--trial", tr.trial, "Trial index; the seed is base_seed + trial")->capture_default_str();
  t->add_option("--prior", tr.prior, "Override the class prior")->check(CLI::Range(0.0, 1.0));

  BenchArgs bench;
  auto* b = app.add_subcommand("benchmark", "Run the paired method x init x trial grid");
  b->add_option("config", bench.config, "Experiment config file")->required()->check(CLI::ExistingFile);
  b->add_option("--out", bench.out, "Output directory");
  b->add_option("--jobs", bench.jobs, "Trials run in parallel")->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--trials", bench.trials, "Override the trial count");
  b->add_option("--prior", bench.prior, "Override the class prior")->check(CLI::Range(0.0, 1.0));
  b->add_flag("--dry-run", bench.dry_run, "Print the resolved grid and exit");

  BenchArgs sw;
  auto* s = app.add_subcommand("sweep", "Run the benchmark at several class priors");
  s->add_option("config", sw.config, "Experiment config file")->required()->check(CLI::ExistingFile);
  s->add_option("--out", sw.out, "Output directory");
  s->add_option("--jobs", sw.jobs, "Trials run in parallel")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--trials", sw.trials, "Override the trial count");
  s->add_option("--priors", sw.priors, "Override the prior list")->delimiter(',');
  s->add_flag("--dry-run", sw.dry_run, "Print the resolved grid and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*t) return cmd_train(tr);
    if (*b) return cmd_benchmark(bench);
    return cmd_sweep(sw);
  } catch (const ConfigError& e) {
    std::cerr << "pujoint: config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const UsageError& e) {
    std::cerr << "pujoint: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "pujoint: error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}
