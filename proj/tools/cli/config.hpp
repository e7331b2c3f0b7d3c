#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <pujoint/evaluation.hpp>

namespace pujoint::cli {

// Problem in a config file; line/column are 1-based, 0 when not tied to a location.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& file, int line, int column, const std::string& message);
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

struct Entry {
  std::string value;
  int line = 0;
  int column = 0;  // column of the value
  int key_column = 0;
};

// section name -> key -> entry, in file order of sections.
struct IniDocument {
  std::string file;
  std::vector<std::string> section_order;
  std::map<std::string, std::map<std::string, Entry>> sections;
  std::map<std::string, int> section_lines;
};

IniDocument parse_ini(const std::string& text, const std::string& file);

struct DatasetConfig {
  std::string source = "synthetic";  // synthetic | csv | idx
  SyntheticSpec synthetic{SyntheticKind::two_gaussians, 2, 1.2, 1.0};
  std::size_t n_p = 100;
  std::size_t n_u = 1000;
  std::size_t n_test = 10000;
  std::filesystem::path path, test_path;
  std::filesystem::path images, labels, test_images, test_labels;
  std::set<int> positive_classes{0, 2, 4, 6, 8};
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::size_t trials = 10;
  std::uint64_t base_seed = 0;
  std::optional<double> prior;
  std::vector<double> priors;
  std::optional<std::filesystem::path> output;
  double val_fraction = 0.2;

  DatasetConfig dataset;
  std::vector<Method> methods{Method::nnpu, Method::joint};
  std::vector<InitStrategy> inits{InitStrategy::class_prior};

  // Method x init grid with the [train], [train.<method>], [train@<prior>] and
  // [train.<method>@<prior>] sections applied in that order.
  std::vector<MethodSpec> method_specs(std::optional<double> prior) const;
  TrainConfig train_config(Method method, std::optional<double> prior) const;

  IniDocument document;
};

ExperimentConfig load_experiment(const std::filesystem::path& path);
ExperimentConfig parse_experiment(const std::string& text, const std::string& file);

// Prior used for trials: [experiment] prior, else the pool's positive fraction for file sources.
double resolve_prior(const ExperimentConfig& config, std::optional<double> prior_override);

TrialDataFactory make_factory(const ExperimentConfig& config, double prior);

}  // namespace pujoint::cli
