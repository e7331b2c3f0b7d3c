#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <pujoint/evaluation.hpp>

namespace pujoint::cli {

// Validates `content`, writes it to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content,
                  const std::function<void(const std::string&)>& validate = {});

// Content checks; each throws FormatError.
void check_csv(const std::string& content, const std::string& header);
void check_trace_csv(const std::string& content);
void check_checkpoint(const std::string& content);
void check_dataset_csv(const std::string& content);

std::string render_trace(const TrainingTrace& trace);
std::string render_checkpoint(const MLPModel& model);
std::string render_labels(std::span<const double> labels, std::span<const int> truth);
std::string render_report_json(std::span<const AggregateReport> reports);
std::string render_report_csv(std::span<const AggregateReport> reports);

TrainingTrace read_trace_csv(const std::filesystem::path& path);

// Per-trial artifacts of one benchmark trial.
void write_trial_dir(const std::filesystem::path& dir, const TrialOutcome& outcome, const PUSplit& train);

// label,epoch,train_loss_mean,train_loss_std,val_loss_mean,val_loss_std over trials.
std::string render_loss_curves(const std::vector<std::pair<std::string, std::vector<TrainingTrace>>>& traces);

std::string read_file(const std::filesystem::path& path);

// "joint/class-prior" -> "joint-class-prior"
std::string label_dir(const std::string& label);

}  // namespace pujoint::cli
