#include "artifacts.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include <pujoint/errors.hpp>

namespace pujoint::cli {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError(where + ": bad number '" + s + "'");
  return v;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content,
                  const std::function<void(const std::string&)>& validate) {
  if (validate) validate(content);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string() + ": " + std::strerror(errno));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void check_csv(const std::string& content, const std::string& header) {
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line) || line != header) throw FormatError("csv header mismatch, expected '" + header + "'");
  const auto columns = std::count(header.begin(), header.end(), ',');
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (std::count(line.begin(), line.end(), ',') != columns)
      throw FormatError("csv line " + std::to_string(n) + " has the wrong number of fields");
  }
  if (content.empty() || content.back() != '\n') throw FormatError("csv does not end with a newline");
}

void check_trace_csv(const std::string& content) {
  check_csv(content, "epoch,train_loss,val_loss,lambda,mean_pseudo_label,clamp_count");
  std::istringstream in(content);
  std::string line;
  std::getline(in, line);
  int expected = 1;
  while (std::getline(in, line)) {
    auto f = split_fields(line);
    if (static_cast<int>(to_double(f[0], "trace")) != expected++) throw FormatError("trace epochs are not 1..n");
    for (int k : {1, 2})
      if (!std::isfinite(to_double(f[k], "trace"))) throw FormatError("trace holds a non-finite loss");
  }
  if (expected == 1) throw FormatError("trace is empty");
}

void check_checkpoint(const std::string& content) {
  std::istringstream in(content);
  read_checkpoint(in);
}

void check_dataset_csv(const std::string& content) {
  std::istringstream in(content);
  read_csv(in);
}

std::string render_trace(const TrainingTrace& trace) {
  std::ostringstream out;
  write_trace_csv(trace, out);
  return out.str();
}

std::string render_checkpoint(const MLPModel& model) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(model, out);
  return out.str();
}

std::string render_labels(std::span<const double> labels, std::span<const int> truth) {
  std::ostringstream out;
  write_label_snapshot(out, labels, truth);
  return out.str();
}

std::string render_report_json(std::span<const AggregateReport> reports) {
  std::ostringstream out;
  write_report_json(reports, out);
  return out.str();
}

std::string render_report_csv(std::span<const AggregateReport> reports) {
  std::ostringstream out;
  write_report_csv(reports, out);
  return out.str();
}

TrainingTrace read_trace_csv(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  check_trace_csv(content);
  TrainingTrace trace;
  std::istringstream in(content);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    auto f = split_fields(line);
    EpochRecord r;
    r.epoch = static_cast<int>(to_double(f[0], path.string()));
    r.train_loss = to_double(f[1], path.string());
    r.val_loss = to_double(f[2], path.string());
    if (!f[3].empty()) r.lambda = to_double(f[3], path.string());
    if (!f[4].empty()) r.mean_pseudo_label = to_double(f[4], path.string());
    r.clamp_count = static_cast<std::size_t>(to_double(f[5], path.string()));
    trace.epochs.push_back(r);
  }
  return trace;
}

std::string label_dir(const std::string& label) {
  std::string s = label;
  std::replace(s.begin(), s.end(), '/', '-');
  return s;
}

void write_trial_dir(const std::filesystem::path& dir, const TrialOutcome& outcome, const PUSplit& train) {
  write_atomic(dir / "trace.csv", render_trace(outcome.trace), check_trace_csv);
  write_atomic(dir / "model.bin", render_checkpoint(outcome.model), check_checkpoint);
  if (outcome.final_labels)
    write_atomic(dir / "labels.csv", render_labels(*outcome.final_labels, train.u_truth),
                 [](const std::string& s) { check_csv(s, "index,y,truth"); });
  // report last: its presence marks the trial as complete
  write_atomic(dir / "report.json", trial_report_to_json(outcome.report),
               [](const std::string& s) { trial_report_from_json(s); });
}

std::string render_loss_curves(const std::vector<std::pair<std::string, std::vector<TrainingTrace>>>& traces) {
  std::ostringstream out;
  out << "label,epoch,train_loss_mean,train_loss_std,val_loss_mean,val_loss_std\n";
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  for (const auto& [label, runs] : traces) {
    std::size_t epochs = 0;
    for (const auto& t : runs) epochs = std::max(epochs, t.epochs.size());
    for (std::size_t e = 0; e < epochs; ++e) {
      std::vector<double> train, val;
      for (const auto& t : runs) {
        if (e >= t.epochs.size()) continue;
        train.push_back(t.epochs[e].train_loss);
        val.push_back(t.epochs[e].val_loss);
      }
      const auto st = summarize(train), sv = summarize(val);
      out << label << ',' << e + 1 << ',' << num(st.mean) << ',' << num(st.std) << ',' << num(sv.mean) << ','
          << num(sv.std) << '\n';
    }
  }
  return out.str();
}

}  // namespace pujoint::cli
