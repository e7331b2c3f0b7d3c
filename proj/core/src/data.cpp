#include "pujoint/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "pujoint/errors.hpp"
#include "pujoint/random.hpp"

namespace pujoint {

namespace {

void check_prior(double prior) {
  if (!(prior > 0.0 && prior < 1.0)) {
    throw ArgumentError("class prior must lie in (0,1), got " + std::to_string(prior));
  }
}

std::vector<std::size_t> iota_vec(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

void sample_point(const SyntheticSpec& spec, bool positive, Rng& rng, std::span<double> out) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  switch (spec.kind) {
    case SyntheticKind::two_gaussians: {
      const double mean = positive ? spec.separation : -spec.separation;
      for (double& v : out) v = mean + spec.noise * gauss(rng);
      return;
    }
    case SyntheticKind::two_moons: {
      std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
      const double t = angle(rng);
      if (positive) {
        out[0] = std::cos(t);
        out[1] = std::sin(t);
      } else {
        out[0] = 1.0 - std::cos(t);
        out[1] = 1.0 - std::sin(t) - spec.separation;
      }
      out[0] += spec.noise * gauss(rng);
      out[1] += spec.noise * gauss(rng);
      for (std::size_t k = 2; k < out.size(); ++k) out[k] = spec.noise * gauss(rng);
      return;
    }
    case SyntheticKind::rings: {
      std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
      const double t = angle(rng);
      const double radius = (positive ? 1.0 : 1.0 + spec.separation) + spec.noise * gauss(rng);
      out[0] = radius * std::cos(t);
      out[1] = radius * std::sin(t);
      for (std::size_t k = 2; k < out.size(); ++k) out[k] = spec.noise * gauss(rng);
      return;
    }
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw FormatError("CSV line " + std::to_string(line_no) + ": '" + text + "' is not a number");
  }
  return v;
}

std::uint32_t read_be32(std::istream& in, const std::string& what) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw FormatError(what + ": truncated header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

}  // namespace

std::size_t LabeledDataset::positives() const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

double LabeledDataset::positive_fraction() const {
  if (labels.empty()) throw ArgumentError("positive_fraction of empty dataset");
  return static_cast<double>(positives()) / static_cast<double>(labels.size());
}

void LabeledDataset::validate() const {
  if (features.rows() != labels.size()) {
    throw ShapeError("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw ArgumentError("labels must be 0 or 1");
  }
  if (!features.all_finite()) throw ArgumentError("dataset features must be finite");
}

std::string_view to_string(SyntheticKind kind) noexcept {
  switch (kind) {
    case SyntheticKind::two_gaussians: return "two-gaussians";
    case SyntheticKind::two_moons: return "two-moons";
    case SyntheticKind::rings: return "rings";
  }
  return "unknown";
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "two-gaussians") return SyntheticKind::two_gaussians;
  if (name == "two-moons") return SyntheticKind::two_moons;
  if (name == "rings") return SyntheticKind::rings;
  throw ArgumentError("unknown synthetic dataset kind '" + std::string(name) +
                      "' (expected two-gaussians, two-moons or rings)");
}

LabeledDataset generate_synthetic_counts(const SyntheticSpec& spec, std::size_t n_positive,
                                         std::size_t n_negative, std::uint64_t seed) {
  if (spec.dim == 0) throw ArgumentError("synthetic dimension must be positive");
  if (spec.kind != SyntheticKind::two_gaussians && spec.dim < 2) {
    throw ArgumentError(std::string(to_string(spec.kind)) + " needs dim >= 2");
  }
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.separation)) {
    throw ArgumentError("synthetic noise must be nonnegative and separation finite");
  }
  const std::size_t n = n_positive + n_negative;
  Rng rng = make_rng(seed, "synthetic");

  Matrix raw(n, spec.dim);
  std::vector<int> raw_labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = i < n_positive;
    raw_labels[i] = positive ? 1 : 0;
    sample_point(spec, positive, rng, raw.row(i));
  }

  auto order = iota_vec(n);
  std::shuffle(order.begin(), order.end(), rng);
  LabeledDataset out{raw.select_rows(order), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = raw_labels[order[i]];
  return out;
}

LabeledDataset generate_synthetic(const SyntheticSpec& spec, std::size_t n, double prior,
                                  std::uint64_t seed) {
  if (n < 2) throw ArgumentError("synthetic dataset needs n >= 2");
  check_prior(prior);
  const auto n_positive = static_cast<std::size_t>(std::llround(static_cast<double>(n) * prior));
  return generate_synthetic_counts(spec, n_positive, n - n_positive, seed);
}

PUSplit make_pu_split(const LabeledDataset& data, std::size_t n_p, std::size_t n_u, double prior,
                      std::uint64_t seed) {
  check_prior(prior);
  data.validate();
  if (n_p == 0 || n_u == 0) throw ArgumentError("PU split needs n_p >= 1 and n_u >= 1");

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < data.size(); ++i) (data.labels[i] == 1 ? pos : neg).push_back(i);

  const auto u_pos = static_cast<std::size_t>(std::llround(static_cast<double>(n_u) * prior));
  const std::size_t u_neg = n_u - u_pos;
  if (pos.size() < n_p + u_pos || neg.size() < u_neg) {
    throw ArgumentError("PU split needs " + std::to_string(n_p + u_pos) + " positives and " +
                        std::to_string(u_neg) + " negatives; data has " + std::to_string(pos.size()) +
                        " and " + std::to_string(neg.size()));
  }

  Rng rng = make_rng(seed, "pu-split");
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  std::vector<std::size_t> p_rows(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_p));
  std::vector<std::pair<std::size_t, int>> u_rows;
  u_rows.reserve(n_u);
  for (std::size_t k = 0; k < u_pos; ++k) u_rows.emplace_back(pos[n_p + k], 1);
  for (std::size_t k = 0; k < u_neg; ++k) u_rows.emplace_back(neg[k], 0);
  std::shuffle(u_rows.begin(), u_rows.end(), rng);

  std::vector<std::size_t> u_index(n_u);
  PUSplit split;
  split.u_truth.resize(n_u);
  for (std::size_t k = 0; k < n_u; ++k) {
    u_index[k] = u_rows[k].first;
    split.u_truth[k] = u_rows[k].second;
  }
  split.sample.positive = data.features.select_rows(p_rows);
  split.sample.unlabeled = data.features.select_rows(u_index);
  split.sample.prior = prior;
  return split;
}

std::size_t round_half_down(double x) {
  if (!(x >= 0.0)) throw ArgumentError("round_half_down expects a nonnegative value");
  return static_cast<std::size_t>(std::ceil(x - 0.5));
}

namespace {

// Chooses round_half_down(n * fraction) validation rows; both index lists sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_indices(std::size_t n, double fraction,
                                                                                Rng& rng,
                                                                                const char* what) {
  const std::size_t k = round_half_down(static_cast<double>(n) * fraction);
  if (k == 0 || k >= n) {
    throw ArgumentError(std::string("validation split of ") + what + " (" + std::to_string(n) +
                        " rows) at fraction " + std::to_string(fraction) + " leaves an empty part");
  }
  auto order = iota_vec(n);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(val)};
}

void check_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ArgumentError("validation fraction must lie in (0,1)");
}

PUSplit take(const PUSplit& split, std::span<const std::size_t> p_rows, std::span<const std::size_t> u_rows) {
  PUSplit out;
  out.sample.positive = split.sample.positive.select_rows(p_rows);
  out.sample.unlabeled = split.sample.unlabeled.select_rows(u_rows);
  out.sample.prior = split.sample.prior;
  out.u_truth.reserve(u_rows.size());
  for (std::size_t i : u_rows) out.u_truth.push_back(split.u_truth[i]);
  return out;
}

}  // namespace

std::pair<PUSplit, PUSplit> split_validation(const PUSplit& split, double fraction, std::uint64_t seed) {
  check_fraction(fraction);
  if (split.u_truth.size() != split.sample.n_u()) throw ShapeError("PU split truth/rows mismatch");
  Rng rng = make_rng(seed, "validation-split");
  auto [p_train, p_val] = partition_indices(split.sample.n_p(), fraction, rng, "P");
  auto [u_train, u_val] = partition_indices(split.sample.n_u(), fraction, rng, "U");
  return {take(split, p_train, u_train), take(split, p_val, u_val)};
}

std::pair<LabeledDataset, LabeledDataset> split_validation(const LabeledDataset& data, double fraction,
                                                           std::uint64_t seed) {
  check_fraction(fraction);
  data.validate();
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < data.size(); ++i) (data.labels[i] == 1 ? pos : neg).push_back(i);
  Rng rng = make_rng(seed, "validation-split");
  auto [p_train, p_val] = partition_indices(pos.size(), fraction, rng, "positives");
  auto [n_train, n_val] = partition_indices(neg.size(), fraction, rng, "negatives");

  auto gather = [&](const std::vector<std::size_t>& pi, const std::vector<std::size_t>& ni) {
    std::vector<std::size_t> rows;
    for (std::size_t k : pi) rows.push_back(pos[k]);
    for (std::size_t k : ni) rows.push_back(neg[k]);
    std::sort(rows.begin(), rows.end());
    LabeledDataset out{data.features.select_rows(rows), {}};
    for (std::size_t r : rows) out.labels.push_back(data.labels[r]);
    return out;
  };
  return {gather(p_train, n_train), gather(p_val, n_val)};
}

LabeledDataset to_labeled(const PUSplit& split) {
  LabeledDataset out{vstack(split.sample.positive, split.sample.unlabeled), {}};
  out.labels.assign(split.sample.n_p(), 1);
  out.labels.insert(out.labels.end(), split.u_truth.begin(), split.u_truth.end());
  return out;
}

LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                        const std::set<int>& positive_classes) {
  std::ifstream img(images, std::ios::binary);
  if (!img) throw FormatError("cannot open IDX image file " + images.string());
  std::ifstream lab(labels, std::ios::binary);
  if (!lab) throw FormatError("cannot open IDX label file " + labels.string());

  if (read_be32(img, images.string()) != 0x00000803) throw FormatError(images.string() + ": bad IDX image magic");
  const std::uint32_t n_images = read_be32(img, images.string());
  const std::uint32_t rows = read_be32(img, images.string());
  const std::uint32_t cols = read_be32(img, images.string());
  if (read_be32(lab, labels.string()) != 0x00000801) throw FormatError(labels.string() + ": bad IDX label magic");
  const std::uint32_t n_labels = read_be32(lab, labels.string());
  if (n_images != n_labels) {
    throw FormatError("IDX image count " + std::to_string(n_images) + " != label count " +
                      std::to_string(n_labels));
  }

  const std::size_t dim = std::size_t{rows} * cols;
  std::vector<unsigned char> pixels(std::size_t{n_images} * dim);
  img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (static_cast<std::size_t>(img.gcount()) != pixels.size()) throw FormatError(images.string() + ": truncated pixel data");
  std::vector<unsigned char> digits(n_labels);
  lab.read(reinterpret_cast<char*>(digits.data()), static_cast<std::streamsize>(digits.size()));
  if (static_cast<std::size_t>(lab.gcount()) != digits.size()) throw FormatError(labels.string() + ": truncated label data");

  LabeledDataset out{Matrix(n_images, dim), std::vector<int>(n_images)};
  auto values = out.features.values();
  for (std::size_t k = 0; k < pixels.size(); ++k) values[k] = pixels[k] / 255.0;
  for (std::size_t i = 0; i < n_labels; ++i) out.labels[i] = positive_classes.contains(digits[i]) ? 1 : 0;
  return out;
}

void write_csv(const LabeledDataset& data, std::ostream& out) {
  data.validate();
  out << "label";
  for (std::size_t k = 0; k < data.dim(); ++k) out << ",x" << k;
  out << '\n';
  std::array<char, 32> buf{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (double v : data.features.row(i)) {
      std::snprintf(buf.data(), buf.size(), "%.17g", v);
      out << ',' << buf.data();
    }
    out << '\n';
  }
}

LabeledDataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("CSV is empty (missing header row)");
  const auto header = split_csv_line(line);
  const auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) throw FormatError("CSV header has no 'label' column");
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t dim = header.size() - 1;

  LabeledDataset out;
  std::vector<double> row(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw FormatError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(fields.size()));
    }
    std::size_t k = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const double v = parse_double(fields[c], line_no);
      if (c == label_col) {
        if (v != 0.0 && v != 1.0) throw FormatError("CSV line " + std::to_string(line_no) + ": label must be 0 or 1");
        out.labels.push_back(static_cast<int>(v));
      } else {
        row[k++] = v;
      }
    }
    if (dim == 0) {
      throw FormatError("CSV has no feature columns");
    }
    out.features.append_row(row);
  }
  if (out.labels.empty()) throw FormatError("CSV has no data rows");
  return out;
}

LabeledDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open CSV " + path.string());
  return read_csv(in);
}

std::size_t batch_count_for(std::size_t n_first, std::size_t n_second, std::size_t batch_size) {
  if (batch_size == 0) throw ArgumentError("batch size must be >= 1");
  if (n_first == 0 || n_second == 0) throw ArgumentError("both populations must be nonempty");
  const std::size_t wanted = (n_first + n_second + batch_size - 1) / batch_size;
  return std::clamp<std::size_t>(wanted, 1, std::min(n_first, n_second));
}

std::vector<BatchIndices> deal_batches(std::size_t n_first, std::size_t n_second, std::size_t count,
                                       std::uint64_t seed, std::uint64_t epoch) {
  if (count == 0) throw ArgumentError("batch count must be >= 1");
  if (count > std::min(n_first, n_second)) {
    throw ArgumentError("batch count " + std::to_string(count) + " would leave a batch without rows of one population");
  }
  Rng rng = make_rng(seed, "batches", epoch);
  auto first = iota_vec(n_first);
  auto second = iota_vec(n_second);
  std::shuffle(first.begin(), first.end(), rng);
  std::shuffle(second.begin(), second.end(), rng);

  std::vector<BatchIndices> batches(count);
  for (std::size_t j = 0; j < count; ++j) {
    const auto deal = [&](const std::vector<std::size_t>& src, std::vector<std::size_t>& dst) {
      const std::size_t lo = j * src.size() / count;
      const std::size_t hi = (j + 1) * src.size() / count;
      dst.assign(src.begin() + static_cast<std::ptrdiff_t>(lo), src.begin() + static_cast<std::ptrdiff_t>(hi));
    };
    deal(first, batches[j].first);
    deal(second, batches[j].second);
  }
  return batches;
}

std::vector<MiniBatch> shuffle_batches(const PUSample& sample, std::span<const double> pseudo_labels,
                                       std::size_t batch_count, std::uint64_t seed, std::uint64_t epoch) {
  if (pseudo_labels.size() != sample.n_u()) {
    throw ShapeError("shuffle_batches: " + std::to_string(pseudo_labels.size()) + " labels for " +
                     std::to_string(sample.n_u()) + " unlabeled rows");
  }
  auto plan = deal_batches(sample.n_p(), sample.n_u(), batch_count, seed, epoch);
  std::vector<MiniBatch> out;
  out.reserve(plan.size());
  for (auto& b : plan) {
    MiniBatch mb;
    mb.positive = sample.positive.select_rows(b.first);
    mb.unlabeled = sample.unlabeled.select_rows(b.second);
    mb.labels.reserve(b.second.size());
    for (std::size_t i : b.second) mb.labels.push_back(pseudo_labels[i]);
    mb.u_index = std::move(b.second);
    out.push_back(std::move(mb));
  }
  return out;
}

std::uint64_t fingerprint(const PUSplit& split) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const auto feed_matrix = [&](const Matrix& m) {
    const std::array<std::size_t, 2> dims{m.rows(), m.cols()};
    feed(dims.data(), sizeof(dims));
    feed(m.values().data(), m.values().size() * sizeof(double));
  };
  feed_matrix(split.sample.positive);
  feed_matrix(split.sample.unlabeled);
  feed(&split.sample.prior, sizeof(double));
  feed(split.u_truth.data(), split.u_truth.size() * sizeof(int));
  return h;
}

}  // namespace pujoint
