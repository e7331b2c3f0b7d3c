#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "pujoint/matrix.hpp"

namespace pujoint {

// Features plus ground-truth labels (1 = positive, 0 = negative).
struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }
  std::size_t positives() const noexcept;
  double positive_fraction() const;

  // Throws ShapeError / ArgumentError if labels and features disagree or
  // labels are not in {0,1} or features are not finite.
  void validate() const;

  bool operator==(const LabeledDataset&) const = default;
};

enum class SyntheticKind { two_gaussians, two_moons, rings };

std::string_view to_string(SyntheticKind kind) noexcept;
SyntheticKind parse_synthetic_kind(std::string_view name);

// two_gaussians: N(+s*1, noise^2 I) positive, N(-s*1, noise^2 I) negative in `dim` dimensions.
// two_moons:     upper/lower interleaved half circles (offset scaled by `separation`) plus
//                isotropic Gaussian noise; extra dimensions carry pure noise.
// rings:         positive on radius 1, negative on radius 1 + separation, radial noise.
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::two_gaussians;
  std::size_t dim = 2;
  double separation = 1.0;
  double noise = 1.0;
};

// Exactly round(n * prior) positives, rows shuffled. Deterministic in `seed`.
LabeledDataset generate_synthetic(const SyntheticSpec& spec, std::size_t n, double prior,
                                  std::uint64_t seed);
LabeledDataset generate_synthetic_counts(const SyntheticSpec& spec, std::size_t n_positive,
                                         std::size_t n_negative, std::uint64_t seed);

// Everything a PU trainer is allowed to see.
struct PUSample {
  Matrix positive;   // X_p
  Matrix unlabeled;  // X_u
  double prior = 0.5;

  std::size_t n_p() const noexcept { return positive.rows(); }
  std::size_t n_u() const noexcept { return unlabeled.rows(); }
  std::size_t dim() const noexcept { return positive.cols(); }
};

// A PU sample plus the hidden ground truth of X_u, for evaluation only.
struct PUSplit {
  PUSample sample;
  std::vector<int> u_truth;
};

// X_p from positives only; X_u with exactly round(n_u * prior) hidden positives,
// disjoint from X_p. Sampling without replacement.
PUSplit make_pu_split(const LabeledDataset& data, std::size_t n_p, std::size_t n_u, double prior,
                      std::uint64_t seed);

// round(x) with ties going down.
std::size_t round_half_down(double x);

// Partitions P and U at the same fraction. Returns (train, validation).
std::pair<PUSplit, PUSplit> split_validation(const PUSplit& split, double fraction, std::uint64_t seed);

// Labeled-data analogue used by the PN baseline: partitions positives and
// negatives separately at `fraction`. Returns (train, validation).
std::pair<LabeledDataset, LabeledDataset> split_validation(const LabeledDataset& data, double fraction,
                                                           std::uint64_t seed);

// Converts a PU split into fully labeled data (X_p as 1, X_u with its hidden truth).
LabeledDataset to_labeled(const PUSplit& split);

// MNIST-style IDX files. Pixels scaled to [0,1]; label 1 iff digit is in positive_classes.
LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                        const std::set<int>& positive_classes);

// CSV with a header row, a `label` column of {0,1} and numeric feature columns.
void write_csv(const LabeledDataset& data, std::ostream& out);
LabeledDataset read_csv(std::istream& in);
LabeledDataset load_csv(const std::filesystem::path& path);

// Indices of one mini-batch into the two populations.
struct BatchIndices {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};

// Shuffles both populations (stream derived from seed and epoch) and deals each
// into `count` contiguous near-equal chunks. Every index appears exactly once.
std::vector<BatchIndices> deal_batches(std::size_t n_first, std::size_t n_second, std::size_t count,
                                       std::uint64_t seed, std::uint64_t epoch);

// Batch count for a nominal batch size over both populations, capped so that
// every batch holds at least one row of each population.
std::size_t batch_count_for(std::size_t n_first, std::size_t n_second, std::size_t batch_size);

struct MiniBatch {
  Matrix positive;
  Matrix unlabeled;
  std::vector<std::size_t> u_index;  // global row index into X_u
  std::vector<double> labels;        // current pseudo-labels of those rows
};

std::vector<MiniBatch> shuffle_batches(const PUSample& sample, std::span<const double> pseudo_labels,
                                       std::size_t batch_count, std::uint64_t seed, std::uint64_t epoch);

// FNV-1a over the bytes of a split; used to check that methods see identical data.
std::uint64_t fingerprint(const PUSplit& split);

}  // namespace pujoint
