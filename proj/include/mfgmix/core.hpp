#pragma once

// Domain types shared by every module: probability vectors, stochastic
// matrices, value functions, mixture models and categorical datasets.
//
// State indices are 0-based throughout. All types are immutable once built;
// the only way to obtain one is through a validating factory or constructor.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mfgmix/error.hpp"

namespace mfgmix {

/// Probability vector over a finite state space.
class SimplexVector {
 public:
  /// Input tolerance on |sum - 1| used when no tolerance is given.
  static constexpr double kInputTolerance = 1e-9;
  /// The stored entries always sum to 1 within this bound.
  static constexpr double kStoredTolerance = 1e-12;

  /// Accepts `raw` when every entry is finite and non-negative and the sum is
  /// within `tolerance` of one. Entries are renormalized only when the sum is
  /// off by more than kStoredTolerance, so exact inputs keep their bits.
  static SimplexVector validate(std::span<const double> raw,
                                double tolerance = kInputTolerance);
  static SimplexVector uniform(std::size_t size);
  static SimplexVector vertex(std::size_t size, std::size_t index);

  std::size_t size() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> entries() const noexcept { return entries_; }
  double min_entry() const noexcept;

  bool operator==(const SimplexVector&) const = default;

 private:
  explicit SimplexVector(std::vector<double> entries) : entries_(std::move(entries)) {}
  std::vector<double> entries_;
};

inline SimplexVector validate_simplex(std::span<const double> raw,
                                      double tolerance = SimplexVector::kInputTolerance) {
  return SimplexVector::validate(raw, tolerance);
}

/// Square row-stochastic matrix, stored row-major.
class StochasticMatrix {
 public:
  static StochasticMatrix from_dense(std::size_t size, std::span<const double> row_major,
                                     double tolerance = SimplexVector::kInputTolerance);
  static StochasticMatrix from_rows(const std::vector<SimplexVector>& rows);
  static StochasticMatrix uniform(std::size_t size);
  static StochasticMatrix identity(std::size_t size);
  /// Every row equal to `row`.
  static StochasticMatrix repeat_row(const SimplexVector& row);

  std::size_t size() const noexcept { return size_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * size_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * size_, size_);
  }
  std::span<const double> data() const noexcept { return data_; }
  double min_entry() const noexcept;
  double max_abs_diff(const StochasticMatrix& other) const;

  bool operator==(const StochasticMatrix&) const = default;

 private:
  StochasticMatrix(std::size_t size, std::vector<double> data)
      : size_(size), data_(std::move(data)) {}
  std::size_t size_ = 0;
  std::vector<double> data_;
};

/// Relative value function, normalized so the entries sum to zero.
class ValueVector {
 public:
  static constexpr double kSumTolerance = 1e-10;

  /// Throws InvalidArgument if |sum| exceeds kSumTolerance.
  static ValueVector from(std::vector<double> values);
  /// Subtracts the mean so the result sums to zero.
  static ValueVector centered(std::vector<double> values);
  static ValueVector zero(std::size_t size) { return ValueVector(std::vector<double>(size, 0.0)); }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  double sum() const noexcept;

 private:
  explicit ValueVector(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

using State = std::uint16_t;

/// N samples of D categorical coordinates with values in {0, ..., S-1}.
class Dataset {
 public:
  Dataset(std::size_t num_samples, std::size_t num_dims, std::size_t num_states,
          std::vector<State> samples, std::optional<std::vector<int>> labels = std::nullopt);

  std::size_t num_samples() const noexcept { return num_samples_; }
  std::size_t num_dims() const noexcept { return num_dims_; }
  std::size_t num_states() const noexcept { return num_states_; }
  std::span<const State> sample(std::size_t n) const {
    return std::span<const State>(samples_).subspan(n * num_dims_, num_dims_);
  }
  std::span<const State> samples() const noexcept { return samples_; }
  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::optional<std::vector<int>>& labels() const noexcept { return labels_; }

  bool operator==(const Dataset&) const = default;

 private:
  std::size_t num_samples_;
  std::size_t num_dims_;
  std::size_t num_states_;
  std::vector<State> samples_;
  std::optional<std::vector<int>> labels_;
};

/// Mixture of K product-form categorical distributions over D coordinates.
class MixtureModel {
 public:
  /// `components` is K*D vectors ordered k-major then d, each of length S.
  MixtureModel(SimplexVector weights, std::size_t num_dims, std::vector<SimplexVector> components);

  std::size_t num_components() const noexcept { return weights_.size(); }
  std::size_t num_dims() const noexcept { return num_dims_; }
  std::size_t num_states() const noexcept { return num_states_; }
  const SimplexVector& weights() const noexcept { return weights_; }
  const SimplexVector& component(std::size_t k, std::size_t d) const {
    return components_[k * num_dims_ + d];
  }
  const std::vector<SimplexVector>& components() const noexcept { return components_; }

  /// log pi_k(x) = sum_d log pi_k^d(x^d); -inf when some factor is zero.
  double log_component_mass(std::size_t k, std::span<const State> sample) const;
  /// Throws DimensionMismatch unless D and S agree with `data`.
  void check_compatible(const Dataset& data) const;

  bool operator==(const MixtureModel&) const = default;

 private:
  SimplexVector weights_;
  std::size_t num_dims_;
  std::size_t num_states_;
  std::vector<SimplexVector> components_;
};

/// Solution of one stationary subsystem: value function, ergodic constant,
/// invariant distribution and optimal transition matrix.
struct MfgSolution {
  ValueVector value;
  double ergodic_cost = 0.0;
  SimplexVector distribution;
  StochasticMatrix transition;
  double hjb_residual = 0.0;
  double fp_residual = 0.0;
  std::size_t policy_iterations = 0;
  bool converged = false;
};

}  // namespace mfgmix
