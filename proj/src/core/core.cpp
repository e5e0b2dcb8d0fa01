#include "mfgmix/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mfgmix {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::MassMismatch: return "MassMismatch";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::ZeroProbabilityWithEntropy: return "ZeroProbabilityWithEntropy";
    case ErrorCode::NonconvergentRootFind: return "NonconvergentRootFind";
    case ErrorCode::UnsupportedCost: return "UnsupportedCost";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::NonUniqueStationary: return "NonUniqueStationary";
    case ErrorCode::PositivityViolation: return "PositivityViolation";
    case ErrorCode::AllComponentsVanish: return "AllComponentsVanish";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DimensionOverflow: return "DimensionOverflow";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

// ---------------------------------------------------------------- simplex

SimplexVector SimplexVector::validate(std::span<const double> raw, double tolerance) {
  if (!(tolerance >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative tolerance");
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = raw[i];
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "entry " + std::to_string(i) + " is not finite");
    }
    if (v < 0.0) {
      throw Error(ErrorCode::NegativeEntry,
                  "entry " + std::to_string(i) + " = " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw Error(ErrorCode::MassMismatch, "entries sum to " + std::to_string(sum));
  }
  std::vector<double> entries(raw.begin(), raw.end());
  if (std::abs(sum - 1.0) > kStoredTolerance) {
    for (double& v : entries) v /= sum;
  }
  return SimplexVector(std::move(entries));
}

SimplexVector SimplexVector::uniform(std::size_t size) {
  if (size == 0) throw Error(ErrorCode::InvalidArgument, "empty simplex");
  return SimplexVector(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

SimplexVector SimplexVector::vertex(std::size_t size, std::size_t index) {
  if (index >= size) throw Error(ErrorCode::InvalidArgument, "vertex index out of range");
  std::vector<double> e(size, 0.0);
  e[index] = 1.0;
  return SimplexVector(std::move(e));
}

double SimplexVector::min_entry() const noexcept {
  return entries_.empty() ? 0.0 : *std::min_element(entries_.begin(), entries_.end());
}

// ---------------------------------------------------------------- matrix

StochasticMatrix StochasticMatrix::from_dense(std::size_t size, std::span<const double> row_major,
                                              double tolerance) {
  if (size == 0) throw Error(ErrorCode::InvalidArgument, "empty matrix");
  if (row_major.size() != size * size) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(size * size) +
                                                  " entries, got " +
                                                  std::to_string(row_major.size()));
  }
  std::vector<double> data;
  data.reserve(size * size);
  for (std::size_t i = 0; i < size; ++i) {
    const auto row = SimplexVector::validate(row_major.subspan(i * size, size), tolerance);
    data.insert(data.end(), row.entries().begin(), row.entries().end());
  }
  return StochasticMatrix(size, std::move(data));
}

StochasticMatrix StochasticMatrix::from_rows(const std::vector<SimplexVector>& rows) {
  const std::size_t size = rows.size();
  if (size == 0) throw Error(ErrorCode::InvalidArgument, "empty matrix");
  std::vector<double> data;
  data.reserve(size * size);
  for (const auto& r : rows) {
    if (r.size() != size) throw Error(ErrorCode::DimensionMismatch, "row length != row count");
    data.insert(data.end(), r.entries().begin(), r.entries().end());
  }
  return StochasticMatrix(size, std::move(data));
}

StochasticMatrix StochasticMatrix::uniform(std::size_t size) {
  return repeat_row(SimplexVector::uniform(size));
}

StochasticMatrix StochasticMatrix::identity(std::size_t size) {
  if (size == 0) throw Error(ErrorCode::InvalidArgument, "empty matrix");
  std::vector<double> data(size * size, 0.0);
  for (std::size_t i = 0; i < size; ++i) data[i * size + i] = 1.0;
  return StochasticMatrix(size, std::move(data));
}

StochasticMatrix StochasticMatrix::repeat_row(const SimplexVector& row) {
  const std::size_t size = row.size();
  std::vector<double> data;
  data.reserve(size * size);
  for (std::size_t i = 0; i < size; ++i) {
    data.insert(data.end(), row.entries().begin(), row.entries().end());
  }
  return StochasticMatrix(size, std::move(data));
}

double StochasticMatrix::min_entry() const noexcept {
  return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

double StochasticMatrix::max_abs_diff(const StochasticMatrix& other) const {
  if (other.size_ != size_) throw Error(ErrorCode::DimensionMismatch, "matrix sizes differ");
  double m = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::abs(data_[i] - other.data_[i]));
  return m;
}

// ---------------------------------------------------------------- values

ValueVector ValueVector::from(std::vector<double> values) {
  ValueVector v(std::move(values));
  if (std::abs(v.sum()) > kSumTolerance) {
    throw Error(ErrorCode::InvalidArgument,
                "value vector sums to " + std::to_string(v.sum()) + ", expected 0");
  }
  return v;
}

ValueVector ValueVector::centered(std::vector<double> values) {
  if (values.empty()) return ValueVector(std::move(values));
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  for (double& x : values) x -= mean;
  return ValueVector(std::move(values));
}

double ValueVector::sum() const noexcept {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

// ---------------------------------------------------------------- dataset

Dataset::Dataset(std::size_t num_samples, std::size_t num_dims, std::size_t num_states,
                 std::vector<State> samples, std::optional<std::vector<int>> labels)
    : num_samples_(num_samples),
      num_dims_(num_dims),
      num_states_(num_states),
      samples_(std::move(samples)),
      labels_(std::move(labels)) {
  if (num_states_ < 1 || num_states_ > std::numeric_limits<State>::max() + std::size_t{1}) {
    throw Error(ErrorCode::InvalidArgument, "unsupported number of states");
  }
  if (samples_.size() != num_samples_ * num_dims_) {
    throw Error(ErrorCode::DimensionMismatch, "sample table has " +
                                                  std::to_string(samples_.size()) +
                                                  " entries, expected N*D");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i] >= num_states_) {
      throw Error(ErrorCode::InvalidArgument, "sample " + std::to_string(i / num_dims_) +
                                                  " has state " + std::to_string(samples_[i]) +
                                                  " >= S");
    }
  }
  if (labels_ && labels_->size() != num_samples_) {
    throw Error(ErrorCode::DimensionMismatch, "label count differs from sample count");
  }
}

// ---------------------------------------------------------------- model

MixtureModel::MixtureModel(SimplexVector weights, std::size_t num_dims,
                           std::vector<SimplexVector> components)
    : weights_(std::move(weights)),
      num_dims_(num_dims),
      num_states_(0),
      components_(std::move(components)) {
  if (weights_.size() == 0) throw Error(ErrorCode::InvalidArgument, "no components");
  if (num_dims_ == 0) throw Error(ErrorCode::InvalidArgument, "zero dimensions");
  if (components_.size() != weights_.size() * num_dims_) {
    throw Error(ErrorCode::DimensionMismatch, "expected K*D = " +
                                                  std::to_string(weights_.size() * num_dims_) +
                                                  " component rows, got " +
                                                  std::to_string(components_.size()));
  }
  num_states_ = components_.front().size();
  for (const auto& c : components_) {
    if (c.size() != num_states_) {
      throw Error(ErrorCode::DimensionMismatch, "component rows have differing lengths");
    }
  }
}

double MixtureModel::log_component_mass(std::size_t k, std::span<const State> sample) const {
  double acc = 0.0;
  const SimplexVector* row = &components_[k * num_dims_];
  for (std::size_t d = 0; d < num_dims_; ++d) acc += std::log(row[d][sample[d]]);
  return acc;
}

void MixtureModel::check_compatible(const Dataset& data) const {
  if (data.num_dims() != num_dims_ || data.num_states() != num_states_) {
    throw Error(ErrorCode::DimensionMismatch,
                "model (D=" + std::to_string(num_dims_) + ", S=" + std::to_string(num_states_) +
                    ") vs data (D=" + std::to_string(data.num_dims()) +
                    ", S=" + std::to_string(data.num_states()) + ")");
  }
}

}  // namespace mfgmix
