#pragma once

// EM-like outer loop for categorical mixtures. The E-step computes
// responsibilities, weights and the coupling data theta; the M-step solves one
// stationary MFG subsystem per (component, coordinate) pair. The classical EM
// baseline shares the loop and replaces the M-step by components = theta.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfgmix/core.hpp"
#include "mfgmix/kernel.hpp"

namespace mfgmix::mixture {

/// Posterior component probabilities gamma_k(x_n), N x K row-major.
struct Responsibilities {
  std::size_t num_samples = 0;
  std::size_t num_components = 0;
  std::vector<double> gamma;
  /// log pi(x_n) = log sum_k alpha_k pi_k(x_n)
  std::vector<double> log_evidence;

  double operator()(std::size_t n, std::size_t k) const { return gamma[n * num_components + k]; }
  std::span<const double> row(std::size_t n) const {
    return std::span<const double>(gamma).subspan(n * num_components, num_components);
  }
};

/// Responsibility-weighted state frequencies theta_k^d, one simplex vector per
/// (k, d), k-major.
class ThetaField {
 public:
  ThetaField(std::size_t num_components, std::size_t num_dims, std::vector<SimplexVector> cells);

  std::size_t num_components() const noexcept { return num_components_; }
  std::size_t num_dims() const noexcept { return num_dims_; }
  std::size_t num_states() const noexcept { return cells_.front().size(); }
  const SimplexVector& cell(std::size_t k, std::size_t d) const { return cells_[k * num_dims_ + d]; }
  const std::vector<SimplexVector>& cells() const noexcept { return cells_; }

  /// Euclidean norm of the difference, treating each field as one flat vector.
  double distance(const ThetaField& other) const;

 private:
  std::size_t num_components_;
  std::size_t num_dims_;
  std::vector<SimplexVector> cells_;
};

struct SubsystemDiagnostics {
  double ergodic_cost = 0.0;
  double hjb_residual = 0.0;
  double fp_residual = 0.0;
  std::size_t policy_iterations = 0;
  bool converged = true;
};

struct FitConfig {
  std::size_t num_components = 2;
  double epsilon = 0.05;
  double tolerance = 1e-6;
  std::size_t max_iterations = 200;
  std::uint64_t seed = 0;
  /// A component whose total responsibility is <= empty_cluster_floor * N
  /// keeps its previous theta for that iteration. The default only catches
  /// mass that has underflowed; a tiny but representable mass still gives a
  /// well-defined theta and lets a starved component recover.
  double empty_cluster_floor = std::numeric_limits<double>::min();
  /// Convergence also needs every subsystem's HJB residual below this.
  double subsystem_residual_limit = 1e-8;
  double coupling_scale = 0.5;
  kernel::SolverConfig solver;
  /// Overrides the default cost (c(p) = -(1-p)/2, squared vertex distance).
  std::optional<kernel::CostSpec> cost;
  /// Skips the random initialization.
  std::optional<MixtureModel> initial_model;
  /// Worker threads for the E- and M-steps; 0 means hardware concurrency.
  std::size_t threads = 0;
  /// Keep the model after every iteration in FitResult::iterates.
  bool record_iterates = false;

  void validate() const;
  kernel::CostSpec resolved_cost() const;
};

struct FitResult {
  MixtureModel model;
  Responsibilities responsibilities;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> theta_residual_trace;
  /// Log-likelihood of the model entering each iteration, then of the final model.
  std::vector<double> loglik_trace;
  /// Worst subsystem HJB residual of each M-step (zero for the baseline).
  std::vector<double> subsystem_residual_trace;
  /// K*D entries, k-major; empty for the baseline.
  std::vector<SubsystemDiagnostics> subsystem_diagnostics;
  std::vector<std::string> warnings;
  std::vector<MixtureModel> iterates;
};

Responsibilities responsibilities(const MixtureModel& model, const Dataset& data,
                                  std::size_t threads = 1);

SimplexVector update_weights(const Responsibilities& resp);

/// Throws EmptyCluster when sum_n gamma_k(x_n) <= min_mass for some k, unless
/// `fallback` is given, in which case that component's cells are copied from
/// it and k is appended to `empty_components`.
ThetaField update_theta(const Responsibilities& resp, const Dataset& data, double min_mass,
                        const ThetaField* fallback = nullptr,
                        std::vector<std::size_t>* empty_components = nullptr,
                        std::size_t threads = 1);

struct MStepResult {
  std::vector<SimplexVector> components;
  std::vector<StochasticMatrix> transitions;
  std::vector<SubsystemDiagnostics> diagnostics;
};

/// Solves the K*D independent subsystems. `warm` holds the previous
/// transition matrices (k-major) or is empty. Failures are rethrown with the
/// (k, d) index in the message and the original error code.
MStepResult mfg_m_step(const ThetaField& theta, const kernel::CostSpec& cost,
                       const kernel::SolverConfig& solver,
                       std::span<const StochasticMatrix> warm = {}, std::size_t threads = 1);

/// Initial model: uniform weights, components drawn uniform in (0, 1) and
/// normalized per (k, d). See random_unit_interval() for the draw.
MixtureModel random_initial_model(std::size_t num_components, std::size_t num_dims,
                                  std::size_t num_states, std::uint64_t seed);

/// Maps a 64-bit word to (0, 1): ((w >> 12) + 0.5) * 2^-52, exact in double.
double random_unit_interval(std::uint64_t word) noexcept;

FitResult fit(const Dataset& data, const FitConfig& cfg);
FitResult em_baseline_fit(const Dataset& data, const FitConfig& cfg);

/// sum_n log sum_k alpha_k pi_k(x_n); -inf when some sample has zero mass.
double log_likelihood(const MixtureModel& model, const Dataset& data, std::size_t threads = 1);

/// sum_n sum_k gamma_k(x_n) (log alpha_k + log pi_k(x_n)) with gamma taken
/// from the model itself.
double expected_log_likelihood(const MixtureModel& model, const Dataset& data);

/// f_eps(mu) = mu + (eps/2) log(mu / (1 - mu)).
double entropic_link(double mu, double epsilon);

/// Expected log-likelihood with every Bernoulli parameter mu passed through
/// f_eps. S = 2 only; throws OutOfDomain if some f_eps(mu) is outside (0, 1).
double modified_log_likelihood(const MixtureModel& model, const Dataset& data, double epsilon);

}  // namespace mfgmix::mixture
