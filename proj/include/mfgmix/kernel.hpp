#pragma once

// Stationary finite-state mean field game subsystem for one (component,
// coordinate) pair: an ergodic Hamilton-Jacobi-Bellman equation solved by
// policy iteration, followed by the stationary Fokker-Planck equation of the
// optimal transition matrix.
//
// For state i the agent picks a row P_i of the transition matrix minimizing
//
//   e_i(P, V) = sum_j P_ij * (c(P_ij) + eps * log P_ij + F(i, theta) + V(j))
//
// and the value function satisfies V(i) = min_{P_i} e_i(P, V) - lambda with
// sum_i V(i) = 0.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mfgmix/core.hpp"

namespace mfgmix::kernel {

using ScalarFn = std::function<double(double)>;
/// F(i, theta): running cost of sitting in state i given coupling data theta.
using CouplingFn = std::function<double(std::size_t, std::span<const double>)>;

enum class CostKind { DefaultLinear, Custom };

/// scale * |theta - T_i|^2 where T_i is the i-th vertex of the simplex.
CouplingFn squared_vertex_distance(double scale = 0.5);
CouplingFn zero_coupling();

struct CostSpec {
  double epsilon = 0.05;
  CostKind kind = CostKind::DefaultLinear;
  ScalarFn cost;               // c(p)
  ScalarFn cost_derivative;    // c'(p)
  ScalarFn cost_second;        // c''(p); optional, enables Newton steps
  CouplingFn coupling;

  /// c(p) = -(1 - p)/2 with F(i, theta) = scale * |theta - T_i|^2.
  static CostSpec default_linear(double epsilon, double coupling_scale = 0.5);
  /// Throws InvalidArgument if p*c(p) is not convex on a 1e-3 grid of [0, 1].
  static CostSpec custom(double epsilon, ScalarFn cost, ScalarFn cost_derivative,
                         CouplingFn coupling, ScalarFn cost_second = {});

  /// Checks epsilon, convexity of p*c(p) and finiteness of F at a few points
  /// of the S-simplex.
  void validate(std::size_t num_states) const;
};

struct SolverConfig {
  double policy_tolerance = 1e-10;
  double inner_root_tolerance = 1e-12;
  std::size_t max_policy_iterations = 500;
  std::optional<StochasticMatrix> warm_start;

  void validate() const;
};

/// e(P, V) including the coupling term. Entry i only reads row i of P.
std::vector<double> average_cost(const StochasticMatrix& P, const ValueVector& V,
                                 const SimplexVector& theta, const CostSpec& spec);

/// Stacked gradient g_ij = d e_i / d P_ij, row-major.
std::vector<double> nash_gradient(const StochasticMatrix& P, const ValueVector& V,
                                  const SimplexVector& theta, const CostSpec& spec);

/// Nash minimizer of e(., V). The objective of row i differs from the others
/// only by the constant F(i, theta), so all rows coincide.
///
/// `multiplier_hint` seeds the bracket search for the row-sum multiplier
/// (eps > 0 only); the result does not depend on it beyond root tolerance.
StochasticMatrix row_nash_minimize(const ValueVector& V, const CostSpec& spec,
                                   const SolverConfig& cfg = {},
                                   std::optional<double> multiplier_hint = std::nullopt);

/// Largest violation of the first-order conditions of the row problem at P.
double row_first_order_residual(const StochasticMatrix& P, const ValueVector& V,
                                const CostSpec& spec);

struct PolicyEvaluation {
  ValueVector value;
  double ergodic_cost;
};

/// Policy evaluation: solves the (S+1)x(S+1) system
///   V(i) - sum_j P_ij V(j) + lambda = sum_j P_ij (c(P_ij) + eps log P_ij) + F(i, theta)
///   sum_i V(i) = 0.
PolicyEvaluation hjb_policy_step(const StochasticMatrix& P, const SimplexVector& theta,
                                 const CostSpec& spec);

struct HjbSolution {
  ValueVector value;
  double ergodic_cost;
  StochasticMatrix transition;
  std::size_t iterations;
  bool converged;
  double last_change;
};

/// Policy iteration until max |P^(m+1) - P^(m)| < cfg.policy_tolerance.
/// When the iteration cap is hit the last iterate comes back with
/// converged == false.
HjbSolution solve_hjb(const SimplexVector& theta, const CostSpec& spec,
                      const SolverConfig& cfg = {});

/// max_i |V(i) - (min_{P_i} e_i(P, V) - lambda)|.
double bellman_residual(const ValueVector& V, double lambda, const SimplexVector& theta,
                        const CostSpec& spec, const SolverConfig& cfg = {});

/// Invariant distribution pi = P^T pi. Throws NonUniqueStationary when
/// I - P^T has a null space of dimension > 1.
SimplexVector stationary_distribution(const StochasticMatrix& P);

/// max_i |pi(i) - sum_j P_ji pi(j)|.
double stationary_residual(const SimplexVector& pi, const StochasticMatrix& P);

/// HJB followed by Fokker-Planck, with residual diagnostics. For eps > 0 the
/// distribution and transition matrix must be strictly positive; otherwise
/// PositivityViolation is thrown.
MfgSolution solve_subsystem(const SimplexVector& theta, const CostSpec& spec,
                            const SolverConfig& cfg = {});

}  // namespace mfgmix::kernel
