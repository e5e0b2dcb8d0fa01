#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "mfgmix/kernel.hpp"

namespace mfgmix::kernel {

PolicyEvaluation hjb_policy_step(const StochasticMatrix& P, const SimplexVector& theta,
                                 const CostSpec& spec) {
  const auto S = static_cast<Eigen::Index>(P.size());
  if (theta.size() != P.size()) throw Error(ErrorCode::DimensionMismatch, "P and theta differ in S");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(S + 1, S + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(S + 1);
  for (Eigen::Index i = 0; i < S; ++i) {
    double running = 0.0;
    for (Eigen::Index j = 0; j < S; ++j) {
      const double p = P(i, j);
      A(i, j) = (i == j ? 1.0 : 0.0) - p;
      if (p == 0.0) {
        if (spec.epsilon > 0.0) {
          throw Error(ErrorCode::ZeroProbabilityWithEntropy,
                      "policy has P(" + std::to_string(i) + "," + std::to_string(j) + ") = 0");
        }
        continue;
      }
      running += p * (spec.cost(p) + (spec.epsilon > 0.0 ? spec.epsilon * std::log(p) : 0.0));
    }
    A(i, S) = 1.0;
    b(i) = running + spec.coupling(static_cast<std::size_t>(i), theta.entries());
  }
  A.row(S).head(S).setOnes();

  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::SingularSystem, "policy evaluation system is singular (rank " +
                                               std::to_string(lu.rank()) + ")");
  }
  const Eigen::VectorXd sol = lu.solve(b);
  std::vector<double> v(sol.data(), sol.data() + S);
  return PolicyEvaluation{ValueVector::centered(std::move(v)), sol(S)};
}

HjbSolution solve_hjb(const SimplexVector& theta, const CostSpec& spec, const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t S = theta.size();
  StochasticMatrix policy = StochasticMatrix::uniform(S);
  if (cfg.warm_start) {
    if (cfg.warm_start->size() != S) {
      throw Error(ErrorCode::DimensionMismatch, "warm start has the wrong size");
    }
    if (!(spec.epsilon > 0.0 && cfg.warm_start->min_entry() <= 0.0)) policy = *cfg.warm_start;
  }

  PolicyEvaluation eval = hjb_policy_step(policy, theta, spec);
  double change = INFINITY;
  std::size_t m = 0;
  while (m < cfg.max_policy_iterations) {
    ++m;
    StochasticMatrix next = row_nash_minimize(eval.value, spec, cfg);
    change = next.max_abs_diff(policy);
    policy = std::move(next);
    eval = hjb_policy_step(policy, theta, spec);
    if (change < cfg.policy_tolerance) {
      return HjbSolution{std::move(eval.value), eval.ergodic_cost, std::move(policy), m, true,
                         change};
    }
  }
  return HjbSolution{std::move(eval.value), eval.ergodic_cost, std::move(policy), m, false, change};
}

double bellman_residual(const ValueVector& V, double lambda, const SimplexVector& theta,
                        const CostSpec& spec, const SolverConfig& cfg) {
  const StochasticMatrix best = row_nash_minimize(V, spec, cfg);
  const auto e = average_cost(best, V, theta, spec);
  double worst = 0.0;
  for (std::size_t i = 0; i < V.size(); ++i) {
    worst = std::max(worst, std::abs(V[i] - (e[i] - lambda)));
  }
  return worst;
}

SimplexVector stationary_distribution(const StochasticMatrix& P) {
  const auto S = static_cast<Eigen::Index>(P.size());
  Eigen::MatrixXd A(S, S);
  for (Eigen::Index i = 0; i < S; ++i) {
    for (Eigen::Index j = 0; j < S; ++j) A(i, j) = (i == j ? 1.0 : 0.0) - P(j, i);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> rank_probe(A);
  rank_probe.setThreshold(1e-10);
  if (rank_probe.rank() < S - 1) {
    throw Error(ErrorCode::NonUniqueStationary,
                "I - P^T has rank " + std::to_string(rank_probe.rank()) + " < S - 1");
  }
  // Replace the last balance equation by the normalization.
  A.row(S - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(S);
  b(S - 1) = 1.0;
  const Eigen::VectorXd pi = A.fullPivLu().solve(b);

  std::vector<double> entries(static_cast<std::size_t>(S));
  double sum = 0.0;
  for (Eigen::Index i = 0; i < S; ++i) {
    entries[static_cast<std::size_t>(i)] = std::max(pi(i), 0.0);
    sum += entries[static_cast<std::size_t>(i)];
  }
  for (double& v : entries) v /= sum;
  return SimplexVector::validate(entries);
}

double stationary_residual(const SimplexVector& pi, const StochasticMatrix& P) {
  const std::size_t S = P.size();
  if (pi.size() != S) throw Error(ErrorCode::DimensionMismatch, "pi and P differ in S");
  double worst = 0.0;
  for (std::size_t i = 0; i < S; ++i) {
    double inflow = 0.0;
    for (std::size_t j = 0; j < S; ++j) inflow += P(j, i) * pi[j];
    worst = std::max(worst, std::abs(pi[i] - inflow));
  }
  return worst;
}

MfgSolution solve_subsystem(const SimplexVector& theta, const CostSpec& spec,
                            const SolverConfig& cfg) {
  HjbSolution hjb = solve_hjb(theta, spec, cfg);
  SimplexVector pi = stationary_distribution(hjb.transition);
  if (spec.epsilon > 0.0 && (pi.min_entry() <= 0.0 || hjb.transition.min_entry() <= 0.0)) {
    throw Error(ErrorCode::PositivityViolation,
                "entropic solution has min pi = " + std::to_string(pi.min_entry()) +
                    ", min P = " + std::to_string(hjb.transition.min_entry()));
  }
  const double hjb_res = bellman_residual(hjb.value, hjb.ergodic_cost, theta, spec, cfg);
  const double fp_res = stationary_residual(pi, hjb.transition);
  return MfgSolution{std::move(hjb.value), hjb.ergodic_cost, std::move(pi),
                     std::move(hjb.transition), hjb_res, fp_res, hjb.iterations, hjb.converged};
}

}  // namespace mfgmix::kernel
