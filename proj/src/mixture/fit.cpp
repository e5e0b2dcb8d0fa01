#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "common/parallel.hpp"
#include "mfgmix/mixture.hpp"

namespace mfgmix::mixture {

void FitConfig::validate() const {
  if (num_components < 1) throw Error(ErrorCode::InvalidArgument, "K must be at least 1");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must be finite and >= 0");
  }
  if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be > 0");
  if (!(empty_cluster_floor > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "empty-cluster floor must be > 0");
  }
  if (!(subsystem_residual_limit > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "subsystem residual limit must be > 0");
  }
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  solver.validate();
  if (initial_model && initial_model->num_components() != num_components) {
    throw Error(ErrorCode::DimensionMismatch, "initial model has " +
                                                  std::to_string(initial_model->num_components()) +
                                                  " components, K = " +
                                                  std::to_string(num_components));
  }
}

kernel::CostSpec FitConfig::resolved_cost() const {
  if (cost) return *cost;
  return kernel::CostSpec::default_linear(epsilon, coupling_scale);
}

double random_unit_interval(std::uint64_t word) noexcept {
  return (static_cast<double>(word >> 12) + 0.5) * 0x1.0p-52;
}

MixtureModel random_initial_model(std::size_t num_components, std::size_t num_dims,
                                  std::size_t num_states, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SimplexVector> comps;
  comps.reserve(num_components * num_dims);
  std::vector<double> row(num_states);
  for (std::size_t c = 0; c < num_components * num_dims; ++c) {
    double sum = 0.0;
    for (double& v : row) {
      v = random_unit_interval(rng());
      sum += v;
    }
    for (double& v : row) v /= sum;
    comps.push_back(SimplexVector::validate(row));
  }
  return MixtureModel(SimplexVector::uniform(num_components), num_dims, std::move(comps));
}

MStepResult mfg_m_step(const ThetaField& theta, const kernel::CostSpec& cost,
                       const kernel::SolverConfig& solver,
                       std::span<const StochasticMatrix> warm, std::size_t threads) {
  const std::size_t K = theta.num_components(), D = theta.num_dims();
  const std::size_t cells = K * D;
  if (!warm.empty() && warm.size() != cells) {
    throw Error(ErrorCode::DimensionMismatch, "warm start needs one matrix per (k, d)");
  }
  std::vector<std::optional<MfgSolution>> solved(cells);
  detail::parallel_for(cells, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      kernel::SolverConfig local = solver;
      if (!warm.empty()) local.warm_start = warm[c];
      try {
        solved[c] = kernel::solve_subsystem(theta.cells()[c], cost, local);
      } catch (const Error& e) {
        std::string detail = e.what();
        const std::string prefix = std::string(to_string(e.code())) + ": ";
        if (detail.rfind(prefix, 0) == 0) detail.erase(0, prefix.size());
        throw Error(e.code(), "subsystem (k=" + std::to_string(c / D) +
                                  ", d=" + std::to_string(c % D) + "): " + detail);
      }
    }
  });

  MStepResult out;
  out.components.reserve(cells);
  out.transitions.reserve(cells);
  out.diagnostics.reserve(cells);
  for (auto& s : solved) {
    out.diagnostics.push_back(SubsystemDiagnostics{s->ergodic_cost, s->hjb_residual,
                                                   s->fp_residual, s->policy_iterations,
                                                   s->converged});
    out.components.push_back(std::move(s->distribution));
    out.transitions.push_back(std::move(s->transition));
  }
  return out;
}

namespace {

ThetaField theta_of(const MixtureModel& model) {
  return ThetaField(model.num_components(), model.num_dims(), model.components());
}

FitResult run(const Dataset& data, const FitConfig& cfg, bool use_mfg) {
  cfg.validate();
  const std::size_t K = cfg.num_components, D = data.num_dims(), S = data.num_states();
  const std::size_t threads = detail::resolve_threads(cfg.threads);
  const kernel::CostSpec cost = cfg.resolved_cost();
  if (use_mfg) cost.validate(S);

  MixtureModel model = cfg.initial_model ? *cfg.initial_model
                                         : random_initial_model(K, D, S, cfg.seed);
  model.check_compatible(data);

  FitResult result{model, {}, 0, false, {}, {}, {}, {}, {}, {}};
  if (cfg.record_iterates) result.iterates.push_back(model);

  ThetaField theta = theta_of(model);
  std::vector<StochasticMatrix> transitions;
  const double min_mass = cfg.empty_cluster_floor * static_cast<double>(data.num_samples());

  for (std::size_t h = 0; h < cfg.max_iterations; ++h) {
    Responsibilities resp = responsibilities(model, data, threads);
    double ll = 0.0;
    for (double v : resp.log_evidence) ll += v;
    result.loglik_trace.push_back(ll);

    SimplexVector alpha = update_weights(resp);
    std::vector<std::size_t> empty;
    ThetaField next = update_theta(resp, data, min_mass, &theta, &empty, threads);
    for (std::size_t k : empty) {
      result.warnings.push_back("iteration " + std::to_string(h + 1) + ": component " +
                                std::to_string(k) + " is empty, keeping its previous theta");
    }
    const double change = next.distance(theta);
    theta = std::move(next);
    result.theta_residual_trace.push_back(change);

    double worst = 0.0;
    std::vector<SimplexVector> components;
    if (use_mfg) {
      MStepResult m = mfg_m_step(theta, cost, cfg.solver, transitions, threads);
      for (std::size_t c = 0; c < m.diagnostics.size(); ++c) {
        const auto& diag = m.diagnostics[c];
        worst = std::max(worst, diag.hjb_residual);
        if (!diag.converged) {
          result.warnings.push_back("iteration " + std::to_string(h + 1) + ": subsystem (k=" +
                                    std::to_string(c / D) + ", d=" + std::to_string(c % D) +
                                    ") hit the policy-iteration cap");
        }
      }
      components = std::move(m.components);
      transitions = std::move(m.transitions);
      result.subsystem_diagnostics = std::move(m.diagnostics);
    } else {
      components = theta.cells();
    }
    result.subsystem_residual_trace.push_back(worst);

    model = MixtureModel(std::move(alpha), D, std::move(components));
    result.iterations = h + 1;
    if (cfg.record_iterates) result.iterates.push_back(model);

    if (change < cfg.tolerance && worst <= cfg.subsystem_residual_limit) {
      result.converged = true;
      break;
    }
  }

  result.responsibilities = responsibilities(model, data, threads);
  double ll = 0.0;
  for (double v : result.responsibilities.log_evidence) ll += v;
  result.loglik_trace.push_back(ll);
  if (!result.converged) {
    result.warnings.push_back(std::string(to_string(ErrorCode::MaxIterationsExceeded)) + ": no convergence after " +
                              std::to_string(result.iterations) + " iterations");
  }
  result.model = std::move(model);
  return result;
}

}  // namespace

FitResult fit(const Dataset& data, const FitConfig& cfg) { return run(data, cfg, true); }

FitResult em_baseline_fit(const Dataset& data, const FitConfig& cfg) {
  return run(data, cfg, false);
}

}  // namespace mfgmix::mixture
