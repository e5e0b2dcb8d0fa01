#include <cmath>
#include <string>

#include "mfgmix/kernel.hpp"

namespace mfgmix::kernel {

CouplingFn squared_vertex_distance(double scale) {
  return [scale](std::size_t i, std::span<const double> theta) {
    double acc = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double diff = theta[j] - (j == i ? 1.0 : 0.0);
      acc += diff * diff;
    }
    return scale * acc;
  };
}

CouplingFn zero_coupling() {
  return [](std::size_t, std::span<const double>) { return 0.0; };
}

CostSpec CostSpec::default_linear(double epsilon, double coupling_scale) {
  CostSpec spec;
  spec.epsilon = epsilon;
  spec.kind = CostKind::DefaultLinear;
  spec.cost = [](double p) { return -(1.0 - p) / 2.0; };
  spec.cost_derivative = [](double) { return 0.5; };
  spec.cost_second = [](double) { return 0.0; };
  spec.coupling = squared_vertex_distance(coupling_scale);
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must be finite and >= 0");
  }
  return spec;
}

CostSpec CostSpec::custom(double epsilon, ScalarFn cost, ScalarFn cost_derivative,
                          CouplingFn coupling, ScalarFn cost_second) {
  CostSpec spec;
  spec.epsilon = epsilon;
  spec.kind = CostKind::Custom;
  spec.cost = std::move(cost);
  spec.cost_derivative = std::move(cost_derivative);
  spec.cost_second = std::move(cost_second);
  spec.coupling = std::move(coupling);
  if (!spec.cost || !spec.cost_derivative || !spec.coupling) {
    throw Error(ErrorCode::InvalidArgument, "custom cost needs c, c' and F");
  }
  spec.validate(2);
  return spec;
}

void CostSpec::validate(std::size_t num_states) const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must be finite and >= 0");
  }
  if (!cost || !cost_derivative || !coupling) {
    throw Error(ErrorCode::InvalidArgument, "cost specification is incomplete");
  }
  // p*c(p) convex: non-negative second differences on a uniform grid.
  constexpr int kGrid = 1000;
  const double h = 1.0 / kGrid;
  auto pc = [&](double p) { return p * cost(p); };
  for (int n = 1; n < kGrid; ++n) {
    const double p = n * h;
    const double second = pc(p - h) - 2.0 * pc(p) + pc(p + h);
    if (!std::isfinite(second) || second < -1e-9) {
      throw Error(ErrorCode::InvalidArgument,
                  "p*c(p) is not convex near p = " + std::to_string(p));
    }
  }
  if (num_states == 0) return;
  std::vector<std::vector<double>> probes;
  probes.emplace_back(num_states, 1.0 / static_cast<double>(num_states));
  for (std::size_t v = 0; v < num_states; ++v) {
    std::vector<double> e(num_states, 0.0);
    e[v] = 1.0;
    probes.push_back(std::move(e));
  }
  for (const auto& theta : probes) {
    for (std::size_t i = 0; i < num_states; ++i) {
      if (!std::isfinite(coupling(i, theta))) {
        throw Error(ErrorCode::InvalidArgument, "coupling is not finite on the simplex");
      }
    }
  }
}

void SolverConfig::validate() const {
  if (!(policy_tolerance > 0.0) || !(inner_root_tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "solver tolerances must be > 0");
  }
  if (max_policy_iterations == 0) {
    throw Error(ErrorCode::InvalidArgument, "max_policy_iterations must be >= 1");
  }
}

std::vector<double> average_cost(const StochasticMatrix& P, const ValueVector& V,
                                 const SimplexVector& theta, const CostSpec& spec) {
  const std::size_t S = P.size();
  if (V.size() != S || theta.size() != S) {
    throw Error(ErrorCode::DimensionMismatch, "P, V and theta must share S");
  }
  std::vector<double> e(S, 0.0);
  for (std::size_t i = 0; i < S; ++i) {
    const double coupling = spec.coupling(i, theta.entries());
    double acc = 0.0;
    for (std::size_t j = 0; j < S; ++j) {
      const double p = P(i, j);
      if (p == 0.0) {
        if (spec.epsilon > 0.0) {
          throw Error(ErrorCode::ZeroProbabilityWithEntropy,
                      "P(" + std::to_string(i) + "," + std::to_string(j) + ") = 0");
        }
        continue;
      }
      const double entropy = spec.epsilon > 0.0 ? spec.epsilon * std::log(p) : 0.0;
      acc += p * (spec.cost(p) + entropy + coupling + V[j]);
    }
    e[i] = acc;
  }
  return e;
}

std::vector<double> nash_gradient(const StochasticMatrix& P, const ValueVector& V,
                                  const SimplexVector& theta, const CostSpec& spec) {
  const std::size_t S = P.size();
  if (V.size() != S || theta.size() != S) {
    throw Error(ErrorCode::DimensionMismatch, "P, V and theta must share S");
  }
  std::vector<double> g(S * S);
  for (std::size_t i = 0; i < S; ++i) {
    const double coupling = spec.coupling(i, theta.entries());
    for (std::size_t j = 0; j < S; ++j) {
      const double p = P(i, j);
      if (spec.epsilon > 0.0 && p == 0.0) {
        throw Error(ErrorCode::ZeroProbabilityWithEntropy, "gradient undefined at P_ij = 0");
      }
      const double entropy = spec.epsilon > 0.0 ? spec.epsilon * (std::log(p) + 1.0) : 0.0;
      g[i * S + j] = spec.cost(p) + p * spec.cost_derivative(p) + entropy + V[j] + coupling;
    }
  }
  return g;
}

}  // namespace mfgmix::kernel
