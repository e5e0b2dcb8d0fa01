// Row problem of the HJB equation:
//
//   min_{x in simplex} sum_j x_j (c(x_j) + eps log x_j + V(j)).
//
// eps > 0: the KKT conditions read h(x_j) + V(j) = nu with
// h(x) = c(x) + x c'(x) + eps (log x + 1) strictly increasing, so every entry
// is a scalar root in x (solved in u = log x) and nu is fixed by sum_j x_j = 1.
// eps = 0 with the default cost reduces to projecting -V onto the simplex.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mfgmix/kernel.hpp"

namespace mfgmix::kernel {
namespace {

const double kLogFloor = std::log(1e-300);
constexpr int kMaxRootIterations = 400;
constexpr int kMaxBracketWidenings = 200;

class EntrySolver {
 public:
  EntrySolver(const CostSpec& spec, double tolerance)
      : spec_(spec), tol_(tolerance), linear_(spec.kind == CostKind::DefaultLinear) {}

  // g(u) = h(e^u)
  double g(double u) const {
    const double x = std::exp(u);
    if (linear_) return x - 0.5 + spec_.epsilon * (u + 1.0);
    return spec_.cost(x) + x * spec_.cost_derivative(x) + spec_.epsilon * (u + 1.0);
  }

  bool has_derivative() const { return linear_ || static_cast<bool>(spec_.cost_second); }

  double dg(double u) const {
    const double x = std::exp(u);
    if (linear_) return x + spec_.epsilon;
    return x * (2.0 * spec_.cost_derivative(x) + x * spec_.cost_second(x)) + spec_.epsilon;
  }

  // Solves g(u) = target on [log 1e-300, 0]; clamps at the ends.
  double solve(double target) const {
    double lo = kLogFloor, hi = 0.0;
    if (g(hi) <= target) return hi;
    if (g(lo) >= target) return lo;
    double u = initial_guess(target, lo, hi);
    for (int it = 0; it < kMaxRootIterations; ++it) {
      const double f = g(u) - target;
      if (std::abs(f) <= 0.1 * tol_) return u;
      (f < 0.0 ? lo : hi) = u;
      double next = 0.5 * (lo + hi);
      if (has_derivative()) {
        const double d = dg(u);
        const double newton = u - f / d;
        if (d > 0.0 && newton > lo && newton < hi) next = newton;
      }
      if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(u))) {
        return u;
      }
      u = next;
    }
    throw Error(ErrorCode::NonconvergentRootFind,
                "entry root did not converge for target " + std::to_string(target));
  }

  double du_dtarget(double u) const { return 1.0 / dg(u); }

 private:
  double initial_guess(double target, double lo, double hi) const {
    if (!linear_) return 0.5 * (lo + hi);
    // x + eps log x = target + 0.5 - eps
    const double r = target + 0.5 - spec_.epsilon;
    const double u = r > 0.0 ? std::log(r) : r / spec_.epsilon;
    return std::clamp(u, lo + 1e-9, hi - 1e-9);
  }

  const CostSpec& spec_;
  double tol_;
  bool linear_;
};

std::vector<double> project_to_simplex(std::vector<double> y) {
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0, shift = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumsum += sorted[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) shift = t;
  }
  for (double& v : y) v = std::max(v - shift, 0.0);
  const double sum = std::accumulate(y.begin(), y.end(), 0.0);
  for (double& v : y) v /= sum;
  return y;
}

std::vector<double> entropic_row(const ValueVector& V, const CostSpec& spec,
                                 const SolverConfig& cfg, std::optional<double> hint) {
  const std::size_t S = V.size();
  const EntrySolver entry(spec, cfg.inner_root_tolerance);
  std::vector<double> u(S), x(S);

  // Row mass minus one at multiplier nu; fills u and x.
  auto excess = [&](double nu) {
    double sum = 0.0;
    for (std::size_t j = 0; j < S; ++j) {
      u[j] = entry.solve(nu - V[j]);
      x[j] = std::exp(u[j]);
      sum += x[j];
    }
    return sum - 1.0;
  };

  const auto [vmin, vmax] = std::minmax_element(V.values().begin(), V.values().end());
  double lo = 0.0, hi = 0.0;
  if (!hint) {
    // Every entry <= 1/S at lo and >= 1/S at hi.
    const double h_uniform = entry.g(std::log(1.0 / static_cast<double>(S)));
    lo = *vmin + h_uniform;
    hi = *vmax + h_uniform;
    if (hi - lo <= 0.0) return std::vector<double>(S, 1.0 / static_cast<double>(S));
  } else {
    double width = 1e-2;
    lo = *hint - width;
    hi = *hint + width;
    int widen = 0;
    while (excess(lo) > 0.0) {
      if (++widen > kMaxBracketWidenings) {
        throw Error(ErrorCode::NonconvergentRootFind, "cannot bracket row multiplier");
      }
      width *= 2.0;
      lo -= width;
    }
    while (excess(hi) < 0.0) {
      if (++widen > kMaxBracketWidenings) {
        throw Error(ErrorCode::NonconvergentRootFind, "cannot bracket row multiplier");
      }
      width *= 2.0;
      hi += width;
    }
  }

  double nu = 0.5 * (lo + hi);
  for (int it = 0; it < kMaxRootIterations; ++it) {
    const double f = excess(nu);
    if (std::abs(f) <= 0.1 * cfg.inner_root_tolerance) {
      for (double& v : x) v /= (1.0 + f);
      return x;
    }
    (f < 0.0 ? lo : hi) = nu;
    double next = 0.5 * (lo + hi);
    if (entry.has_derivative()) {
      double slope = 0.0;
      for (std::size_t j = 0; j < S; ++j) {
        if (u[j] < 0.0 && u[j] > kLogFloor) slope += x[j] * entry.du_dtarget(u[j]);
      }
      if (slope > 0.0) {
        const double newton = nu - f / slope;
        if (newton > lo && newton < hi) next = newton;
      }
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(nu))) {
      for (double& v : x) v /= (1.0 + f);
      return x;
    }
    nu = next;
  }
  throw Error(ErrorCode::NonconvergentRootFind, "row multiplier did not converge");
}

}  // namespace

StochasticMatrix row_nash_minimize(const ValueVector& V, const CostSpec& spec,
                                   const SolverConfig& cfg, std::optional<double> multiplier_hint) {
  const std::size_t S = V.size();
  if (S == 0) throw Error(ErrorCode::InvalidArgument, "empty value vector");
  std::vector<double> row;
  if (spec.epsilon == 0.0) {
    if (spec.kind != CostKind::DefaultLinear) {
      throw Error(ErrorCode::UnsupportedCost,
                  "eps = 0 is only supported for the default linear transition cost");
    }
    std::vector<double> minus_v(S);
    for (std::size_t j = 0; j < S; ++j) minus_v[j] = -V[j];
    row = project_to_simplex(std::move(minus_v));
  } else {
    row = entropic_row(V, spec, cfg, multiplier_hint);
  }
  const auto simplex_row = SimplexVector::validate(row);
  if (spec.epsilon > 0.0 && simplex_row.min_entry() <= 0.0) {
    throw Error(ErrorCode::NonconvergentRootFind, "entropic row has a zero entry");
  }
  return StochasticMatrix::repeat_row(simplex_row);
}

double row_first_order_residual(const StochasticMatrix& P, const ValueVector& V,
                                const CostSpec& spec) {
  const std::size_t S = P.size();
  if (V.size() != S) throw Error(ErrorCode::DimensionMismatch, "P and V must share S");
  double worst = 0.0;
  for (std::size_t i = 0; i < S; ++i) {
    const auto row = P.row(i);
    double mass = 0.0, gmin = INFINITY, gmax = -INFINITY;
    std::vector<double> grad(S);
    for (std::size_t j = 0; j < S; ++j) {
      const double p = row[j];
      mass += p;
      const double entropy = spec.epsilon > 0.0 ? spec.epsilon * (std::log(p) + 1.0) : 0.0;
      grad[j] = spec.cost(p) + p * spec.cost_derivative(p) + entropy + V[j];
      if (p > 0.0) {
        gmin = std::min(gmin, grad[j]);
        gmax = std::max(gmax, grad[j]);
      }
    }
    worst = std::max(worst, std::abs(mass - 1.0));
    worst = std::max(worst, gmax - gmin);
    // Entries at zero must not be cheaper than the active multiplier.
    for (std::size_t j = 0; j < S; ++j) {
      if (row[j] == 0.0) worst = std::max(worst, gmin - grad[j]);
    }
  }
  return worst;
}

}  // namespace mfgmix::kernel
