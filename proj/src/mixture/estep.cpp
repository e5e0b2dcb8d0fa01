#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "common/parallel.hpp"
#include "mfgmix/mixture.hpp"

namespace mfgmix::mixture {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log pi_k^d(s), laid out [k][d][s].
std::vector<double> log_component_table(const MixtureModel& model) {
  const std::size_t S = model.num_states();
  std::vector<double> table;
  table.reserve(model.components().size() * S);
  for (const auto& c : model.components()) {
    for (double p : c.entries()) table.push_back(std::log(p));
  }
  return table;
}

// log alpha_k + log pi_k(x) for every k.
void joint_log_mass(const MixtureModel& model, const std::vector<double>& table,
                    const std::vector<double>& log_weights, std::span<const State> x,
                    std::span<double> out) {
  const std::size_t D = model.num_dims(), S = model.num_states();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double* base = table.data() + k * D * S;
    double acc = log_weights[k];
    for (std::size_t d = 0; d < D; ++d) acc += base[d * S + x[d]];
    out[k] = acc;
  }
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

std::vector<double> log_weights_of(const MixtureModel& model) {
  std::vector<double> lw;
  for (double a : model.weights().entries()) lw.push_back(std::log(a));
  return lw;
}

}  // namespace

ThetaField::ThetaField(std::size_t num_components, std::size_t num_dims,
                       std::vector<SimplexVector> cells)
    : num_components_(num_components), num_dims_(num_dims), cells_(std::move(cells)) {
  if (cells_.size() != num_components_ * num_dims_ || cells_.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "theta field must hold K*D cells");
  }
  for (const auto& c : cells_) {
    if (c.size() != cells_.front().size()) {
      throw Error(ErrorCode::DimensionMismatch, "theta cells differ in S");
    }
  }
}

double ThetaField::distance(const ThetaField& other) const {
  if (other.cells_.size() != cells_.size() || other.num_states() != num_states()) {
    throw Error(ErrorCode::DimensionMismatch, "theta fields differ in shape");
  }
  double acc = 0.0;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    for (std::size_t i = 0; i < num_states(); ++i) {
      const double diff = cells_[c][i] - other.cells_[c][i];
      acc += diff * diff;
    }
  }
  return std::sqrt(acc);
}

Responsibilities responsibilities(const MixtureModel& model, const Dataset& data,
                                  std::size_t threads) {
  model.check_compatible(data);
  const std::size_t N = data.num_samples(), K = model.num_components();
  Responsibilities resp;
  resp.num_samples = N;
  resp.num_components = K;
  resp.gamma.assign(N * K, 0.0);
  resp.log_evidence.assign(N, 0.0);

  const auto table = log_component_table(model);
  const auto log_weights = log_weights_of(model);
  detail::parallel_for(N, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> joint(K);
    for (std::size_t n = begin; n < end; ++n) {
      joint_log_mass(model, table, log_weights, data.sample(n), joint);
      const double lse = log_sum_exp(joint);
      if (lse == kNegInf) {
        throw Error(ErrorCode::AllComponentsVanish,
                    "every component assigns zero mass to sample " + std::to_string(n));
      }
      resp.log_evidence[n] = lse;
      for (std::size_t k = 0; k < K; ++k) resp.gamma[n * K + k] = std::exp(joint[k] - lse);
    }
  });
  return resp;
}

SimplexVector update_weights(const Responsibilities& resp) {
  const std::size_t N = resp.num_samples, K = resp.num_components;
  if (N == 0) throw Error(ErrorCode::InvalidArgument, "no samples");
  std::vector<double> alpha(K, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) alpha[k] += resp(n, k);
  }
  for (double& a : alpha) a /= static_cast<double>(N);
  return SimplexVector::validate(alpha);
}

ThetaField update_theta(const Responsibilities& resp, const Dataset& data, double min_mass,
                        const ThetaField* fallback, std::vector<std::size_t>* empty_components,
                        std::size_t threads) {
  const std::size_t N = data.num_samples(), D = data.num_dims(), S = data.num_states();
  const std::size_t K = resp.num_components;
  if (resp.num_samples != N) {
    throw Error(ErrorCode::DimensionMismatch, "responsibilities and data differ in N");
  }
  std::vector<double> mass(K, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) mass[k] += resp(n, k);
  }

  std::vector<bool> empty(K, false);
  for (std::size_t k = 0; k < K; ++k) {
    if (mass[k] > min_mass) continue;
    if (!fallback) {
      throw Error(ErrorCode::EmptyCluster, "component " + std::to_string(k) + " has mass " +
                                               std::to_string(mass[k]));
    }
    if (fallback->num_components() != K || fallback->num_dims() != D) {
      throw Error(ErrorCode::DimensionMismatch, "fallback theta has the wrong shape");
    }
    empty[k] = true;
    if (empty_components) empty_components->push_back(k);
  }

  std::vector<std::optional<SimplexVector>> cells(K * D);
  detail::parallel_for(D, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> counts(S);
    for (std::size_t d = begin; d < end; ++d) {
      for (std::size_t k = 0; k < K; ++k) {
        if (empty[k]) {
          cells[k * D + d] = fallback->cell(k, d);
          continue;
        }
        std::fill(counts.begin(), counts.end(), 0.0);
        for (std::size_t n = 0; n < N; ++n) counts[data.sample(n)[d]] += resp(n, k);
        for (double& c : counts) c /= mass[k];
        cells[k * D + d] = SimplexVector::validate(counts);
      }
    }
  });
  std::vector<SimplexVector> out;
  out.reserve(K * D);
  for (auto& c : cells) out.push_back(std::move(*c));
  return ThetaField(K, D, std::move(out));
}

double log_likelihood(const MixtureModel& model, const Dataset& data, std::size_t threads) {
  model.check_compatible(data);
  const std::size_t N = data.num_samples(), K = model.num_components();
  const auto table = log_component_table(model);
  const auto log_weights = log_weights_of(model);
  std::vector<double> per_sample(N);
  detail::parallel_for(N, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> joint(K);
    for (std::size_t n = begin; n < end; ++n) {
      joint_log_mass(model, table, log_weights, data.sample(n), joint);
      per_sample[n] = log_sum_exp(joint);
    }
  });
  double total = 0.0;
  for (double v : per_sample) total += v;
  return total;
}

double expected_log_likelihood(const MixtureModel& model, const Dataset& data) {
  const auto resp = responsibilities(model, data);
  const std::size_t K = model.num_components();
  const auto table = log_component_table(model);
  const auto log_weights = log_weights_of(model);
  std::vector<double> joint(K);
  double total = 0.0;
  for (std::size_t n = 0; n < data.num_samples(); ++n) {
    joint_log_mass(model, table, log_weights, data.sample(n), joint);
    for (std::size_t k = 0; k < K; ++k) {
      const double g = resp(n, k);
      if (g > 0.0) total += g * joint[k];
    }
  }
  return total;
}

double entropic_link(double mu, double epsilon) {
  if (epsilon == 0.0) return mu;
  return mu + 0.5 * epsilon * std::log(mu / (1.0 - mu));
}

double modified_log_likelihood(const MixtureModel& model, const Dataset& data, double epsilon) {
  if (model.num_states() != 2) {
    throw Error(ErrorCode::InvalidArgument, "modified log-likelihood needs S = 2");
  }
  model.check_compatible(data);
  const std::size_t K = model.num_components(), D = model.num_dims();
  // log f(mu) for state 1 and log f(1 - mu) for state 0, laid out like the model.
  std::vector<double> table(K * D * 2);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t d = 0; d < D; ++d) {
      const double mu = model.component(k, d)[1];
      const double f1 = entropic_link(mu, epsilon);
      const double f0 = entropic_link(1.0 - mu, epsilon);
      if (!(f1 > 0.0 && f1 < 1.0) || !(f0 > 0.0 && f0 < 1.0)) {
        throw Error(ErrorCode::OutOfDomain, "f_eps(mu) outside (0,1) at k = " + std::to_string(k) +
                                                ", d = " + std::to_string(d) +
                                                " (mu = " + std::to_string(mu) + ")");
      }
      table[(k * D + d) * 2 + 0] = std::log(f0);
      table[(k * D + d) * 2 + 1] = std::log(f1);
    }
  }
  const auto resp = responsibilities(model, data);
  const auto log_weights = log_weights_of(model);
  std::vector<double> joint(K);
  double total = 0.0;
  for (std::size_t n = 0; n < data.num_samples(); ++n) {
    joint_log_mass(model, table, log_weights, data.sample(n), joint);
    for (std::size_t k = 0; k < K; ++k) {
      const double g = resp(n, k);
      if (g > 0.0) total += g * joint[k];
    }
  }
  return total;
}

}  // namespace mfgmix::mixture
