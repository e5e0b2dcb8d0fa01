#pragma once

// Test-side sampler, kept separate from the library's own generator so the
// recovery checks do not trust the code they exercise.

#include <cstdint>
#include <random>
#include <vector>

#include "mfgmix/core.hpp"

namespace sampling {

struct Draw {
  mfgmix::Dataset data;
  std::vector<int> truth;
};

inline std::size_t categorical(std::mt19937_64& rng, std::span<const double> p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (r < acc) return i;
  }
  return p.size() - 1;
}

inline Draw draw(const mfgmix::MixtureModel& model, std::size_t N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t D = model.num_dims();
  std::vector<mfgmix::State> x;
  x.reserve(N * D);
  std::vector<int> truth;
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t k = categorical(rng, model.weights().entries());
    truth.push_back(static_cast<int>(k));
    for (std::size_t d = 0; d < D; ++d) {
      x.push_back(static_cast<mfgmix::State>(categorical(rng, model.component(k, d).entries())));
    }
  }
  return Draw{mfgmix::Dataset(N, D, model.num_states(), std::move(x), truth), truth};
}

/// Bernoulli mixture with mean[k][d] = P(state 1).
inline mfgmix::MixtureModel bernoulli_model(const std::vector<double>& weights,
                                            const std::vector<std::vector<double>>& mean) {
  std::vector<mfgmix::SimplexVector> comps;
  for (const auto& row : mean) {
    for (double mu : row) comps.push_back(mfgmix::SimplexVector::validate(std::vector<double>{1.0 - mu, mu}));
  }
  return mfgmix::MixtureModel(mfgmix::SimplexVector::validate(weights), mean.front().size(),
                              std::move(comps));
}

inline mfgmix::MixtureModel random_model(std::size_t K, std::size_t D, std::size_t S,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  auto simplex = [&](std::size_t n) {
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) s += (x = u(rng));
    for (auto& x : v) x /= s;
    return mfgmix::SimplexVector::validate(v);
  };
  std::vector<mfgmix::SimplexVector> comps;
  for (std::size_t c = 0; c < K * D; ++c) comps.push_back(simplex(S));
  return mfgmix::MixtureModel(simplex(K), D, std::move(comps));
}

}  // namespace sampling
