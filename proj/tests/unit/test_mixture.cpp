#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mfgmix/mixture.hpp"
#include "support/sampling.hpp"

using namespace mfgmix;
using namespace mfgmix::mixture;

namespace {

SimplexVector sv(std::vector<double> v) { return SimplexVector::validate(v); }

Responsibilities make_resp(std::size_t K, std::vector<double> gamma) {
  Responsibilities r;
  r.num_components = K;
  r.num_samples = gamma.size() / K;
  r.gamma = std::move(gamma);
  r.log_evidence.assign(r.num_samples, 0.0);
  return r;
}

Dataset binary_data(std::size_t D, std::vector<State> x) {
  const std::size_t N = x.size() / D;
  return Dataset(N, D, 2, std::move(x));
}

double max_model_diff(const MixtureModel& a, const MixtureModel& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.num_components(); ++k) {
    worst = std::max(worst, std::abs(a.weights()[k] - b.weights()[k]));
  }
  for (std::size_t c = 0; c < a.components().size(); ++c) {
    for (std::size_t i = 0; i < a.num_states(); ++i) {
      worst = std::max(worst, std::abs(a.components()[c][i] - b.components()[c][i]));
    }
  }
  return worst;
}

FitConfig config(std::size_t K, double eps, std::uint64_t seed) {
  FitConfig cfg;
  cfg.num_components = K;
  cfg.epsilon = eps;
  cfg.seed = seed;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST_SUITE("responsibilities") {
  TEST_CASE("single component takes everything") {
    const auto model = sampling::random_model(1, 4, 3, 1);
    const auto data = sampling::draw(model, 20, 2).data;
    const auto r = responsibilities(model, data);
    for (double g : r.gamma) CHECK(g == 1.0);
  }

  TEST_CASE("identical components split evenly") {
    const auto comps = std::vector<SimplexVector>{sv({0.3, 0.7}), sv({0.3, 0.7})};
    const MixtureModel model(sv({0.5, 0.5}), 1, comps);
    const auto r = responsibilities(model, binary_data(1, {0, 1, 1}));
    for (double g : r.gamma) CHECK(g == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("weighted posterior 6/13 and 7/13") {
    // pi_1(x=1) = 0.2, pi_2(x=1) = 0.1
    const MixtureModel model(sv({0.3, 0.7}), 1, {sv({0.8, 0.2}), sv({0.9, 0.1})});
    const auto r = responsibilities(model, binary_data(1, {1}));
    CHECK(r(0, 0) == doctest::Approx(6.0 / 13.0).epsilon(1e-14));
    CHECK(r(0, 1) == doctest::Approx(7.0 / 13.0).epsilon(1e-14));
    CHECK(r.log_evidence[0] == doctest::Approx(std::log(0.13)).epsilon(1e-14));
  }

  TEST_CASE("hard zero in every component raises AllComponentsVanish") {
    const MixtureModel model(sv({0.5, 0.5}), 1, {sv({1.0, 0.0}), sv({1.0, 0.0})});
    try {
      responsibilities(model, binary_data(1, {0, 1}));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AllComponentsVanish);
    }
  }

  TEST_CASE("rows stay normalized for D = 784 with extreme entries") {
    std::mt19937_64 rng(7);
    const std::size_t D = 784, K = 3;
    std::vector<SimplexVector> comps;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t c = 0; c < K * D; ++c) {
      const double mu = coin(rng) ? 1e-6 : 1.0 - 1e-6;
      comps.push_back(sv({1.0 - mu, mu}));
    }
    const MixtureModel model(sv({0.2, 0.3, 0.5}), D, comps);
    const auto data = sampling::draw(sampling::random_model(2, D, 2, 3), 50, 4).data;
    const auto r = responsibilities(model, data);
    for (std::size_t n = 0; n < r.num_samples; ++n) {
      double sum = 0.0;
      for (double g : r.row(n)) {
        CHECK(g >= 0.0);
        CHECK(std::isfinite(g));
        sum += g;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-10);
    }
  }

  TEST_CASE("results do not depend on the worker count") {
    const auto model = sampling::random_model(3, 30, 4, 11);
    const auto data = sampling::draw(model, 333, 12).data;
    const auto a = responsibilities(model, data, 1);
    const auto b = responsibilities(model, data, 4);
    CHECK(a.gamma == b.gamma);
    CHECK(a.log_evidence == b.log_evidence);
  }
}

TEST_SUITE("update_weights") {
  TEST_CASE("uniform responsibilities give uniform weights") {
    const auto a = update_weights(make_resp(4, std::vector<double>(40, 0.25)));
    for (std::size_t k = 0; k < 4; ++k) CHECK(a[k] == doctest::Approx(0.25).epsilon(1e-15));
  }

  TEST_CASE("one-hot rows count samples") {
    const auto a = update_weights(make_resp(2, {1, 0, 0, 1}));
    CHECK(a[0] == 0.5);
    CHECK(a[1] == 0.5);
  }

  TEST_CASE("column (1, 0.5, 0) averages to 0.5") {
    const auto a = update_weights(make_resp(2, {1, 0, 0.5, 0.5, 0, 1}));
    CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_SUITE("update_theta") {
  TEST_CASE("responsibility on one sample gives its one-hot vectors") {
    const auto data = Dataset(3, 2, 3, {0, 1, 2, 2, 1, 0});
    const auto theta = update_theta(make_resp(2, {0, 1, 1, 0, 0, 1}), data, 1e-8);
    // component 0 only sees sample 1 = (2, 2)
    CHECK(theta.cell(0, 0) == SimplexVector::vertex(3, 2));
    CHECK(theta.cell(0, 1) == SimplexVector::vertex(3, 2));
  }

  TEST_CASE("uniform responsibilities give empirical frequencies") {
    const auto model = sampling::random_model(2, 5, 4, 21);
    const auto data = sampling::draw(model, 200, 22).data;
    const auto theta = update_theta(make_resp(1, std::vector<double>(200, 1.0)), data, 1e-8);
    for (std::size_t d = 0; d < 5; ++d) {
      std::vector<double> freq(4, 0.0);
      for (std::size_t n = 0; n < 200; ++n) freq[data.sample(n)[d]] += 1.0 / 200.0;
      for (std::size_t i = 0; i < 4; ++i) {
        CHECK(theta.cell(0, d)[i] == doctest::Approx(freq[i]).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("samples {0, 1, 1} give theta bar 2/3") {
    const auto theta = update_theta(make_resp(1, {1, 1, 1}), binary_data(1, {0, 1, 1}), 1e-8);
    CHECK(theta.cell(0, 0)[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  }

  TEST_CASE("empty component raises or falls back") {
    const auto data = binary_data(1, {0, 1});
    const auto resp = make_resp(2, {1, 0, 1, 0});
    try {
      update_theta(resp, data, 1e-8);
      FAIL("expected EmptyCluster");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyCluster);
    }
    const ThetaField previous(2, 1, {sv({0.5, 0.5}), sv({0.1, 0.9})});
    std::vector<std::size_t> empty;
    const auto theta = update_theta(resp, data, 1e-8, &previous, &empty);
    REQUIRE(empty == std::vector<std::size_t>{1});
    CHECK(theta.cell(1, 0) == previous.cell(1, 0));
    CHECK(theta.cell(0, 0)[1] == 0.5);
  }
}

TEST_SUITE("m_step") {
  TEST_CASE("epsilon 0 returns theta") {
    const auto model = sampling::random_model(2, 6, 3, 31);
    const ThetaField theta(2, 6, model.components());
    const auto m = mfg_m_step(theta, kernel::CostSpec::default_linear(0.0), {});
    for (std::size_t c = 0; c < 12; ++c) {
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(m.components[c][i] - theta.cells()[c][i]) <= 1e-10);
      }
    }
  }

  TEST_CASE("uniform theta stays uniform for any epsilon") {
    for (double eps : {0.0, 0.05, 0.5}) {
      const ThetaField theta(1, 2, {SimplexVector::uniform(4), SimplexVector::uniform(4)});
      const auto m = mfg_m_step(theta, kernel::CostSpec::default_linear(eps), {});
      for (const auto& c : m.components) {
        for (double p : c.entries()) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("Bernoulli theta bar 0.3 gives (0.7, 0.3)") {
    const ThetaField theta(1, 1, {sv({0.7, 0.3})});
    const auto m = mfg_m_step(theta, kernel::CostSpec::default_linear(0.0), {});
    CHECK(m.components[0][0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(m.components[0][1] == doctest::Approx(0.3).epsilon(1e-12));
  }

  TEST_CASE("errors name the failing subsystem") {
    const ThetaField theta(2, 3, std::vector<SimplexVector>(6, sv({0.4, 0.6})));
    auto cost = kernel::CostSpec::default_linear(0.05);
    kernel::SolverConfig solver;
    solver.max_policy_iterations = 1;
    // A transition matrix of the wrong size makes every subsystem fail.
    std::vector<StochasticMatrix> warm(6, StochasticMatrix::uniform(3));
    try {
      mfg_m_step(theta, cost, solver, warm);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionMismatch);
      CHECK(std::string(e.what()).find("(k=0, d=0)") != std::string::npos);
    }
  }

  TEST_CASE("worker count does not change the result") {
    const auto model = sampling::random_model(3, 8, 5, 41);
    const ThetaField theta(3, 8, model.components());
    const auto cost = kernel::CostSpec::default_linear(0.05);
    const auto a = mfg_m_step(theta, cost, {}, {}, 1);
    const auto b = mfg_m_step(theta, cost, {}, {}, 3);
    CHECK(a.components == b.components);
  }
}

TEST_SUITE("fit") {
  TEST_CASE("random initialization is seeded and normalized") {
    const auto a = random_initial_model(3, 4, 5, 99);
    const auto b = random_initial_model(3, 4, 5, 99);
    CHECK(a == b);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a.weights()[k] == doctest::Approx(1.0 / 3.0));
    for (const auto& c : a.components()) CHECK(c.min_entry() > 0.0);
    CHECK(random_unit_interval(0) > 0.0);
    CHECK(random_unit_interval(~std::uint64_t{0}) < 1.0);
  }

  TEST_CASE("K = 1 at epsilon 0 recovers the empirical frequencies") {
    const auto data = sampling::draw(sampling::random_model(2, 6, 3, 51), 300, 52).data;
    for (bool baseline : {false, true}) {
      auto cfg = config(1, 0.0, 3);
      const auto r = baseline ? em_baseline_fit(data, cfg) : fit(data, cfg);
      CHECK(r.converged);
      if (baseline) CHECK(r.iterations <= 2);
      for (std::size_t d = 0; d < 6; ++d) {
        std::vector<double> freq(3, 0.0);
        for (std::size_t n = 0; n < 300; ++n) freq[data.sample(n)[d]] += 1.0;
        for (std::size_t i = 0; i < 3; ++i) {
          CHECK(std::abs(r.model.component(0, d)[i] - freq[i] / 300.0) <= 1e-10);
        }
      }
    }
  }

  TEST_CASE("epsilon 0 iterates match the classical EM baseline") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto data = sampling::draw(sampling::random_model(3, 8, 3, seed), 300, seed + 100).data;
      auto cfg = config(3, 0.0, seed);
      cfg.max_iterations = 40;
      cfg.tolerance = 1e-300;
      cfg.record_iterates = true;
      const auto a = fit(data, cfg);
      const auto b = em_baseline_fit(data, cfg);
      REQUIRE(a.iterates.size() == b.iterates.size());
      double worst = 0.0;
      for (std::size_t h = 0; h < a.iterates.size(); ++h) {
        worst = std::max(worst, max_model_diff(a.iterates[h], b.iterates[h]));
      }
      CHECK(worst <= 1e-8);
      for (std::size_t h = 0; h < a.loglik_trace.size(); ++h) {
        CHECK(a.loglik_trace[h] == doctest::Approx(b.loglik_trace[h]).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("baseline log-likelihood never decreases") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto data = sampling::draw(sampling::random_model(3, 10, 2, seed), 400, seed + 7).data;
      auto cfg = config(3, 0.0, seed);
      cfg.max_iterations = 100;
      const auto r = em_baseline_fit(data, cfg);
      for (std::size_t h = 1; h < r.loglik_trace.size(); ++h) {
        CHECK(r.loglik_trace[h] >= r.loglik_trace[h - 1] - 1e-10);
      }
    }
  }

  TEST_CASE("converged epsilon 0 fit is an E/M fixed point") {
    const auto truth = sampling::bernoulli_model(
        {0.4, 0.6}, {{0.1, 0.2, 0.8, 0.9, 0.3}, {0.9, 0.7, 0.2, 0.1, 0.6}});
    const auto data = sampling::draw(truth, 600, 61).data;
    auto cfg = config(2, 0.0, 5);
    cfg.max_iterations = 2000;
    const auto r = fit(data, cfg);
    REQUIRE(r.converged);
    CHECK(r.theta_residual_trace.back() < cfg.tolerance);
    const auto resp = responsibilities(r.model, data);
    const auto alpha = update_weights(resp);
    const auto theta = update_theta(resp, data, 1e-8);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(std::abs(alpha[k] - r.model.weights()[k]) <= 1e-6);
      for (std::size_t d = 0; d < 5; ++d) {
        CHECK(std::abs(theta.cell(k, d)[1] - r.model.component(k, d)[1]) <= 1e-6);
      }
    }
  }

  TEST_CASE("permuting the initial components permutes the result") {
    const auto data = sampling::draw(sampling::random_model(3, 6, 3, 71), 300, 72).data;
    for (double eps : {0.0, 0.05}) {
      auto cfg = config(3, eps, 0);
      const auto init = random_initial_model(3, 6, 3, 73);
      cfg.initial_model = init;
      cfg.max_iterations = 30;
      const auto a = fit(data, cfg);

      const std::vector<std::size_t> perm{2, 0, 1};
      std::vector<SimplexVector> comps;
      for (std::size_t k : perm) {
        for (std::size_t d = 0; d < 6; ++d) comps.push_back(init.component(k, d));
      }
      cfg.initial_model = MixtureModel(init.weights(), 6, comps);
      const auto b = fit(data, cfg);
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::abs(b.model.weights()[j] - a.model.weights()[perm[j]]) <= 1e-10);
        for (std::size_t d = 0; d < 6; ++d) {
          for (std::size_t i = 0; i < 3; ++i) {
            CHECK(std::abs(b.model.component(j, d)[i] - a.model.component(perm[j], d)[i]) <= 1e-10);
          }
        }
      }
    }
  }

  TEST_CASE("entropic fits keep every entry strictly positive") {
    const auto data = sampling::draw(sampling::random_model(2, 10, 4, 81), 300, 82).data;
    auto cfg = config(3, 0.05, 8);
    cfg.max_iterations = 40;
    const auto r = fit(data, cfg);
    for (const auto& c : r.model.components()) CHECK(c.min_entry() > 0.0);
    CHECK(r.subsystem_diagnostics.size() == 30);
    for (const auto& d : r.subsystem_diagnostics) CHECK(d.hjb_residual <= 1e-9);
  }

  TEST_CASE("multi-threaded fit is bitwise identical") {
    const auto data = sampling::draw(sampling::random_model(2, 12, 3, 91), 250, 92).data;
    auto cfg = config(2, 0.05, 4);
    cfg.max_iterations = 15;
    const auto a = fit(data, cfg);
    cfg.threads = 4;
    const auto b = fit(data, cfg);
    CHECK(a.model == b.model);
    CHECK(a.loglik_trace == b.loglik_trace);
  }

  TEST_CASE("hitting the iteration cap is reported, not thrown") {
    const auto data = sampling::draw(sampling::random_model(2, 5, 2, 5), 100, 6).data;
    auto cfg = config(2, 0.05, 1);
    cfg.max_iterations = 1;
    cfg.tolerance = 1e-300;
    const auto r = fit(data, cfg);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.loglik_trace.size() == 2);
    CHECK(r.theta_residual_trace.size() == 1);
    CHECK_FALSE(r.warnings.empty());
  }

  TEST_CASE("invalid configurations are rejected") {
    const auto data = binary_data(1, {0, 1});
    auto cfg = config(0, 0.05, 0);
    CHECK_THROWS_AS(fit(data, cfg), Error);
    cfg = config(2, 0.05, 0);
    cfg.tolerance = 0.0;
    CHECK_THROWS_AS(fit(data, cfg), Error);
  }

  TEST_CASE("two well separated clusters are recovered at epsilon 0") {
    std::vector<std::vector<double>> mean(2, std::vector<double>(20));
    for (std::size_t d = 0; d < 20; ++d) {
      mean[0][d] = d % 2 ? 0.15 : 0.85;
      mean[1][d] = 1.0 - mean[0][d];
    }
    const auto truth = sampling::bernoulli_model({0.45, 0.55}, mean);
    const auto data = sampling::draw(truth, 2000, 101).data;
    const auto r = fit(data, config(2, 0.0, 102));
    // align by the first coordinate
    const std::size_t first = r.model.component(0, 0)[1] > 0.5 ? 0 : 1;
    for (std::size_t k = 0; k < 2; ++k) {
      const std::size_t j = k == 0 ? first : 1 - first;
      CHECK(std::abs(r.model.weights()[j] - truth.weights()[k]) <= 0.05);
      for (std::size_t d = 0; d < 20; ++d) {
        CHECK(std::abs(r.model.component(j, d)[1] - mean[k][d]) <= 0.05);
      }
    }
  }
}

TEST_SUITE("likelihoods") {
  TEST_CASE("single term is log 0.25") {
    const MixtureModel model(sv({1.0}), 2, {sv({0.5, 0.5}), sv({0.5, 0.5})});
    CHECK(log_likelihood(model, binary_data(2, {1, 0})) == doctest::Approx(std::log(0.25)));
  }

  TEST_CASE("duplicating the data doubles the value") {
    const auto model = sampling::random_model(2, 4, 3, 111);
    const auto d1 = sampling::draw(model, 50, 112).data;
    std::vector<State> twice(d1.samples().begin(), d1.samples().end());
    twice.insert(twice.end(), d1.samples().begin(), d1.samples().end());
    const Dataset d2(100, 4, 3, twice);
    CHECK(log_likelihood(model, d2) == doctest::Approx(2.0 * log_likelihood(model, d1)).epsilon(1e-13));
  }

  TEST_CASE("toy model matches hand evaluation") {
    // pi_1 = Bern(0.2) x Bern(0.6), pi_2 = Bern(0.7) x Bern(0.1), alpha = (0.4, 0.6)
    const MixtureModel model(sv({0.4, 0.6}), 2,
                             {sv({0.8, 0.2}), sv({0.4, 0.6}), sv({0.3, 0.7}), sv({0.9, 0.1})});
    const auto data = binary_data(2, {0, 0, 1, 1, 1, 0});
    const double p00 = 0.4 * 0.8 * 0.4 + 0.6 * 0.3 * 0.9;
    const double p11 = 0.4 * 0.2 * 0.6 + 0.6 * 0.7 * 0.1;
    const double p10 = 0.4 * 0.2 * 0.4 + 0.6 * 0.7 * 0.9;
    CHECK(log_likelihood(model, data) ==
          doctest::Approx(std::log(p00) + std::log(p11) + std::log(p10)).epsilon(1e-14));
  }

  TEST_CASE("zero mass sample gives minus infinity") {
    const MixtureModel model(sv({1.0}), 1, {sv({1.0, 0.0})});
    const double v = log_likelihood(model, binary_data(1, {1}));
    CHECK(v == -std::numeric_limits<double>::infinity());
  }

  TEST_CASE("entropic link values") {
    CHECK(entropic_link(0.5, 0.3) == 0.5);
    CHECK(entropic_link(0.9, 0.05) == doctest::Approx(0.9 + 0.025 * std::log(9.0)).epsilon(1e-15));
    CHECK(entropic_link(0.37, 0.0) == 0.37);
  }

  TEST_CASE("modified likelihood at epsilon 0 is the expected likelihood") {
    const auto model = sampling::random_model(3, 7, 2, 121);
    const auto data = sampling::draw(model, 80, 122).data;
    CHECK(modified_log_likelihood(model, data, 0.0) ==
          doctest::Approx(expected_log_likelihood(model, data)).epsilon(1e-13));
  }

  TEST_CASE("modified likelihood accepts mu = 0.9 and rejects boundary mu") {
    const MixtureModel ok(sv({1.0}), 1, {sv({0.1, 0.9})});
    const auto data = binary_data(1, {1, 0});
    const double f = 0.9 + 0.025 * std::log(9.0);
    const double expected = std::log(f) + std::log(1.0 - f);
    CHECK(modified_log_likelihood(ok, data, 0.05) == doctest::Approx(expected).epsilon(1e-13));

    const MixtureModel bad(sv({1.0}), 1, {sv({0.001, 0.999})});
    try {
      modified_log_likelihood(bad, data, 0.05);
      FAIL("expected OutOfDomain");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OutOfDomain);
    }
    const MixtureModel three(sv({1.0}), 1, {sv({0.2, 0.3, 0.5})});
    CHECK_THROWS_AS(modified_log_likelihood(three, Dataset(1, 1, 3, {2}), 0.05), Error);
  }
}
