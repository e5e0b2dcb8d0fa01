#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "mfgmix/report.hpp"
#include "support/oracles.hpp"

using namespace mfgmix;
using namespace mfgmix::report;

namespace {

mixture::Responsibilities resp_of(std::size_t K, std::vector<double> gamma) {
  mixture::Responsibilities r;
  r.num_components = K;
  r.num_samples = gamma.size() / K;
  r.gamma = std::move(gamma);
  r.log_evidence.assign(r.num_samples, 0.0);
  return r;
}

Dataset labeled(std::vector<int> labels) {
  const std::size_t N = labels.size();
  return Dataset(N, 1, 2, std::vector<State>(N, 0), std::move(labels));
}

std::vector<std::vector<double>> rows_of(const Table& t) {
  std::vector<std::vector<double>> out(t.size, std::vector<double>(t.size));
  for (std::size_t r = 0; r < t.size; ++r)
    for (std::size_t c = 0; c < t.size; ++c) out[r][c] = t(r, c);
  return out;
}

std::filesystem::path temp_dir() {
  return std::filesystem::temp_directory_path() / "mfgmix_test_report";
}

}  // namespace

TEST_SUITE("confusion_matrix") {
  TEST_CASE("one-hot responsibilities give the identity") {
    const auto H = confusion_matrix(resp_of(2, {1, 0, 0, 1, 1, 0}), labeled({0, 1, 0}));
    CHECK(H.values == std::vector<double>{1, 0, 0, 1});
  }

  TEST_CASE("K = 1 is [1]") {
    const auto H = confusion_matrix(resp_of(1, {1, 1}), labeled({0, 0}));
    CHECK(H.values == std::vector<double>{1});
  }

  TEST_CASE("averaging example") {
    const auto H = confusion_matrix(resp_of(2, {0.9, 0.1, 0.7, 0.3, 0.2, 0.8, 0.4, 0.6}),
                                    labeled({0, 0, 1, 1}));
    CHECK(H(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(H(0, 1) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(H(1, 0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(H(1, 1) == doctest::Approx(0.7).epsilon(1e-15));
  }

  TEST_CASE("class without samples is EmptyClass") {
    try {
      confusion_matrix(resp_of(2, {0.5, 0.5, 0.5, 0.5}), labeled({0, 0}));
      FAIL("expected EmptyClass");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyClass);
    }
  }

  TEST_CASE("rows sum to one for random responsibilities") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t K = 2 + trial % 5, N = 40;
      std::vector<double> gamma;
      std::vector<int> labels;
      for (std::size_t n = 0; n < N; ++n) {
        const auto row = oracle::random_interior_simplex(rng, K, 0.0);
        gamma.insert(gamma.end(), row.begin(), row.end());
        labels.push_back(static_cast<int>(n % K));
      }
      const auto H = confusion_matrix(resp_of(K, gamma), labeled(labels));
      for (std::size_t k = 0; k < K; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < K; ++j) s += H(k, j);
        CHECK(std::abs(s - 1.0) <= 1e-10);
      }
    }
  }
}

TEST_SUITE("align_clusters") {
  TEST_CASE("identity stays") {
    const auto p = align_clusters(Table::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
    CHECK(p == std::vector<std::size_t>{0, 1, 2});
  }

  TEST_CASE("two clusters swap") {
    const auto p = align_clusters(Table::from_rows({{0.1, 0.9}, {0.8, 0.2}}));
    CHECK(p == std::vector<std::size_t>{1, 0});
  }

  TEST_CASE("ties go to the lexicographically smallest permutation") {
    CHECK(align_clusters(Table::from_rows({{0.5, 0.5}, {0.5, 0.5}})) ==
          std::vector<std::size_t>{0, 1});
    const auto p = align_clusters(Table::from_rows({{0.2, 0.2, 0.6}, {0.2, 0.2, 0.6}, {0.6, 0.2, 0.2}}));
    CHECK(p == oracle::best_permutation({{0.2, 0.2, 0.6}, {0.2, 0.2, 0.6}, {0.6, 0.2, 0.2}}));
  }

  TEST_CASE("matches exhaustive search for K up to 6") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t K = 1 + trial % 6;
      std::vector<std::vector<double>> rows(K, std::vector<double>(K));
      for (auto& r : rows) {
        for (auto& v : r) v = u(rng);
        // occasional coarse values force ties
        if (trial % 4 == 0) for (auto& v : r) v = std::round(v * 2.0) / 2.0;
      }
      CHECK(align_clusters(Table::from_rows(rows)) == oracle::best_permutation(rows));
    }
  }

  TEST_CASE("report aligns the diagonal") {
    const auto r = cluster_report(resp_of(2, {0.1, 0.9, 0.3, 0.7, 0.8, 0.2}), labeled({0, 0, 1}));
    CHECK(r.permutation == std::vector<std::size_t>{1, 0});
    CHECK(r.diagonal_mean == doctest::Approx((0.8 + 0.8) / 2.0));
    CHECK(r.class_sizes == std::vector<std::size_t>{2, 1});
    const auto A = r.aligned();
    CHECK(A(0, 0) == doctest::Approx(0.8));
    CHECK(A(1, 1) == doctest::Approx(0.8));
    CHECK(rows_of(A)[0][1] == doctest::Approx(0.2));
  }
}

TEST_SUITE("exports") {
  TEST_CASE("extreme Bernoulli parameters are white and black") {
    const auto one = SimplexVector::vertex(2, 1), zero = SimplexVector::vertex(2, 0);
    const MixtureModel m(SimplexVector::uniform(2), 4, {one, one, one, one, zero, zero, zero, zero});
    const auto imgs = parameter_images(m, 2);
    CHECK(imgs[0].pixels == std::vector<std::uint8_t>(4, 255));
    CHECK(imgs[1].pixels == std::vector<std::uint8_t>(4, 0));
  }

  TEST_CASE("uniform four-state pixel is 128") {
    CHECK(expected_grey(SimplexVector::uniform(4)) == 128);
    CHECK(expected_grey(SimplexVector::validate(std::vector<double>{0.7, 0.3})) == 77);
  }

  TEST_CASE("non-square D is NotSquare") {
    const MixtureModel m(SimplexVector::uniform(1), 3, std::vector<SimplexVector>(3, SimplexVector::uniform(2)));
    try {
      parameter_images(m, 2);
      FAIL("expected NotSquare");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotSquare);
    }
  }

  TEST_CASE("PGM written then read back is exact") {
    std::mt19937_64 rng(4);
    std::vector<SimplexVector> comps;
    for (int c = 0; c < 2 * 9; ++c) comps.push_back(SimplexVector::validate(oracle::random_interior_simplex(rng, 5)));
    const MixtureModel m(SimplexVector::uniform(2), 9, comps);
    const auto paths = export_parameter_images(m, 3, temp_dir(), "mu");
    const auto imgs = parameter_images(m, 3);
    REQUIRE(paths.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) CHECK(read_pgm(paths[k]) == imgs[k]);
    std::filesystem::remove_all(temp_dir());
  }

  TEST_CASE("histogram CSV rows") {
    ClusterReport r;
    r.H = Table::from_rows({{1, 0}, {0, 1}});
    r.permutation = {0, 1};
    CHECK(histogram_csv(r, {"a", "b"}) == "class,cluster_0,cluster_1\na,1,0\nb,0,1\n");
    ClusterReport one;
    one.H = Table::from_rows({{1}});
    one.permutation = {0};
    CHECK(histogram_csv(one, {"x"}) == "class,cluster_0\nx,1\n");
    ClusterReport full;
    full.H = Table::from_rows({{0.1, 0.9}, {0.6, 0.4}});
    full.permutation = {1, 0};
    CHECK(histogram_csv(full, {"3", "5"}) ==
          "class,cluster_0,cluster_1\n3,0.90000000000000002,0.10000000000000001\n"
          "5,0.40000000000000002,0.59999999999999998\n");
    CHECK_THROWS_AS(export_histogram_csv(r, {"a", "b"}, "/nonexistent/dir/h.csv"), Error);
  }
}
