#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dlmtrace/analysis.hpp"
#include "dlmtrace/features.hpp"
#include "dlmtrace/simulator.hpp"
#include "oracles.hpp"

using namespace dlmtrace;

namespace {

std::vector<Matrix> random_maps(std::mt19937_64& rng, int n, int rows, int cols) {
  std::normal_distribution<double> g;
  std::vector<Matrix> maps;
  for (int k = 0; k < n; ++k) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    maps.push_back(m);
  }
  return maps;
}

double frobenius2(const std::vector<Matrix>& maps, bool center) {
  long double s = 0;
  const auto rows = maps.front().rows();
  const auto cols = maps.front().cols();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      long double mean = 0;
      if (center) {
        for (const auto& m : maps) mean += m(r, c);
        mean /= maps.size();
      }
      for (const auto& m : maps) s += (m(r, c) - mean) * (m(r, c) - mean);
    }
  }
  return static_cast<double>(s);
}

}  // namespace

TEST_CASE("identity stack") {
  std::vector<Matrix> maps{Matrix{{1.0, 0.0}}, Matrix{{0.0, 1.0}}};
  const auto s = svd_spectrum(maps, false);
  REQUIRE(s.size() == 2);
  CHECK(s(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("analytic small cases") {
  std::vector<Matrix> diag{Matrix{{3.0, 0.0}}, Matrix{{0.0, 4.0}}};
  auto s = svd_spectrum(diag, false);
  CHECK(std::abs(s(0) - 4.0) <= 1e-9 * 4.0);
  CHECK(std::abs(s(1) - 3.0) <= 1e-9 * 3.0);

  // Rank one: u v^T with |u| = 3, |v| = 5.
  std::vector<Matrix> rank1{Matrix{{0.0, 3.0, 4.0}} * 1.0, Matrix{{0.0, 3.0, 4.0}} * 2.0,
                            Matrix{{0.0, 3.0, 4.0}} * 2.0};
  s = svd_spectrum(rank1, false);
  REQUIRE(s.size() == 3);
  CHECK(std::abs(s(0) - 15.0) <= 1e-9 * 15.0);
  CHECK(std::abs(s(1)) <= 1e-9 * 15.0);

  // Centering [1 1; 3 3] leaves [-1 -1; 1 1] with sigma 2.
  std::vector<Matrix> two{Matrix{{1.0, 1.0}}, Matrix{{3.0, 3.0}}};
  s = svd_spectrum(two, true);
  CHECK(std::abs(s(0) - 2.0) <= 1e-9 * 2.0);
  CHECK(std::abs(s(1)) <= 1e-9);

  // 2x2 maps are flattened row-major into length-4 rows.
  std::vector<Matrix> square{Matrix{{1.0, 0.0}, {0.0, 0.0}}, Matrix{{0.0, 0.0}, {0.0, 2.0}}};
  s = svd_spectrum(square, false);
  CHECK(std::abs(s(0) - 2.0) <= 1e-9 * 2.0);
  CHECK(std::abs(s(1) - 1.0) <= 1e-9);
}

TEST_CASE("centred identical maps give a zero spectrum") {
  std::mt19937_64 rng(1);
  const auto base = random_maps(rng, 1, 4, 5).front();
  std::vector<Matrix> maps(7, base);
  const auto s = svd_spectrum(maps, true);
  CHECK(s.size() == 7);
  CHECK(s.isZero(0));
  const std::vector<Matrix> single{base};
  CHECK(svd_spectrum(single, true).isZero(0));
  CHECK(svd_spectrum(single, false)(0) == doctest::Approx(base.norm()));
}

TEST_CASE("energy conservation") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const int n = std::uniform_int_distribution<int>(2, 60)(rng);
    const int rows = std::uniform_int_distribution<int>(1, 8)(rng);
    const int cols = std::uniform_int_distribution<int>(1, 8)(rng);
    const auto maps = random_maps(rng, n, rows, cols);
    for (bool center : {false, true}) {
      const auto s = svd_spectrum(maps, center);
      CHECK(s.size() == std::min<Eigen::Index>(n, rows * cols));
      const double expected = frobenius2(maps, center);
      CHECK(std::abs(s.squaredNorm() - expected) <= 1e-9 * expected);
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        CHECK(s(i) >= 0.0);
        if (i > 0) CHECK(s(i) <= s(i - 1));
      }
    }
  }
}

TEST_CASE("column permutation leaves the spectrum unchanged") {
  std::mt19937_64 rng(3);
  const auto maps = random_maps(rng, 12, 3, 4);
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Matrix> permuted;
  for (const auto& m : maps) {
    const RowVector f = flatten(m);
    Matrix p(3, 4);
    for (int k = 0; k < 12; ++k) p.data()[k] = f(perm[k]);
    permuted.push_back(p);
  }
  const auto a = svd_spectrum(maps, true);
  const auto b = svd_spectrum(permuted, true);
  CHECK((a - b).norm() <= 1e-9 * a.norm());
}

TEST_CASE("shape mismatch") {
  std::vector<Matrix> maps{Matrix::Zero(2, 2), Matrix::Zero(2, 3)};
  CHECK_THROWS_AS(svd_spectrum(maps, false), DataError);
  CHECK_THROWS_AS(svd_spectrum(std::vector<Matrix>{}, false), DataError);
}

TEST_CASE("spectrum comparison") {
  const Eigen::VectorXd a{{5.0, 3.0, 1.0, 0.5}};
  auto c = spectrum_compare(a, a, 2);
  CHECK(c.head_similarity == doctest::Approx(1.0));
  CHECK(c.tail_divergence == 0.0);

  const Eigen::VectorXd b{{5.0, 3.0, 0.2, 0.1}};
  c = spectrum_compare(a, b, 2);
  CHECK(c.head_similarity == doctest::Approx(1.0));
  CHECK(c.tail_divergence > 0.0);
  const double gap = std::sqrt(0.8 * 0.8 + 0.4 * 0.4);
  CHECK(c.tail_divergence ==
        doctest::Approx(gap / (std::sqrt(1.25) + std::sqrt(0.05))));

  CHECK(spectrum_compare(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), 1).tail_divergence == 0.0);
  CHECK_THROWS_AS(spectrum_compare(a, a, 4), UsageError);
  CHECK_THROWS_AS(spectrum_compare(a, a, 0), UsageError);
  CHECK_THROWS_AS(spectrum_compare(a, b.head(3), 1), DataError);

  CHECK(cosine_similarity(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)) == 1.0);
  CHECK(cosine_similarity(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)) == 0.0);
}

TEST_CASE("simulated pair agrees on the head more than on the tail") {
  ExperimentConfig cfg;
  cfg.scenario = default_scenario(Scenario::CMA);
  cfg.n_ref = 200;
  cfg.n_test = 1;
  const auto ex = generate_experiment(cfg);
  const auto sa = svd_spectrum(featurize_batch(ex.ref_a), true);
  const auto sb = svd_spectrum(featurize_batch(ex.ref_b), true);
  REQUIRE(sa.size() == sb.size());
  const Eigen::Index head = 5;
  const Eigen::Index tail = sa.size() - head;
  const auto c = spectrum_compare(sa, sb, head);
  const double tail_similarity = cosine_similarity(sa.tail(tail), sb.tail(tail));
  CHECK(c.head_similarity > tail_similarity);
}
