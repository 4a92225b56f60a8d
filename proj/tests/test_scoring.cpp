#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "coevgan/errors.hpp"
#include "coevgan/rng.hpp"
#include "coevgan/scoring.hpp"
#include "oracles.hpp"

using namespace coevgan;
using scoring::GaussianSummary;

namespace {

GaussianSummary make_summary(std::initializer_list<double> mean,
                             std::initializer_list<double> cov_rowmajor) {
  GaussianSummary s;
  const int d = static_cast<int>(mean.size());
  s.mean = Eigen::VectorXd(d);
  int i = 0;
  for (double v : mean) s.mean(i++) = v;
  s.covariance = Eigen::MatrixXd(d, d);
  i = 0;
  for (double v : cov_rowmajor) {
    s.covariance(i / d, i % d) = v;
    ++i;
  }
  return s;
}

Matrix gaussian_batch(int n, int d, Rng& rng) {
  Matrix m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("summarize: two-point arithmetic") {
  Matrix m(2, 2);
  m << 0, 0, 2, 0;
  const auto s = scoring::summarize(m);
  CHECK(s.mean(0) == 1.0);
  CHECK(s.mean(1) == 0.0);
  CHECK(s.covariance(0, 0) == 2.0);  // unbiased: (1 + 1) / (2 - 1)
  CHECK(s.covariance(0, 1) == 0.0);
  CHECK(s.covariance(1, 1) == 0.0);
}

TEST_CASE("summarize: duplicated dataset against the direct formula") {
  Rng rng(17);
  const Matrix m = gaussian_batch(40, 3, rng);
  Matrix doubled(80, 3);
  doubled << m, m;
  const auto s = scoring::summarize(doubled);

  // direct formula: same mean; covariance sums the same squares over 2n-1
  const Eigen::VectorXd mean = m.colwise().mean();
  const Matrix centered = m.rowwise() - mean.transpose();
  const Eigen::MatrixXd direct = 2.0 * centered.transpose() * centered / (80.0 - 1.0);
  CHECK((s.mean - mean).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((s.covariance - direct).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("summarize: concentrates on N(0, I) moments (Monte Carlo oracle)") {
  Rng rng(2718);
  const Matrix m = gaussian_batch(100000, 2, rng);
  const auto s = scoring::summarize(m);
  CHECK(std::abs(s.mean(0)) <= 0.02);
  CHECK(std::abs(s.mean(1)) <= 0.02);
  CHECK(std::abs(s.covariance(0, 0) - 1.0) <= 0.03);
  CHECK(std::abs(s.covariance(1, 1) - 1.0) <= 0.03);
  CHECK(std::abs(s.covariance(0, 1)) <= 0.03);
}

TEST_CASE("summarize: fewer than two samples is an error") {
  CHECK_THROWS_AS(scoring::summarize(Matrix::Zero(1, 2)), ConfigError);
}

TEST_CASE("frechet_distance: closed forms in one dimension") {
  const auto std_normal = make_summary({0.0}, {1.0});
  CHECK(scoring::frechet_distance(std_normal, std_normal).value <= 1e-9);

  const auto shifted = make_summary({1.0}, {1.0});
  CHECK(scoring::frechet_distance(std_normal, shifted).value ==
        doctest::Approx(1.0).epsilon(1e-9));

  const auto wide = make_summary({0.0}, {4.0});
  CHECK(scoring::frechet_distance(std_normal, wide).value ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("frechet_distance: non-commuting 2-D case matches the Jacobi oracle") {
  const auto a = make_summary({0.3, -1.2}, {2.0, 0.5, 0.5, 1.0});
  const auto b = make_summary({-0.7, 0.4}, {1.0, -0.3, -0.3, 1.5});
  // covariances do not commute
  CHECK((a.covariance * b.covariance - b.covariance * a.covariance).norm() > 0.01);
  const double got = scoring::frechet_distance(a, b).value;
  const double want = oracles::frechet(a.mean, a.covariance, b.mean, b.covariance);
  CHECK(got == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("frechet_distance: symmetric in its arguments") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = gaussian_batch(200, 3, rng);
    const Matrix y = gaussian_batch(180, 3, rng) * 1.7;
    const auto a = scoring::summarize(x);
    const auto b = scoring::summarize(y);
    CHECK(std::abs(scoring::frechet_distance(a, b).value -
                   scoring::frechet_distance(b, a).value) <= 1e-9);
  }
}

TEST_CASE("frechet_distance: translation behavior") {
  Rng rng(6);
  const Matrix x = gaussian_batch(300, 2, rng);
  const Matrix y = gaussian_batch(300, 2, rng) * 1.3;
  Eigen::RowVector2d v(0.8, -2.5);

  const double base = scoring::frechet(x, y).value;
  const double both = scoring::frechet((x.rowwise() + v).eval(), (y.rowwise() + v).eval()).value;
  CHECK(std::abs(base - both) <= 1e-9);

  // identical covariances, one set shifted: distance is exactly |v|^2
  const double shifted = scoring::frechet(x, (x.rowwise() + v).eval()).value;
  CHECK(std::abs(shifted - v.squaredNorm()) <= 1e-9);
}

TEST_CASE("frechet_distance: diagonal covariances use the commuting closed form") {
  const auto a = make_summary({0.0, 0.0}, {2.25, 0.0, 0.0, 0.49});
  const auto b = make_summary({0.0, 0.0}, {1.0, 0.0, 0.0, 4.0});
  const double want = (1.5 - 1.0) * (1.5 - 1.0) + (0.7 - 2.0) * (0.7 - 2.0);
  CHECK(scoring::frechet_distance(a, b).value == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("frechet_distance: collapsed sample sets are regularized, not fatal") {
  Matrix collapsed(50, 2);
  for (int i = 0; i < 50; ++i) collapsed.row(i) << 3.0, -1.0;
  Rng rng(9);
  const Matrix x = gaussian_batch(100, 2, rng);
  const double v = scoring::frechet(x, collapsed).value;
  CHECK(std::isfinite(v));
  CHECK(v >= 0.0);
}

TEST_CASE("frechet_distance: dimension mismatch is an error") {
  const auto a = make_summary({0.0}, {1.0});
  const auto b = make_summary({0.0, 0.0}, {1.0, 0.0, 0.0, 1.0});
  CHECK_THROWS_AS(scoring::frechet_distance(a, b), ConfigError);
}

TEST_CASE("mode_coverage: exact centers, collapse and the 3-sigma rule") {
  data::TargetSpec spec{data::TargetKind::GaussianRing, 8, 2, 0.05, 2.0, 4000};
  const auto centers = data::mode_centers(spec);

  Matrix at_centers(8, 2);
  for (int k = 0; k < 8; ++k) at_centers.row(k) = centers[static_cast<std::size_t>(k)];
  auto cov = scoring::mode_coverage(at_centers, spec, 1.0);
  CHECK(cov.modes_hit == 8);
  CHECK(cov.high_quality_fraction == 1.0);

  Matrix collapsed(100, 2);
  for (int i = 0; i < 100; ++i) collapsed.row(i) = centers[3];
  cov = scoring::mode_coverage(collapsed, spec, 1.0);
  CHECK(cov.modes_hit == 1);

  const Matrix samples = data::generate_target(spec, 21);
  cov = scoring::mode_coverage(samples, spec, 3.0);
  CHECK(cov.high_quality_fraction >= 0.98);
  CHECK(cov.modes_hit == 8);
}
