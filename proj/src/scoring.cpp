#include "coevgan/scoring.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <sstream>

#include "coevgan/errors.hpp"

namespace coevgan::scoring {

namespace {

constexpr double kDegenerateEig = 1e-10;
constexpr double kRegularizer = 1e-6;
constexpr double kNegativeTotalTol = 1e-8;

std::string describe(const GaussianSummary& s) {
  std::ostringstream os;
  os << "mean [" << s.mean.transpose() << "], cov [";
  for (Eigen::Index i = 0; i < s.covariance.rows(); ++i) {
    if (i) os << "; ";
    os << s.covariance.row(i);
  }
  os << "]";
  return os.str();
}

// add eps*I when the spectrum touches zero (collapsed generators emit a point)
Eigen::MatrixXd regularized(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < kDegenerateEig)
    return cov + kRegularizer * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
  return cov;
}

}  // namespace

GaussianSummary summarize(const Matrix& samples) {
  if (samples.rows() < 2)
    throw ConfigError("summarize: need at least 2 samples");
  GaussianSummary s;
  s.mean = samples.colwise().mean();
  const Matrix centered = samples.rowwise() - s.mean.transpose();
  Eigen::MatrixXd c =
      centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  s.covariance = 0.5 * (c + c.transpose());
  return s;
}

FrechetScore frechet_distance(const GaussianSummary& a, const GaussianSummary& b) {
  if (a.mean.size() != b.mean.size())
    throw ConfigError("frechet_distance: dimension mismatch");

  const Eigen::MatrixXd sa = regularized(0.5 * (a.covariance + a.covariance.transpose()));
  const Eigen::MatrixXd sb = regularized(0.5 * (b.covariance + b.covariance.transpose()));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_a(sa);
  Eigen::VectorXd eig_a = es_a.eigenvalues();
  for (Eigen::Index i = 0; i < eig_a.size(); ++i) {
    if (eig_a(i) < 0.0) {
      if (eig_a(i) < -kDegenerateEig)
        throw NumericalError("frechet_distance: indefinite covariance, " + describe(a));
      eig_a(i) = 0.0;
    }
  }
  const Eigen::MatrixXd sqrt_a = es_a.eigenvectors() *
                                 eig_a.cwiseSqrt().asDiagonal() *
                                 es_a.eigenvectors().transpose();

  Eigen::MatrixXd inner = sqrt_a * sb * sqrt_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_m(inner, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lam = es_m.eigenvalues();
  const double lam_scale = std::max(1.0, std::abs(lam.maxCoeff()));

  double sqrt_trace = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    double v = lam(i);
    if (v < 0.0) {
      if (v < -kDegenerateEig * lam_scale)
        throw NumericalError("frechet_distance: negative eigenvalue " +
                             std::to_string(v) + " in cross term; a = " +
                             describe(a) + "; b = " + describe(b));
      v = 0.0;
    }
    sqrt_trace += std::sqrt(v);
  }

  double value = (a.mean - b.mean).squaredNorm() + sa.trace() + sb.trace() -
                 2.0 * sqrt_trace;
  if (value < 0.0) {
    if (value < -kNegativeTotalTol)
      throw NumericalError("frechet_distance: negative total " +
                           std::to_string(value) + "; a = " + describe(a) +
                           "; b = " + describe(b));
    value = 0.0;
  }
  return {value, 0, 0};
}

FrechetScore frechet(const Matrix& real, const Matrix& fake) {
  FrechetScore score = frechet_distance(summarize(real), summarize(fake));
  score.n_real = static_cast<int>(real.rows());
  score.n_fake = static_cast<int>(fake.rows());
  return score;
}

ModeCoverage mode_coverage(const Matrix& samples, const data::TargetSpec& target,
                           double threshold) {
  const auto centers = data::mode_centers(target);
  std::vector<long> hits(centers.size(), 0);
  long high_quality = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double d = (samples.row(i).transpose() - centers[k]).norm();
      if (d < best) {
        best = d;
        best_k = k;
      }
    }
    if (best <= threshold * target.mode_std) {
      ++high_quality;
      ++hits[best_k];
    }
  }
  const long needed = std::max<long>(
      1, samples.rows() / (10 * static_cast<long>(centers.size())));
  ModeCoverage out;
  for (long h : hits)
    if (h >= needed) ++out.modes_hit;
  out.high_quality_fraction =
      samples.rows() == 0 ? 0.0
                          : static_cast<double>(high_quality) /
                                static_cast<double>(samples.rows());
  return out;
}

}  // namespace coevgan::scoring
