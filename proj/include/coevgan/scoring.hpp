#ifndef COEVGAN_SCORING_HPP
#define COEVGAN_SCORING_HPP

#include "coevgan/dataset.hpp"
#include "coevgan/nn.hpp"

namespace coevgan::scoring {

struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // symmetric, unbiased (n-1 divisor)
};

struct FrechetScore {
  double value = 0.0;
  int n_real = 0;
  int n_fake = 0;
};

// Sample mean and unbiased covariance, symmetrized as (C + C^T)/2. n >= 2.
GaussianSummary summarize(const Matrix& samples);

// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^(1/2)), with the trace term
// computed from the eigenvalues of sqrt(Sa) Sb sqrt(Sa). Exact for Gaussian
// summaries; computed on raw sample coordinates, no feature network.
FrechetScore frechet_distance(const GaussianSummary& a, const GaussianSummary& b);

// Convenience: summarize both sample sets and score them.
FrechetScore frechet(const Matrix& real, const Matrix& fake);

struct ModeCoverage {
  int modes_hit = 0;
  double high_quality_fraction = 0.0;
};

// A sample is high quality if within threshold * mode_std of its nearest mode
// center; a mode counts as hit once it holds >= max(1, n/(10 modes)) of them.
ModeCoverage mode_coverage(const Matrix& samples, const data::TargetSpec& target,
                           double threshold);

}  // namespace coevgan::scoring

#endif  // COEVGAN_SCORING_HPP
