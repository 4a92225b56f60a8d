// Test-only oracles, coded independently of the library implementation paths
// they check: scalar straight-line network math, central finite differences,
// a long-double cyclic Jacobi eigensolver, and pair-counting rank statistics.
#ifndef COEVGAN_TESTS_ORACLES_HPP
#define COEVGAN_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "coevgan/nn.hpp"

namespace oracles {

inline double clamp01(double p) {
  const double eps = 1e-7;
  return std::min(std::max(p, eps), 1.0 - eps);
}

// scalar re-implementation of the MLP forward pass (no Eigen)
inline std::vector<double> forward_one(const coevgan::nn::ModelParams& m,
                                       std::vector<double> x) {
  std::size_t off = 0;
  for (const auto& layer : m.layers) {
    std::vector<double> z(static_cast<std::size_t>(layer.output_size), 0.0);
    for (int o = 0; o < layer.output_size; ++o)
      for (int i = 0; i < layer.input_size; ++i)
        z[static_cast<std::size_t>(o)] +=
            x[static_cast<std::size_t>(i)] *
            m.weights[off + static_cast<std::size_t>(i) * layer.output_size + o];
    off += static_cast<std::size_t>(layer.input_size) * layer.output_size;
    for (int o = 0; o < layer.output_size; ++o)
      z[static_cast<std::size_t>(o)] += m.weights[off + static_cast<std::size_t>(o)];
    off += static_cast<std::size_t>(layer.output_size);
    for (double& v : z) {
      switch (layer.activation) {
        case coevgan::nn::Activation::Tanh: v = std::tanh(v); break;
        case coevgan::nn::Activation::Sigmoid: v = 1.0 / (1.0 + std::exp(-v)); break;
        case coevgan::nn::Activation::Identity: break;
      }
    }
    x = std::move(z);
  }
  return x;
}

inline std::vector<double> row_of(const coevgan::Matrix& m, Eigen::Index r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

inline double disc_loss(const coevgan::nn::ModelParams& d, const coevgan::Matrix& real,
                        const coevgan::Matrix& fake) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < real.rows(); ++i)
    loss -= std::log(clamp01(forward_one(d, row_of(real, i))[0])) /
            static_cast<double>(real.rows());
  for (Eigen::Index i = 0; i < fake.rows(); ++i)
    loss -= std::log(1.0 - clamp01(forward_one(d, row_of(fake, i))[0])) /
            static_cast<double>(fake.rows());
  return loss;
}

inline double gen_loss(const coevgan::nn::ModelParams& g, const coevgan::nn::ModelParams& d,
                       const coevgan::Matrix& latent) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < latent.rows(); ++i)
    loss += std::log(1.0 - clamp01(forward_one(d, forward_one(g, row_of(latent, i)))[0]));
  return 0.5 * loss / static_cast<double>(latent.rows());
}

// central finite difference of an arbitrary scalar function of the weights
template <typename Loss>
std::vector<double> fd_gradient(coevgan::nn::ModelParams m, Loss&& loss, double h = 1e-5) {
  std::vector<double> grad(m.weights.size());
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    const double keep = m.weights[k];
    m.weights[k] = keep + h;
    const double up = loss(m);
    m.weights[k] = keep - h;
    const double down = loss(m);
    m.weights[k] = keep;
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

// cyclic Jacobi eigensolver for small symmetric matrices, long double
struct JacobiResult {
  std::vector<long double> eigenvalues;           // unsorted
  std::vector<std::vector<long double>> vectors;  // column k belongs to eigenvalue k
};

inline JacobiResult jacobi_eigen(std::vector<std::vector<long double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<long double>> v(n, std::vector<long double>(n, 0.0L));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0L;

  for (int sweep = 0; sweep < 200; ++sweep) {
    long double off = 0.0L;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-36L) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-40L) continue;
        const long double theta = (a[q][q] - a[p][p]) / (2.0L * a[p][q]);
        const long double t = (theta >= 0 ? 1.0L : -1.0L) /
                              (std::abs(theta) + std::sqrt(theta * theta + 1.0L));
        const long double c = 1.0L / std::sqrt(t * t + 1.0L);
        const long double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const long double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const long double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const long double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  JacobiResult r;
  r.eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.eigenvalues[i] = a[i][i];
  r.vectors = std::move(v);
  return r;
}

inline std::vector<std::vector<long double>> to_ld(const Eigen::MatrixXd& m) {
  std::vector<std::vector<long double>> out(
      static_cast<std::size_t>(m.rows()),
      std::vector<long double>(static_cast<std::size_t>(m.cols()), 0.0L));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

inline std::vector<std::vector<long double>> matmul(
    const std::vector<std::vector<long double>>& a,
    const std::vector<std::vector<long double>>& b) {
  const std::size_t n = a.size(), m = b[0].size(), k = b.size();
  std::vector<std::vector<long double>> c(n, std::vector<long double>(m, 0.0L));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
  return c;
}

// Frechet distance between Gaussian summaries via the Jacobi route
inline double frechet(const Eigen::VectorXd& mean_a, const Eigen::MatrixXd& cov_a,
                      const Eigen::VectorXd& mean_b, const Eigen::MatrixXd& cov_b) {
  const std::size_t n = static_cast<std::size_t>(cov_a.rows());
  const auto a = to_ld(cov_a);
  const auto b = to_ld(cov_b);

  JacobiResult ea = jacobi_eigen(a);
  std::vector<std::vector<long double>> sqrt_a(n, std::vector<long double>(n, 0.0L));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        const long double lam = std::max<long double>(ea.eigenvalues[k], 0.0L);
        sqrt_a[i][j] += ea.vectors[i][k] * std::sqrt(lam) * ea.vectors[j][k];
      }

  const auto inner = matmul(matmul(sqrt_a, b), sqrt_a);
  JacobiResult em = jacobi_eigen(inner);
  long double sqrt_trace = 0.0L;
  for (std::size_t k = 0; k < n; ++k)
    sqrt_trace += std::sqrt(std::max<long double>(em.eigenvalues[k], 0.0L));

  long double mean_term = 0.0L;
  for (Eigen::Index i = 0; i < mean_a.size(); ++i) {
    const long double d = mean_a(i) - mean_b(i);
    mean_term += d * d;
  }
  long double trace = 0.0L;
  for (std::size_t i = 0; i < n; ++i) trace += a[i][i] + b[i][i];
  return static_cast<double>(mean_term + trace - 2.0L * sqrt_trace);
}

// exact two-sided rank test by full enumeration, U from pair counts
struct WilcoxonEnum {
  double u = 0.0;
  double p = 1.0;
};

inline double pair_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) {
      if (x > y) u += 1.0;
      else if (x == y) u += 0.5;
    }
  return u;
}

inline WilcoxonEnum wilcoxon_enumerate(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  WilcoxonEnum out;
  out.u = pair_u(a, b);
  std::vector<double> pool = a;
  pool.insert(pool.end(), b.begin(), b.end());
  const int n = static_cast<int>(pool.size());
  const int n1 = static_cast<int>(a.size());
  const double mu = static_cast<double>(n1) * (n - n1) / 2.0;
  const double observed = std::abs(out.u - mu);

  std::vector<int> mask(static_cast<std::size_t>(n), 0);
  std::fill(mask.begin(), mask.begin() + n1, 1);
  std::sort(mask.begin(), mask.end());  // start from lexicographically smallest
  long total = 0, extreme = 0;
  do {
    std::vector<double> aa, bb;
    for (int i = 0; i < n; ++i)
      (mask[static_cast<std::size_t>(i)] ? aa : bb).push_back(pool[static_cast<std::size_t>(i)]);
    const double u = pair_u(aa, bb);
    ++total;
    if (std::abs(u - mu) >= observed - 1e-12) ++extreme;
  } while (std::next_permutation(mask.begin(), mask.end()));
  out.p = static_cast<double>(extreme) / static_cast<double>(total);
  return out;
}

}  // namespace oracles

#endif  // COEVGAN_TESTS_ORACLES_HPP
