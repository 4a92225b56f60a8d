#ifndef COEVGAN_MIXTURE_HPP
#define COEVGAN_MIXTURE_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "coevgan/nn.hpp"
#include "coevgan/rng.hpp"
#include "coevgan/scoring.hpp"

namespace coevgan::mixture {

// Probability vector over a neighborhood's generators; non-negative entries
// summing to 1 (within 1e-12 after normalization).
struct MixtureWeights {
  std::vector<double> weights;

  int size() const { return static_cast<int>(weights.size()); }
  void normalize();
  bool on_simplex(double tol = 1e-12) const;
};

MixtureWeights uniform_weights(int n);

struct EnsembleScore {
  double value = 0.0;  // Frechet distance against the reference, lower better
  int eval_sample_count = 0;
  std::uint64_t eval_seed = 0;
};

struct MixtureEAConfig {
  int generations = 5000;
  double mutation_scale = 0.01;
  int eval_sample_count = 1000;
};

// For each of n samples independently: pick generator i with probability w_i,
// draw z ~ N(0, I), emit G_i(z). A single-generator ensemble draws latents
// only, so it is bit-identical to sampling that generator directly.
Matrix sample_ensemble(std::span<const nn::ModelSnapshot> gens,
                       const MixtureWeights& w, int n, Rng& rng);

// Scores eval_sample_count ensemble samples against the reference set. The
// seed fixes both generator selection and latents, which makes repeated
// evaluation of the same weights exact and the ES elitism comparison meaningful.
EnsembleScore evaluate_mixture(std::span<const nn::ModelSnapshot> gens,
                               const MixtureWeights& w, const Matrix& reference,
                               const MixtureEAConfig& cfg, std::uint64_t eval_seed);

// w'_i = w_i + N(0, scale^2); negatives clamp to 0, then renormalize. If every
// entry clamps to zero the input is returned unchanged.
MixtureWeights mutate_weights(const MixtureWeights& w, double scale, Rng& rng);

struct EvolveOutcome {
  MixtureWeights weights;
  EnsembleScore score;
  EnsembleScore initial_score;  // the incumbent w0 under the same eval seed
};

// ES-(1+1): mutate, evaluate, replace on strict improvement. Evaluation seed
// is drawn once from rng, so the whole run is a pure function of its seed and
// score.value <= initial_score.value always holds. best_trajectory, when
// given, receives the incumbent score after every generation.
EvolveOutcome evolve_mixture(std::span<const nn::ModelSnapshot> gens,
                             const MixtureWeights& w0, const Matrix& reference,
                             const MixtureEAConfig& cfg, Rng& rng,
                             std::vector<double>* best_trajectory = nullptr);

struct CellEnsemble {
  grid::CellId cell;
  MixtureWeights weights;
  EnsembleScore score;
};

// Global minimum score; ties broken by row-major cell order.
const CellEnsemble& select_best_neighborhood(std::span<const CellEnsemble> cells);

}  // namespace coevgan::mixture

#endif  // COEVGAN_MIXTURE_HPP
