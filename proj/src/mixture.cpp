#include "coevgan/mixture.hpp"

#include <cmath>
#include <numeric>

#include "coevgan/errors.hpp"

namespace coevgan::mixture {

void MixtureWeights::normalize() {
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w))
      throw ConfigError("mixture weights must be finite and non-negative");
    sum += w;
  }
  if (sum <= 0.0) throw ConfigError("mixture weights sum to zero");
  for (double& w : weights) w /= sum;
}

bool MixtureWeights::on_simplex(double tol) const {
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) return false;
    sum += w;
  }
  return std::abs(sum - 1.0) <= tol;
}

MixtureWeights uniform_weights(int n) {
  if (n < 1) throw ConfigError("uniform_weights: need at least one generator");
  MixtureWeights w;
  w.weights.assign(static_cast<std::size_t>(n), 1.0 / n);
  return w;
}

Matrix sample_ensemble(std::span<const nn::ModelSnapshot> gens,
                       const MixtureWeights& w, int n, Rng& rng) {
  if (gens.empty() || static_cast<int>(gens.size()) != w.size())
    throw ConfigError("sample_ensemble: generators and weights disagree");
  if (n < 1) throw ConfigError("sample_ensemble: need n >= 1");
  const int latent_dim = gens[0].params.input_width();
  const int out_dim = gens[0].params.output_width();
  for (const auto& g : gens)
    if (g.params.input_width() != latent_dim || g.params.output_width() != out_dim)
      throw ConfigError("sample_ensemble: generators have mismatched shapes");

  std::vector<double> cumulative(w.weights.size());
  std::partial_sum(w.weights.begin(), w.weights.end(), cumulative.begin());

  Matrix out(n, out_dim);
  Matrix z(1, latent_dim);
  for (int i = 0; i < n; ++i) {
    std::size_t pick = 0;
    if (gens.size() > 1) {
      const double u = rng.uniform() * cumulative.back();
      while (pick + 1 < cumulative.size() && u >= cumulative[pick]) ++pick;
    }
    for (int j = 0; j < latent_dim; ++j) z(0, j) = rng.normal();
    out.row(i) = nn::forward(gens[pick].params, z).row(0);
  }
  return out;
}

EnsembleScore evaluate_mixture(std::span<const nn::ModelSnapshot> gens,
                               const MixtureWeights& w, const Matrix& reference,
                               const MixtureEAConfig& cfg, std::uint64_t eval_seed) {
  if (reference.rows() < 2) throw ConfigError("evaluate_mixture: empty reference");
  if (cfg.eval_sample_count < static_cast<int>(reference.cols()) + 1)
    throw ConfigError("evaluate_mixture: eval_sample_count below dimension+1");
  Rng rng(eval_seed);
  const Matrix samples = sample_ensemble(gens, w, cfg.eval_sample_count, rng);
  const scoring::FrechetScore fs = scoring::frechet(reference, samples);
  return {fs.value, cfg.eval_sample_count, eval_seed};
}

MixtureWeights mutate_weights(const MixtureWeights& w, double scale, Rng& rng) {
  MixtureWeights out = w;
  double sum = 0.0;
  for (double& v : out.weights) {
    v += rng.normal() * scale;
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  if (sum <= 0.0) return w;
  for (double& v : out.weights) v /= sum;
  return out;
}

EvolveOutcome evolve_mixture(std::span<const nn::ModelSnapshot> gens,
                             const MixtureWeights& w0, const Matrix& reference,
                             const MixtureEAConfig& cfg, Rng& rng,
                             std::vector<double>* best_trajectory) {
  if (static_cast<int>(gens.size()) != w0.size())
    throw ConfigError("evolve_mixture: weight vector length mismatch");
  const std::uint64_t eval_seed = rng.next_u64();

  EvolveOutcome out;
  out.weights = w0;
  out.weights.normalize();
  out.initial_score = evaluate_mixture(gens, out.weights, reference, cfg, eval_seed);
  out.score = out.initial_score;
  // a one-generator ensemble renormalizes every mutant back to [1]; nothing
  // can beat the incumbent under the fixed eval seed
  if (gens.size() == 1) return out;
  for (int gen = 0; gen < cfg.generations; ++gen) {
    const MixtureWeights candidate = mutate_weights(out.weights, cfg.mutation_scale, rng);
    const EnsembleScore score =
        evaluate_mixture(gens, candidate, reference, cfg, eval_seed);
    if (score.value < out.score.value) {
      out.weights = candidate;
      out.score = score;
    }
    if (best_trajectory) best_trajectory->push_back(out.score.value);
  }
  return out;
}

const CellEnsemble& select_best_neighborhood(std::span<const CellEnsemble> cells) {
  if (cells.empty()) throw ConfigError("select_best_neighborhood: no cells");
  const CellEnsemble* best = &cells[0];
  for (const CellEnsemble& c : cells) {
    if (c.score.value < best->score.value ||
        (c.score.value == best->score.value && c.cell < best->cell))
      best = &c;
  }
  return *best;
}

}  // namespace coevgan::mixture
