#ifndef COEVGAN_NN_HPP
#define COEVGAN_NN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "coevgan/grid.hpp"
#include "coevgan/rng.hpp"

namespace coevgan {

// Rows are samples, columns are features.
using Matrix = Eigen::MatrixXd;

namespace nn {

enum class Activation { Tanh, Sigmoid, Identity };

struct LayerSpec {
  int input_size = 0;
  int output_size = 0;
  Activation activation = Activation::Identity;
};

// Flat parameter vector: per layer, row-major (input_size x output_size)
// weight matrix followed by the bias vector.
struct ModelParams {
  std::vector<LayerSpec> layers;
  std::vector<double> weights;

  int input_width() const { return layers.front().input_size; }
  int output_width() const { return layers.back().output_size; }
  void validate() const;
};

std::size_t param_count(const std::vector<LayerSpec>& layers);

// All parameters of a layer drawn uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
ModelParams init_params(const std::vector<LayerSpec>& layers, Rng& rng);

// Convenience builder: widths.front() inputs, widths.back() outputs, `hidden`
// activation inside and `output` activation on the last layer.
std::vector<LayerSpec> mlp_layers(const std::vector<int>& widths,
                                  Activation hidden, Activation output);

enum class Role { Generator, Discriminator };

// Immutable parameter set plus its learning rate; the unit of inter-cell
// communication. version increases each time the owning cell republishes.
struct ModelSnapshot {
  ModelParams params;
  Role role = Role::Generator;
  double learning_rate = 0.0;
  grid::CellId origin;
  std::uint64_t version = 0;
};

struct Gradient {
  std::vector<double> values;
};

// Probabilities are clamped into [kProbEps, 1 - kProbEps] before any log.
inline constexpr double kProbEps = 1e-7;

Matrix forward(const ModelParams& model, const Matrix& input);

// Two-term BCE of the discriminator, negated to a loss to minimize:
//   L_D = -( mean log D(x_real) + mean log(1 - D(x_fake)) )
double bce_discriminator_loss(const ModelParams& d, const Matrix& real_batch,
                              const Matrix& fake_batch);

// Generator-side term, kept with its 1/2 factor:
//   L_G = 1/2 * mean log(1 - D(G(z)))
double bce_generator_loss(const ModelParams& g, const ModelParams& d,
                          const Matrix& latent_batch);

// Gradients of the losses above w.r.t. the model's own parameters; the
// adversary is frozen.
Gradient discriminator_grad(const ModelParams& d, const Matrix& real_batch,
                            const Matrix& fake_batch);
Gradient generator_grad(const ModelParams& g, const ModelParams& d,
                        const Matrix& latent_batch);

// weights - lr * grad, exactly.
ModelParams sgd_step(const ModelParams& model, const Gradient& grad, double lr);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

ModelParams adam_step(const ModelParams& model, const Gradient& grad, double lr,
                      AdamState& state);

}  // namespace nn
}  // namespace coevgan

#endif  // COEVGAN_NN_HPP
