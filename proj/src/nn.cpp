#include "coevgan/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "coevgan/errors.hpp"

namespace coevgan::nn {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMutMap = Eigen::Map<Eigen::VectorXd>;

void apply_activation(Matrix& z, Activation a) {
  switch (a) {
    case Activation::Tanh:
      z = z.array().tanh();
      break;
    case Activation::Sigmoid:
      z = (1.0 + (-z.array()).exp()).inverse();
      break;
    case Activation::Identity:
      break;
  }
}

// derivative w.r.t. pre-activation, expressed through the activation value
Matrix activation_deriv(const Matrix& act, Activation a) {
  switch (a) {
    case Activation::Tanh:
      return 1.0 - act.array().square();
    case Activation::Sigmoid:
      return act.array() * (1.0 - act.array());
    case Activation::Identity:
      return Matrix::Ones(act.rows(), act.cols());
  }
  return Matrix();
}

// acts[0] is the input, acts[l+1] the post-activation output of layer l.
struct Trace {
  std::vector<Matrix> acts;
};

Trace forward_trace(const ModelParams& model, const Matrix& input) {
  model.validate();
  if (input.cols() != model.input_width())
    throw ConfigError("forward: input width " + std::to_string(input.cols()) +
                      " does not match first layer input size " +
                      std::to_string(model.input_width()));
  Trace tr;
  tr.acts.reserve(model.layers.size() + 1);
  tr.acts.push_back(input);
  std::size_t off = 0;
  for (const LayerSpec& layer : model.layers) {
    RowMajorMap w(model.weights.data() + off, layer.input_size, layer.output_size);
    off += static_cast<std::size_t>(layer.input_size) * layer.output_size;
    VecMap b(model.weights.data() + off, layer.output_size);
    off += layer.output_size;
    Matrix z = tr.acts.back() * w;
    z.rowwise() += b.transpose();
    apply_activation(z, layer.activation);
    tr.acts.push_back(std::move(z));
  }
  return tr;
}

// Backpropagates d_out = dL/d(final activation). Accumulates parameter
// gradients into *grad when non-null; returns dL/d(input) when want_input.
Matrix backprop(const ModelParams& model, const Trace& tr, Matrix d_act,
                Gradient* grad, bool want_input) {
  if (grad) grad->values.assign(model.weights.size(), 0.0);
  std::size_t layer_end = model.weights.size();
  for (int l = static_cast<int>(model.layers.size()) - 1; l >= 0; --l) {
    const LayerSpec& layer = model.layers[l];
    const Matrix& act = tr.acts[l + 1];
    const Matrix& prev = tr.acts[l];
    Matrix d_z = d_act.cwiseProduct(activation_deriv(act, layer.activation));

    const std::size_t n_w = static_cast<std::size_t>(layer.input_size) * layer.output_size;
    const std::size_t layer_begin = layer_end - n_w - layer.output_size;
    if (grad) {
      RowMajorMutMap dw(grad->values.data() + layer_begin, layer.input_size,
                        layer.output_size);
      dw = prev.transpose() * d_z;
      VecMutMap db(grad->values.data() + layer_begin + n_w, layer.output_size);
      db = d_z.colwise().sum().transpose();
    }
    if (l > 0 || want_input) {
      RowMajorMap w(model.weights.data() + layer_begin, layer.input_size,
                    layer.output_size);
      d_act = d_z * w.transpose();
    }
    layer_end = layer_begin;
  }
  return d_act;
}

inline double clamp_prob(double p) {
  return p < kProbEps ? kProbEps : (p > 1.0 - kProbEps ? 1.0 - kProbEps : p);
}

inline bool in_prob_range(double p) { return p > kProbEps && p < 1.0 - kProbEps; }

void require_sigmoid_head(const ModelParams& d, const char* who) {
  if (d.layers.back().activation != Activation::Sigmoid)
    throw ConfigError(std::string(who) + ": discriminator must end in Sigmoid");
  if (d.output_width() != 1)
    throw ConfigError(std::string(who) + ": discriminator must emit one value");
}

}  // namespace

void ModelParams::validate() const {
  if (layers.empty()) throw ConfigError("model has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].input_size < 1 || layers[i].output_size < 1)
      throw ConfigError("layer sizes must be >= 1");
    if (i > 0 && layers[i].input_size != layers[i - 1].output_size)
      throw ConfigError("layer widths do not chain");
  }
  if (weights.size() != param_count(layers))
    throw ConfigError("weight vector length mismatch: have " +
                      std::to_string(weights.size()) + ", expected " +
                      std::to_string(param_count(layers)));
}

std::size_t param_count(const std::vector<LayerSpec>& layers) {
  std::size_t n = 0;
  for (const LayerSpec& l : layers)
    n += static_cast<std::size_t>(l.input_size) * l.output_size + l.output_size;
  return n;
}

ModelParams init_params(const std::vector<LayerSpec>& layers, Rng& rng) {
  ModelParams m;
  m.layers = layers;
  m.weights.reserve(param_count(layers));
  for (const LayerSpec& l : layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.input_size));
    const std::size_t n = static_cast<std::size_t>(l.input_size) * l.output_size + l.output_size;
    for (std::size_t i = 0; i < n; ++i)
      m.weights.push_back((2.0 * rng.uniform() - 1.0) * bound);
  }
  m.validate();
  return m;
}

std::vector<LayerSpec> mlp_layers(const std::vector<int>& widths,
                                  Activation hidden, Activation output) {
  if (widths.size() < 2) throw ConfigError("mlp needs at least two widths");
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    layers.push_back({widths[i], widths[i + 1], last ? output : hidden});
  }
  return layers;
}

Matrix forward(const ModelParams& model, const Matrix& input) {
  return forward_trace(model, input).acts.back();
}

double bce_discriminator_loss(const ModelParams& d, const Matrix& real_batch,
                              const Matrix& fake_batch) {
  require_sigmoid_head(d, "bce_discriminator_loss");
  if (real_batch.rows() == 0 || fake_batch.rows() == 0)
    throw ConfigError("bce_discriminator_loss: empty batch");
  const Matrix p_real = forward(d, real_batch);
  const Matrix p_fake = forward(d, fake_batch);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p_real.rows(); ++i)
    loss -= std::log(clamp_prob(p_real(i, 0))) / static_cast<double>(p_real.rows());
  for (Eigen::Index i = 0; i < p_fake.rows(); ++i)
    loss -= std::log(1.0 - clamp_prob(p_fake(i, 0))) / static_cast<double>(p_fake.rows());
  return loss;
}

double bce_generator_loss(const ModelParams& g, const ModelParams& d,
                          const Matrix& latent_batch) {
  require_sigmoid_head(d, "bce_generator_loss");
  if (g.output_width() != d.input_width())
    throw ConfigError("bce_generator_loss: generator output width != discriminator input width");
  if (latent_batch.rows() == 0) throw ConfigError("bce_generator_loss: empty batch");
  const Matrix p = forward(d, forward(g, latent_batch));
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    loss += std::log(1.0 - clamp_prob(p(i, 0)));
  return 0.5 * loss / static_cast<double>(p.rows());
}

Gradient discriminator_grad(const ModelParams& d, const Matrix& real_batch,
                            const Matrix& fake_batch) {
  require_sigmoid_head(d, "discriminator_grad");
  Gradient grad;
  grad.values.assign(d.weights.size(), 0.0);

  // real term: -mean log D(x)
  {
    Trace tr = forward_trace(d, real_batch);
    const Matrix& p = tr.acts.back();
    Matrix d_act(p.rows(), 1);
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      d_act(i, 0) = in_prob_range(p(i, 0))
                        ? -1.0 / (static_cast<double>(p.rows()) * p(i, 0))
                        : 0.0;
    Gradient part;
    backprop(d, tr, std::move(d_act), &part, false);
    for (std::size_t k = 0; k < grad.values.size(); ++k) grad.values[k] += part.values[k];
  }
  // fake term: -mean log(1 - D(x))
  {
    Trace tr = forward_trace(d, fake_batch);
    const Matrix& p = tr.acts.back();
    Matrix d_act(p.rows(), 1);
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      d_act(i, 0) = in_prob_range(p(i, 0))
                        ? 1.0 / (static_cast<double>(p.rows()) * (1.0 - p(i, 0)))
                        : 0.0;
    Gradient part;
    backprop(d, tr, std::move(d_act), &part, false);
    for (std::size_t k = 0; k < grad.values.size(); ++k) grad.values[k] += part.values[k];
  }
  return grad;
}

Gradient generator_grad(const ModelParams& g, const ModelParams& d,
                        const Matrix& latent_batch) {
  require_sigmoid_head(d, "generator_grad");
  Trace g_tr = forward_trace(g, latent_batch);
  Trace d_tr = forward_trace(d, g_tr.acts.back());
  const Matrix& p = d_tr.acts.back();
  Matrix d_act(p.rows(), 1);
  const double n = static_cast<double>(p.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    d_act(i, 0) = in_prob_range(p(i, 0)) ? -0.5 / (n * (1.0 - p(i, 0))) : 0.0;

  // through the frozen discriminator down to its input, then through g
  Matrix d_fake = backprop(d, d_tr, std::move(d_act), nullptr, true);
  Gradient grad;
  backprop(g, g_tr, std::move(d_fake), &grad, false);
  return grad;
}

ModelParams sgd_step(const ModelParams& model, const Gradient& grad, double lr) {
  if (grad.values.size() != model.weights.size())
    throw ConfigError("sgd_step: gradient length mismatch");
  ModelParams out = model;
  for (std::size_t i = 0; i < out.weights.size(); ++i) {
    out.weights[i] -= lr * grad.values[i];
    if (!std::isfinite(out.weights[i]))
      throw TrainingError("sgd_step produced non-finite parameter");
  }
  return out;
}

ModelParams adam_step(const ModelParams& model, const Gradient& grad, double lr,
                      AdamState& state) {
  if (grad.values.size() != model.weights.size())
    throw ConfigError("adam_step: gradient length mismatch");
  if (state.m.empty()) {
    state.m.assign(model.weights.size(), 0.0);
    state.v.assign(model.weights.size(), 0.0);
    state.t = 0;
  }
  if (state.m.size() != model.weights.size())
    throw ConfigError("adam_step: state length mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));
  ModelParams out = model;
  for (std::size_t i = 0; i < out.weights.size(); ++i) {
    const double g = grad.values[i];
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * g;
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    out.weights[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
    if (!std::isfinite(out.weights[i]))
      throw TrainingError("adam_step produced non-finite parameter");
  }
  return out;
}

}  // namespace coevgan::nn
