#include "ktm/mdn.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ktm/errors.hpp"
#include "ktm/rng.hpp"

namespace ktm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
    }
  }
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double top = logits.maxCoeff();
  Eigen::VectorXd out = (logits.array() - top).exp();
  return out / out.sum();
}

}  // namespace

void MdnConfig::validate() const {
  if (input_dim < 1) throw InvalidConfig("mdn: input_dim must be >= 1");
  if (hidden_dim < 1) throw InvalidConfig("mdn: hidden_dim must be >= 1");
  if (components < 1) throw InvalidConfig("mdn: components must be >= 1");
  if (output_dim < 1) throw InvalidConfig("mdn: output_dim must be >= 1");
  if (!(learning_rate >= 0.0)) throw InvalidConfig("mdn: learning_rate must be >= 0");
  if (batch_size < 1) throw InvalidConfig("mdn: batch_size must be >= 1");
  if (epochs < 1) throw InvalidConfig("mdn: epochs must be >= 1");
  if (!(sigma_floor > 0.0)) throw InvalidConfig("mdn: sigma_floor must be positive");
}

bool MdnParams::all_finite() const {
  return w_hidden.allFinite() && b_hidden.allFinite() && w_alpha.allFinite() &&
         b_alpha.allFinite() && w_mu.allFinite() && b_mu.allFinite() && w_sigma.allFinite() &&
         b_sigma.allFinite() && out_shift.allFinite() && out_scale.allFinite();
}

MdnParams MdnParams::initialize(const MdnConfig& config) {
  config.validate();
  Rng rng(config.seed);
  MdnParams p;
  const int rd = config.components * config.output_dim;
  p.w_hidden.resize(config.hidden_dim, config.input_dim);
  p.w_alpha.resize(config.components, config.hidden_dim);
  p.w_mu.resize(rd, config.hidden_dim);
  p.w_sigma.resize(rd, config.hidden_dim);
  fill_uniform(p.w_hidden, 1.0 / std::sqrt(static_cast<double>(config.input_dim)), rng);
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
  fill_uniform(p.w_alpha, head_bound, rng);
  fill_uniform(p.w_mu, head_bound, rng);
  fill_uniform(p.w_sigma, head_bound, rng);
  p.b_hidden = Eigen::VectorXd::Zero(config.hidden_dim);
  p.b_alpha = Eigen::VectorXd::Zero(config.components);
  p.b_mu = Eigen::VectorXd::Zero(rd);
  p.b_sigma = Eigen::VectorXd::Zero(rd);
  p.out_shift = Eigen::VectorXd::Zero(config.output_dim);
  p.out_scale = Eigen::VectorXd::Ones(config.output_dim);
  return p;
}

MixtureParams forward(const MdnParams& params, const ProjectionFeatures& features,
                      double sigma_floor) {
  if (features.size() != params.input_dim()) {
    throw InvalidInput("mdn forward: feature length " + std::to_string(features.size()) +
                       " does not match input_dim " + std::to_string(params.input_dim()));
  }
  const int r = params.components();
  const int d = params.output_dim();

  const Eigen::VectorXd hidden =
      ((params.w_hidden * features + params.b_hidden).array().tanh()).matrix();

  MixtureParams mix;
  mix.alphas = softmax(params.w_alpha * hidden + params.b_alpha);

  const Eigen::VectorXd mu_flat = params.w_mu * hidden + params.b_mu;
  const Eigen::VectorXd sigma_logit = params.w_sigma * hidden + params.b_sigma;
  mix.means.resize(r, d);
  mix.sigmas.resize(r, d);
  for (int i = 0; i < r; ++i) {
    for (int m = 0; m < d; ++m) {
      const Eigen::Index flat = static_cast<Eigen::Index>(i) * d + m;
      mix.means(i, m) = params.out_shift[m] + params.out_scale[m] * mu_flat[flat];
      mix.sigmas(i, m) = std::max(params.out_scale[m] * std::exp(sigma_logit[flat]), sigma_floor);
    }
  }
  return mix;
}

double nll_loss(const MixtureParams& mixture, const Eigen::VectorXd& target_weights) {
  const Eigen::Index r = mixture.alphas.size();
  if (mixture.means.cols() != target_weights.size() || mixture.means.rows() != r ||
      mixture.sigmas.rows() != r || mixture.sigmas.cols() != target_weights.size()) {
    throw InvalidInput("nll_loss: mixture/target dimension mismatch");
  }
  if ((mixture.sigmas.array() <= 0.0).any()) {
    throw InvalidInput("nll_loss: standard deviations must be positive");
  }

  Eigen::VectorXd component_log(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    double log_density = 0.0;
    for (Eigen::Index m = 0; m < target_weights.size(); ++m) {
      const double sigma = mixture.sigmas(i, m);
      const double z = (target_weights[m] - mixture.means(i, m)) / sigma;
      log_density += -0.5 * kLog2Pi - std::log(sigma) - 0.5 * z * z;
    }
    component_log[i] = std::log(mixture.alphas[i]) + log_density;
  }
  const double top = component_log.maxCoeff();
  return -(top + std::log((component_log.array() - top).exp().sum()));
}

MdnGradient MdnGradient::zeros_like(const MdnParams& params) {
  MdnGradient g;
  g.w_hidden = Eigen::MatrixXd::Zero(params.w_hidden.rows(), params.w_hidden.cols());
  g.b_hidden = Eigen::VectorXd::Zero(params.b_hidden.size());
  g.w_alpha = Eigen::MatrixXd::Zero(params.w_alpha.rows(), params.w_alpha.cols());
  g.b_alpha = Eigen::VectorXd::Zero(params.b_alpha.size());
  g.w_mu = Eigen::MatrixXd::Zero(params.w_mu.rows(), params.w_mu.cols());
  g.b_mu = Eigen::VectorXd::Zero(params.b_mu.size());
  g.w_sigma = Eigen::MatrixXd::Zero(params.w_sigma.rows(), params.w_sigma.cols());
  g.b_sigma = Eigen::VectorXd::Zero(params.b_sigma.size());
  return g;
}

void MdnGradient::accumulate(const MdnGradient& other, double weight) {
  w_hidden += weight * other.w_hidden;
  b_hidden += weight * other.b_hidden;
  w_alpha += weight * other.w_alpha;
  b_alpha += weight * other.b_alpha;
  w_mu += weight * other.w_mu;
  b_mu += weight * other.b_mu;
  w_sigma += weight * other.w_sigma;
  b_sigma += weight * other.b_sigma;
}

MdnGradient loss_gradient(const MdnParams& params, const ProjectionFeatures& features,
                          const Eigen::VectorXd& target_weights, double sigma_floor,
                          double* loss_out) {
  if (features.size() != params.input_dim()) {
    throw InvalidInput("loss_gradient: feature length does not match input_dim");
  }
  if (target_weights.size() != params.output_dim()) {
    throw InvalidInput("loss_gradient: target length does not match output_dim");
  }
  const int r = params.components();
  const int d = params.output_dim();

  // Forward pass, keeping intermediates.
  const Eigen::VectorXd pre_hidden = params.w_hidden * features + params.b_hidden;
  const Eigen::VectorXd hidden = pre_hidden.array().tanh().matrix();
  const Eigen::VectorXd alpha = softmax(params.w_alpha * hidden + params.b_alpha);
  const Eigen::VectorXd mu_flat = params.w_mu * hidden + params.b_mu;
  const Eigen::VectorXd sigma_logit = params.w_sigma * hidden + params.b_sigma;

  Eigen::MatrixXd mu(r, d), sigma(r, d);
  Eigen::MatrixXd clamped(r, d);
  for (int i = 0; i < r; ++i) {
    for (int m = 0; m < d; ++m) {
      const Eigen::Index flat = static_cast<Eigen::Index>(i) * d + m;
      mu(i, m) = params.out_shift[m] + params.out_scale[m] * mu_flat[flat];
      const double raw = params.out_scale[m] * std::exp(sigma_logit[flat]);
      sigma(i, m) = std::max(raw, sigma_floor);
      clamped(i, m) = raw < sigma_floor ? 1.0 : 0.0;
    }
  }

  // Responsibilities gamma_i = softmax over joint log-densities.
  Eigen::VectorXd component_log(r);
  for (int i = 0; i < r; ++i) {
    double log_density = 0.0;
    for (int m = 0; m < d; ++m) {
      const double z = (target_weights[m] - mu(i, m)) / sigma(i, m);
      log_density += -0.5 * kLog2Pi - std::log(sigma(i, m)) - 0.5 * z * z;
    }
    component_log[i] = std::log(alpha[i]) + log_density;
  }
  const double top = component_log.maxCoeff();
  const double lse = top + std::log((component_log.array() - top).exp().sum());
  const Eigen::VectorXd gamma = (component_log.array() - lse).exp();
  if (loss_out != nullptr) *loss_out = -lse;

  // Output-layer deltas.
  const Eigen::VectorXd d_alpha_logit = alpha - gamma;
  Eigen::VectorXd d_mu_flat(static_cast<Eigen::Index>(r) * d);
  Eigen::VectorXd d_sigma_logit(static_cast<Eigen::Index>(r) * d);
  for (int i = 0; i < r; ++i) {
    for (int m = 0; m < d; ++m) {
      const Eigen::Index flat = static_cast<Eigen::Index>(i) * d + m;
      const double resid = target_weights[m] - mu(i, m);
      const double s2 = sigma(i, m) * sigma(i, m);
      d_mu_flat[flat] = -gamma[i] * (resid / s2) * params.out_scale[m];
      // d(sigma)/d(logit) = sigma when unclamped, 0 at the floor.
      d_sigma_logit[flat] =
          clamped(i, m) != 0.0 ? 0.0 : gamma[i] * (1.0 - (resid * resid) / s2);
    }
  }

  MdnGradient g;
  g.w_alpha = d_alpha_logit * hidden.transpose();
  g.b_alpha = d_alpha_logit;
  g.w_mu = d_mu_flat * hidden.transpose();
  g.b_mu = d_mu_flat;
  g.w_sigma = d_sigma_logit * hidden.transpose();
  g.b_sigma = d_sigma_logit;

  const Eigen::VectorXd d_hidden = params.w_alpha.transpose() * d_alpha_logit +
                                   params.w_mu.transpose() * d_mu_flat +
                                   params.w_sigma.transpose() * d_sigma_logit;
  const Eigen::VectorXd d_pre =
      (d_hidden.array() * (1.0 - hidden.array().square())).matrix();
  g.w_hidden = d_pre * features.transpose();
  g.b_hidden = d_pre;
  return g;
}

TrainResult train(const MdnConfig& config, const MdnDataset& dataset) {
  config.validate();
  if (dataset.size() == 0) throw InvalidInput("mdn train: dataset is empty");
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    if (dataset.features[n].size() != config.input_dim ||
        dataset.targets[n].size() != config.output_dim) {
      throw InvalidInput("mdn train: example " + std::to_string(n) +
                         " has inconsistent dimensions");
    }
  }

  MdnParams params = MdnParams::initialize(config);

  // Standardize the output space: per-dimension shift/scale from the
  // training targets (population std, floored to keep the scale positive).
  const auto n_examples = static_cast<double>(dataset.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(config.output_dim);
  for (const auto& t : dataset.targets) mean += t;
  mean /= n_examples;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(config.output_dim);
  for (const auto& t : dataset.targets) var += (t - mean).array().square().matrix();
  var /= n_examples;
  params.out_shift = mean;
  params.out_scale = var.array().sqrt().max(1e-6).matrix();

  Rng shuffle_rng(derive_seed(config.seed, 0x5d0));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.epoch_losses.reserve(config.epochs);
  // Per-example losses are re-summed in index order so the recorded epoch
  // loss does not depend on the shuffle.
  std::vector<double> example_loss(dataset.size(), 0.0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      MdnGradient batch = MdnGradient::zeros_like(params);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        double loss = 0.0;
        const MdnGradient g =
            loss_gradient(params, dataset.features[order[k]], dataset.targets[order[k]],
                          config.sigma_floor, &loss);
        batch.accumulate(g, 1.0);
        batch_loss += loss;
        example_loss[order[k]] = loss;
      }
      const double batch_n = static_cast<double>(stop - start);
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("mdn train: non-finite loss at epoch " + std::to_string(epoch + 1));
      }

      const double step = config.learning_rate / batch_n;
      params.w_hidden -= step * batch.w_hidden;
      params.b_hidden -= step * batch.b_hidden;
      params.w_alpha -= step * batch.w_alpha;
      params.b_alpha -= step * batch.b_alpha;
      params.w_mu -= step * batch.w_mu;
      params.b_mu -= step * batch.b_mu;
      params.w_sigma -= step * batch.w_sigma;
      params.b_sigma -= step * batch.b_sigma;
    }
    if (!params.all_finite()) {
      throw TrainingError("mdn train: non-finite parameters after epoch " +
                          std::to_string(epoch + 1));
    }
    double epoch_loss = 0.0;
    for (double loss : example_loss) epoch_loss += loss;
    result.epoch_losses.push_back(epoch_loss / n_examples);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace ktm
