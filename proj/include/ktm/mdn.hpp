#ifndef KTM_MDN_HPP
#define KTM_MDN_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ktm/kernels.hpp"

namespace ktm {

/// Hyperparameters of the single-hidden-layer mixture density network.
struct MdnConfig {
  int input_dim = 0;       // M_xi, set when the representative set is known
  int hidden_dim = 64;
  int components = 4;      // R
  int output_dim = 0;      // 2 * M_t, set when the time basis is known
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 80;
  double sigma_floor = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Network parameters. The output heads are expressed in per-dimension
/// standardized target coordinates: out_shift/out_scale are fixed constants
/// (identity by default, set from the training targets by train()) that map
/// head outputs back to weight space. Means stay affine in the hidden
/// activations and standard deviations stay exponential in the sigma logits
/// up to the positive per-dimension constant.
struct MdnParams {
  Eigen::MatrixXd w_hidden;  // hidden_dim x input_dim
  Eigen::VectorXd b_hidden;  // hidden_dim
  Eigen::MatrixXd w_alpha;   // R x hidden_dim
  Eigen::VectorXd b_alpha;   // R
  Eigen::MatrixXd w_mu;      // (R * output_dim) x hidden_dim, component-major
  Eigen::VectorXd b_mu;      // R * output_dim
  Eigen::MatrixXd w_sigma;   // (R * output_dim) x hidden_dim
  Eigen::VectorXd b_sigma;   // R * output_dim
  Eigen::VectorXd out_shift;  // output_dim
  Eigen::VectorXd out_scale;  // output_dim, strictly positive

  int input_dim() const { return static_cast<int>(w_hidden.cols()); }
  int hidden_dim() const { return static_cast<int>(w_hidden.rows()); }
  int components() const { return static_cast<int>(w_alpha.rows()); }
  int output_dim() const { return static_cast<int>(out_shift.size()); }

  bool all_finite() const;

  /// Zero biases, identity output standardization, weights uniform in
  /// +-1/sqrt(fan_in) drawn from the seeded stream in declaration order
  /// (w_hidden, w_alpha, w_mu, w_sigma; row-major within each matrix).
  static MdnParams initialize(const MdnConfig& config);
};

/// One diagonal-Gaussian mixture over the 2*M_t weight dimensions.
struct MixtureParams {
  Eigen::VectorXd alphas;  // R, on the simplex
  Eigen::MatrixXd means;   // R x output_dim
  Eigen::MatrixXd sigmas;  // R x output_dim, >= sigma_floor
};

MixtureParams forward(const MdnParams& params, const ProjectionFeatures& features,
                      double sigma_floor = 1e-6);

/// Negative log-likelihood of one target under the mixture, log-sum-exp
/// stabilised.
double nll_loss(const MixtureParams& mixture, const Eigen::VectorXd& target_weights);

/// Analytic gradient of nll_loss(forward(params, features), target) with
/// respect to every trained parameter (the standardization constants are
/// fixed). Same shapes as MdnParams.
struct MdnGradient {
  Eigen::MatrixXd w_hidden;
  Eigen::VectorXd b_hidden;
  Eigen::MatrixXd w_alpha;
  Eigen::VectorXd b_alpha;
  Eigen::MatrixXd w_mu;
  Eigen::VectorXd b_mu;
  Eigen::MatrixXd w_sigma;
  Eigen::VectorXd b_sigma;

  static MdnGradient zeros_like(const MdnParams& params);
  void accumulate(const MdnGradient& other, double weight);
};

MdnGradient loss_gradient(const MdnParams& params, const ProjectionFeatures& features,
                          const Eigen::VectorXd& target_weights, double sigma_floor = 1e-6,
                          double* loss_out = nullptr);

struct MdnDataset {
  std::vector<ProjectionFeatures> features;
  std::vector<Eigen::VectorXd> targets;

  std::size_t size() const { return features.size(); }
};

struct TrainResult {
  MdnParams params;
  std::vector<double> epoch_losses;  // mean per-example loss, one per epoch
};

/// Mini-batch SGD. The seed controls initialization and the per-epoch
/// shuffles; reruns with the same config and data are bitwise identical.
/// Throws TrainingError naming the epoch if the loss goes non-finite.
TrainResult train(const MdnConfig& config, const MdnDataset& dataset);

}  // namespace ktm

#endif  // KTM_MDN_HPP
