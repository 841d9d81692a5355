#include "ktm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ktm/errors.hpp"
#include "ktm/rng.hpp"

namespace ktm {

void KtmModel::audit() const {
  if (representatives.size() == 0) {
    throw InvalidInput("model audit: representative set is empty");
  }
  if (representatives.source_indices.size() != representatives.trajectories.size()) {
    throw InvalidInput("model audit: representative bookkeeping is inconsistent");
  }
  std::vector<std::size_t> sources = representatives.source_indices;
  std::sort(sources.begin(), sources.end());
  if (std::adjacent_find(sources.begin(), sources.end()) != sources.end()) {
    throw InvalidInput("model audit: duplicate representative source indices");
  }
  for (std::size_t j = 0; j < representatives.size(); ++j) {
    representatives.trajectories[j].validate("representative " + std::to_string(j));
  }
  basis.validate();
  if (!(ell_df > 0.0)) throw InvalidInput("model audit: ell_df must be positive");
  if (mdn_config.input_dim != static_cast<int>(representatives.size())) {
    throw InvalidInput("model audit: MDN input_dim " + std::to_string(mdn_config.input_dim) +
                       " != representative count " + std::to_string(representatives.size()));
  }
  if (mdn_config.output_dim != 2 * static_cast<int>(basis.size())) {
    throw InvalidInput("model audit: MDN output_dim " + std::to_string(mdn_config.output_dim) +
                       " != 2 * M_t = " + std::to_string(2 * basis.size()));
  }
  if (params.input_dim() != mdn_config.input_dim ||
      params.hidden_dim() != mdn_config.hidden_dim ||
      params.components() != mdn_config.components ||
      params.output_dim() != mdn_config.output_dim) {
    throw InvalidInput("model audit: parameter shapes disagree with the MDN config");
  }
  if (!params.all_finite()) {
    throw InvalidInput("model audit: non-finite parameter values");
  }
  if (!(params.out_scale.array() > 0.0).all()) {
    throw InvalidInput("model audit: output scale must be strictly positive");
  }
}

KtmTrainOutput train_ktm(const std::vector<TrainingPair>& pairs, const KtmTrainConfig& config,
                         const std::optional<RepresentativeSet>& preselected) {
  if (pairs.size() < 2) {
    throw InvalidInput("train_ktm: need at least 2 training pairs");
  }
  std::vector<DiscreteTrajectory> observed;
  observed.reserve(pairs.size());
  std::size_t max_target_len = 0;
  for (std::size_t n = 0; n < pairs.size(); ++n) {
    pairs[n].observed.validate("pair " + std::to_string(n) + " observed");
    pairs[n].target.validate("pair " + std::to_string(n) + " target");
    observed.push_back(pairs[n].observed);
    max_target_len = std::max(max_target_len, pairs[n].target.size());
  }

  KtmModel model;
  model.ell_df = config.ell_df;
  model.representatives = preselected.has_value()
                              ? *preselected
                              : select_representatives(observed, config.representative_step);
  if (model.representatives.size() == 0) {
    throw InvalidInput("train_ktm: representative set is empty");
  }

  model.basis = make_time_basis(static_cast<double>(max_target_len), config.basis_spacing,
                                config.ell_t, config.lambda1, config.lambda2);

  const Eigen::MatrixXd features = gram_matrix(observed, model.representatives, config.ell_df);

  // Weight targets: each target trajectory re-anchored to its observation
  // endpoint, time offsets 1..L, x-weights stacked over y-weights.
  MdnDataset dataset;
  dataset.features.reserve(pairs.size());
  dataset.targets.reserve(pairs.size());
  const auto m_t = model.basis.size();
  for (std::size_t n = 0; n < pairs.size(); ++n) {
    const Point anchor = pairs[n].observed.back();
    DiscreteTrajectory relative;
    relative.points.reserve(pairs[n].target.size());
    std::vector<double> times;
    times.reserve(pairs[n].target.size());
    for (std::size_t k = 0; k < pairs[n].target.size(); ++k) {
      relative.points.push_back(
          Point{pairs[n].target[k].x - anchor.x, pairs[n].target[k].y - anchor.y});
      times.push_back(static_cast<double>(k + 1));
    }
    const ContinuousTrajectory fitted = fit_weights(relative, times, model.basis);
    Eigen::VectorXd target(2 * m_t);
    target.head(m_t) = fitted.weights_x;
    target.tail(m_t) = fitted.weights_y;
    dataset.features.push_back(features.row(static_cast<Eigen::Index>(n)).transpose());
    dataset.targets.push_back(std::move(target));
  }

  model.mdn_config = config.mdn;
  model.mdn_config.input_dim = static_cast<int>(model.representatives.size());
  model.mdn_config.output_dim = static_cast<int>(2 * m_t);
  model.mdn_config.seed = derive_seed(config.seed, 1);

  TrainResult trained = train(model.mdn_config, dataset);
  model.params = std::move(trained.params);
  model.audit();
  return KtmTrainOutput{std::move(model), std::move(trained.epoch_losses)};
}

MixtureParams predict_mixture(const KtmModel& model, const DiscreteTrajectory& query) {
  query.validate("query");
  const ProjectionFeatures features =
      projection_features(query, model.representatives, model.ell_df);
  if (features.size() != model.mdn_config.input_dim) {
    throw InvalidInput("predict_mixture: query features have length " +
                       std::to_string(features.size()) + " but the model expects " +
                       std::to_string(model.mdn_config.input_dim));
  }
  return forward(model.params, features, model.mdn_config.sigma_floor);
}

std::vector<TrajectorySample> sample_trajectories(const KtmModel& model,
                                                  const DiscreteTrajectory& query,
                                                  std::size_t count, std::uint64_t seed) {
  if (count < 1) throw InvalidInput("sample_trajectories: count must be >= 1");
  const MixtureParams mixture = predict_mixture(model, query);
  const Point origin = query.back();
  const auto m_t = model.basis.size();

  Rng rng(seed);
  std::vector<TrajectorySample> samples;
  samples.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    // Inverse CDF over alpha with a single uniform.
    const double u = rng.uniform();
    int component = static_cast<int>(mixture.alphas.size()) - 1;
    double cumulative = 0.0;
    for (Eigen::Index i = 0; i < mixture.alphas.size(); ++i) {
      cumulative += mixture.alphas[i];
      if (u <= cumulative) {
        component = static_cast<int>(i);
        break;
      }
    }
    TrajectorySample sample;
    sample.component = component;
    sample.origin = origin;
    sample.continuous.basis = model.basis;
    sample.continuous.weights_x.resize(m_t);
    sample.continuous.weights_y.resize(m_t);
    for (Eigen::Index m = 0; m < 2 * m_t; ++m) {
      const double w =
          mixture.means(component, m) + mixture.sigmas(component, m) * rng.normal();
      if (m < m_t) {
        sample.continuous.weights_x[m] = w;
      } else {
        sample.continuous.weights_y[m - m_t] = w;
      }
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

ContinuousTrajectory ktm_weighted_mean(const KtmModel& model, const DiscreteTrajectory& query) {
  const MixtureParams mixture = predict_mixture(model, query);
  const Eigen::VectorXd combined = mixture.means.transpose() * mixture.alphas;
  const auto m_t = model.basis.size();
  ContinuousTrajectory traj;
  traj.basis = model.basis;
  traj.weights_x = combined.head(m_t);
  traj.weights_y = combined.tail(m_t);
  return traj;
}

ClosestComponent ktm_closest_component(const KtmModel& model, const DiscreteTrajectory& query,
                                       const DiscreteTrajectory& ground_truth,
                                       const std::vector<double>& times,
                                       ClosenessMetric metric) {
  ground_truth.validate("ground truth");
  const MixtureParams mixture = predict_mixture(model, query);
  const Point origin = query.back();
  const auto m_t = model.basis.size();

  ClosestComponent best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < mixture.alphas.size(); ++i) {
    ContinuousTrajectory mean;
    mean.basis = model.basis;
    mean.weights_x = mixture.means.row(i).head(m_t).transpose();
    mean.weights_y = mixture.means.row(i).tail(m_t).transpose();
    const DiscreteTrajectory realised = discretise(mean, times, origin);
    const double distance = metric == ClosenessMetric::kFrechet
                                ? discrete_frechet(realised, ground_truth)
                                : point_distance(realised.back(), ground_truth.back());
    if (distance < best_distance) {
      best_distance = distance;
      best.trajectory = std::move(mean);
      best.component = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace ktm
