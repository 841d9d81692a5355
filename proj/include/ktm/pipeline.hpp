#ifndef KTM_PIPELINE_HPP
#define KTM_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "ktm/data.hpp"
#include "ktm/functional.hpp"
#include "ktm/kernels.hpp"
#include "ktm/mdn.hpp"
#include "ktm/trajectory.hpp"

namespace ktm {

/// Everything train_ktm needs besides the data. The MDN input/output
/// dimensions are derived from the representative set and time basis; the
/// master seed drives every stream (MDN initialization and shuffling).
struct KtmTrainConfig {
  double ell_df = 100.0;
  std::size_t representative_step = 2;
  double basis_spacing = 5.0;
  double ell_t = 10.0;
  double lambda1 = 1e-3;
  double lambda2 = 1e3;
  MdnConfig mdn;  // input_dim/output_dim/seed are filled in by train_ktm
  std::uint64_t seed = 0;
};

/// The serializable artifact: projection centers, the time basis, and the
/// trained mixture network with its configuration.
struct KtmModel {
  int format_version = 1;
  double ell_df = 100.0;
  RepresentativeSet representatives;
  TimeBasis basis;
  MdnConfig mdn_config;
  MdnParams params;

  /// Cross-checks every dimension; throws InvalidInput on any mismatch.
  void audit() const;
};

/// One realisation drawn from the predicted mixture: a continuous trajectory
/// in coordinates relative to `origin` (the query's last waypoint).
struct TrajectorySample {
  ContinuousTrajectory continuous;
  int component = 0;
  Point origin;
};

struct KtmTrainOutput {
  KtmModel model;
  std::vector<double> epoch_losses;
};

/// Trains a model end to end: select representatives from the observed
/// trajectories (or take `preselected`), project every observed trajectory,
/// fit weight targets for every target trajectory relative to its
/// observation endpoint, and fit the mixture network. Deterministic under
/// config.seed.
KtmTrainOutput train_ktm(const std::vector<TrainingPair>& pairs, const KtmTrainConfig& config,
                         const std::optional<RepresentativeSet>& preselected = std::nullopt);

/// Projection features of the query followed by the network forward pass.
MixtureParams predict_mixture(const KtmModel& model, const DiscreteTrajectory& query);

/// Draws `count` realisations. Per sample: one uniform picks the component
/// by inverse CDF over alpha, then one Gaussian per weight dimension in
/// order. Deterministic under the seed.
std::vector<TrajectorySample> sample_trajectories(const KtmModel& model,
                                                  const DiscreteTrajectory& query,
                                                  std::size_t count, std::uint64_t seed);

/// The mixture-coefficient-weighted combination of component means (valid
/// in weight space because evaluation is linear in the weights).
ContinuousTrajectory ktm_weighted_mean(const KtmModel& model, const DiscreteTrajectory& query);

/// How ktm_closest_component measures closeness to ground truth.
enum class ClosenessMetric { kFrechet, kEndpoint };

struct ClosestComponent {
  ContinuousTrajectory trajectory;
  int component = 0;
};

/// Discretises each component's mean at `times` (origin = query's last
/// waypoint) and returns the component closest to the ground truth; ties
/// break toward the lower component index.
ClosestComponent ktm_closest_component(const KtmModel& model, const DiscreteTrajectory& query,
                                       const DiscreteTrajectory& ground_truth,
                                       const std::vector<double>& times,
                                       ClosenessMetric metric = ClosenessMetric::kFrechet);

}  // namespace ktm

#endif  // KTM_PIPELINE_HPP
