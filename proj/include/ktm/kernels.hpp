#ifndef KTM_KERNELS_HPP
#define KTM_KERNELS_HPP

#include <Eigen/Core>
#include <vector>

#include "ktm/trajectory.hpp"

namespace ktm {

/// Kernel evaluations of one query against each representative, in (0, 1].
using ProjectionFeatures = Eigen::VectorXd;

/// Discrete Frechet (coupling) distance between two waypoint sequences:
/// the minimum over monotone couplings of the maximum paired Euclidean
/// distance, computed by the standard O(p*q) dynamic program.
double discrete_frechet(const DiscreteTrajectory& a, const DiscreteTrajectory& b);

/// RBF kernel with the discrete Frechet distance substituted for the
/// Euclidean one: exp(-d^2 / (2 * ell_df)). ell_df scales the squared
/// distance directly, so it carries units of m^2.
double df_kernel(const DiscreteTrajectory& a, const DiscreteTrajectory& b, double ell_df);

/// Kernel evaluations of `query` against every representative.
ProjectionFeatures projection_features(const DiscreteTrajectory& query,
                                       const RepresentativeSet& reps,
                                       double ell_df);

/// N x M feature matrix; row n is projection_features(corpus[n]). Rows are
/// independent and computed in parallel; every cell is written exactly once,
/// so the result does not depend on scheduling.
Eigen::MatrixXd gram_matrix(const std::vector<DiscreteTrajectory>& corpus,
                            const RepresentativeSet& reps,
                            double ell_df);

/// Selects representative trajectories: build the full pairwise discrete
/// Frechet distance matrix, sort columns ascending by L2 norm (ties by
/// original corpus index), and keep every `step`-th column starting at
/// sorted position 0. Near-identical trajectories sort adjacent, so the
/// stride discourages selecting duplicates.
RepresentativeSet select_representatives(const std::vector<DiscreteTrajectory>& corpus,
                                         std::size_t step);

/// Full pairwise distance matrix used by select_representatives; exposed for
/// callers that want to reuse it. Upper triangle is computed and mirrored.
Eigen::MatrixXd pairwise_frechet_matrix(const std::vector<DiscreteTrajectory>& corpus);

}  // namespace ktm

#endif  // KTM_KERNELS_HPP
