#ifndef KTM_FUNCTIONAL_HPP
#define KTM_FUNCTIONAL_HPP

#include <Eigen/Core>
#include <vector>

#include "ktm/trajectory.hpp"

namespace ktm {

/// Squared-exponential bases centered on fixed inducing times, plus the
/// ridge/constraint coefficients used when fitting weights to them.
///
/// ell_t scales the squared time difference directly (units of steps^2);
/// lambda1 is the ridge coefficient, lambda2 the penalty weight softly
/// pinning the fitted curve to (0,0) at t = 0.
struct TimeBasis {
  Eigen::VectorXd inducing_times;
  double ell_t = 10.0;
  double lambda1 = 1e-3;
  double lambda2 = 1e3;

  Eigen::Index size() const { return inducing_times.size(); }

  /// Throws InvalidConfig unless the invariants hold (times strictly
  /// increasing and non-empty, ell_t > 0, lambda1 > 0, lambda2 >= 0).
  void validate() const;
};

/// Evenly spaced inducing times 0, spacing, 2*spacing, ... covering
/// [0, max_horizon].
TimeBasis make_time_basis(double max_horizon, double spacing, double ell_t,
                          double lambda1, double lambda2);

/// A trajectory as a function of time: t -> (wx . phi(t), wy . phi(t)),
/// in coordinates relative to some origin decided by the caller.
struct ContinuousTrajectory {
  Eigen::VectorXd weights_x;
  Eigen::VectorXd weights_y;
  TimeBasis basis;
};

/// Basis activations at time t: entry m is exp(-(t_m - t)^2 / (2 ell_t)).
Eigen::VectorXd time_features(double t, const TimeBasis& basis);

/// Fits weight vectors to a target trajectory given in coordinates relative
/// to the observation endpoint, sampled at the given time offsets. Solves
/// the ridge problem with the t=0 constraint folded in as a squared penalty:
///
///   w = (l1 I + l2 phi(0) phi(0)^T + sum_n phi(t_n) phi(t_n)^T)^-1
///       (sum_n c_n phi(t_n))
///
/// per coordinate series c. The system is SPD for lambda1 > 0 and is solved
/// by Cholesky factorization.
ContinuousTrajectory fit_weights(const DiscreteTrajectory& target_relative,
                                 const std::vector<double>& times,
                                 const TimeBasis& basis);

/// Relative coordinates at time t.
Point evaluate(const ContinuousTrajectory& traj, double t);

/// Absolute waypoints origin + evaluate(t_i), in the order of `times`.
DiscreteTrajectory discretise(const ContinuousTrajectory& traj,
                              const std::vector<double>& times,
                              const Point& origin);

}  // namespace ktm

#endif  // KTM_FUNCTIONAL_HPP
