#include "ktm/functional.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "ktm/errors.hpp"

namespace ktm {

void TimeBasis::validate() const {
  if (inducing_times.size() < 1) {
    throw InvalidConfig("TimeBasis: needs at least one inducing time");
  }
  for (Eigen::Index m = 1; m < inducing_times.size(); ++m) {
    if (!(inducing_times[m] > inducing_times[m - 1])) {
      throw InvalidConfig("TimeBasis: inducing times must be strictly increasing");
    }
  }
  if (!(ell_t > 0.0)) throw InvalidConfig("TimeBasis: ell_t must be positive");
  if (!(lambda1 > 0.0)) throw InvalidConfig("TimeBasis: lambda1 must be positive");
  if (lambda2 < 0.0) throw InvalidConfig("TimeBasis: lambda2 must be non-negative");
}

TimeBasis make_time_basis(double max_horizon, double spacing, double ell_t,
                          double lambda1, double lambda2) {
  if (!(spacing > 0.0) || !(max_horizon >= 0.0)) {
    throw InvalidConfig("make_time_basis: spacing must be positive and horizon non-negative");
  }
  const auto count = static_cast<Eigen::Index>(std::ceil(max_horizon / spacing)) + 1;
  TimeBasis basis;
  basis.inducing_times.resize(count);
  for (Eigen::Index m = 0; m < count; ++m) {
    basis.inducing_times[m] = static_cast<double>(m) * spacing;
  }
  basis.ell_t = ell_t;
  basis.lambda1 = lambda1;
  basis.lambda2 = lambda2;
  basis.validate();
  return basis;
}

Eigen::VectorXd time_features(double t, const TimeBasis& basis) {
  basis.validate();
  Eigen::VectorXd phi(basis.size());
  for (Eigen::Index m = 0; m < basis.size(); ++m) {
    const double dt = basis.inducing_times[m] - t;
    phi[m] = std::exp(-(dt * dt) / (2.0 * basis.ell_t));
  }
  return phi;
}

ContinuousTrajectory fit_weights(const DiscreteTrajectory& target_relative,
                                 const std::vector<double>& times,
                                 const TimeBasis& basis) {
  target_relative.validate("fit_weights target");
  if (times.size() != target_relative.size()) {
    throw InvalidInput("fit_weights: times length " + std::to_string(times.size()) +
                       " does not match target length " +
                       std::to_string(target_relative.size()));
  }
  basis.validate();

  const Eigen::Index m = basis.size();
  Eigen::MatrixXd system = basis.lambda1 * Eigen::MatrixXd::Identity(m, m);
  const Eigen::VectorXd phi0 = time_features(0.0, basis);
  system.noalias() += basis.lambda2 * (phi0 * phi0.transpose());

  Eigen::VectorXd rhs_x = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd rhs_y = Eigen::VectorXd::Zero(m);
  for (std::size_t n = 0; n < times.size(); ++n) {
    const Eigen::VectorXd phi = time_features(times[n], basis);
    system.noalias() += phi * phi.transpose();
    rhs_x.noalias() += target_relative[n].x * phi;
    rhs_y.noalias() += target_relative[n].y * phi;
  }

  const Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) {
    throw Error("fit_weights: Cholesky factorization failed on an SPD system");
  }
  ContinuousTrajectory traj;
  traj.weights_x = llt.solve(rhs_x);
  traj.weights_y = llt.solve(rhs_y);
  traj.basis = basis;
  return traj;
}

Point evaluate(const ContinuousTrajectory& traj, double t) {
  const Eigen::VectorXd phi = time_features(t, traj.basis);
  return Point{traj.weights_x.dot(phi), traj.weights_y.dot(phi)};
}

DiscreteTrajectory discretise(const ContinuousTrajectory& traj,
                              const std::vector<double>& times,
                              const Point& origin) {
  if (times.empty()) {
    throw InvalidInput("discretise: times must be non-empty");
  }
  std::vector<Point> pts;
  pts.reserve(times.size());
  for (double t : times) {
    const Point rel = evaluate(traj, t);
    pts.push_back(Point{origin.x + rel.x, origin.y + rel.y});
  }
  return DiscreteTrajectory(std::move(pts));
}

}  // namespace ktm
