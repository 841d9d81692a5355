#include "ktm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "detail/parallel.hpp"
#include "ktm/errors.hpp"

namespace ktm {

double discrete_frechet(const DiscreteTrajectory& a, const DiscreteTrajectory& b) {
  if (a.empty() || b.empty()) {
    throw InvalidInput("discrete_frechet: both trajectories must be non-empty");
  }
  const std::size_t p = a.size();
  const std::size_t q = b.size();

  // Coupling DP over two rolling rows: c(i,j) = max(d(i,j),
  // min(c(i-1,j), c(i,j-1), c(i-1,j-1))).
  std::vector<double> prev(q), curr(q);
  for (std::size_t j = 0; j < q; ++j) {
    const double d = point_distance(a[0], b[j]);
    prev[j] = (j == 0) ? d : std::max(prev[j - 1], d);
  }
  for (std::size_t i = 1; i < p; ++i) {
    curr[0] = std::max(prev[0], point_distance(a[i], b[0]));
    for (std::size_t j = 1; j < q; ++j) {
      const double reach = std::min({curr[j - 1], prev[j], prev[j - 1]});
      curr[j] = std::max(reach, point_distance(a[i], b[j]));
    }
    std::swap(prev, curr);
  }
  return prev[q - 1];
}

double df_kernel(const DiscreteTrajectory& a, const DiscreteTrajectory& b, double ell_df) {
  if (!(ell_df > 0.0)) {
    throw InvalidConfig("df_kernel: ell_df must be positive");
  }
  const double d = discrete_frechet(a, b);
  return std::exp(-(d * d) / (2.0 * ell_df));
}

ProjectionFeatures projection_features(const DiscreteTrajectory& query,
                                       const RepresentativeSet& reps,
                                       double ell_df) {
  if (reps.size() == 0) {
    throw InvalidInput("projection_features: representative set is empty");
  }
  ProjectionFeatures values(static_cast<Eigen::Index>(reps.size()));
  for (std::size_t j = 0; j < reps.size(); ++j) {
    values[static_cast<Eigen::Index>(j)] = df_kernel(query, reps.trajectories[j], ell_df);
  }
  return values;
}

Eigen::MatrixXd gram_matrix(const std::vector<DiscreteTrajectory>& corpus,
                            const RepresentativeSet& reps,
                            double ell_df) {
  if (corpus.empty()) {
    throw InvalidInput("gram_matrix: corpus is empty");
  }
  Eigen::MatrixXd gram(static_cast<Eigen::Index>(corpus.size()),
                       static_cast<Eigen::Index>(reps.size()));
  detail::parallel_for(corpus.size(), [&](std::size_t n) {
    gram.row(static_cast<Eigen::Index>(n)) =
        projection_features(corpus[n], reps, ell_df).transpose();
  });
  return gram;
}

Eigen::MatrixXd pairwise_frechet_matrix(const std::vector<DiscreteTrajectory>& corpus) {
  if (corpus.empty()) {
    throw InvalidInput("pairwise_frechet_matrix: corpus is empty");
  }
  const std::size_t n = corpus.size();
  Eigen::MatrixXd dist(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  // Upper triangle, mirrored; the diagonal is zero by the metric axioms.
  detail::parallel_for(n, [&](std::size_t i) {
    dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = discrete_frechet(corpus[i], corpus[j]);
      dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
      dist(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
    }
  });
  return dist;
}

RepresentativeSet select_representatives(const std::vector<DiscreteTrajectory>& corpus,
                                         std::size_t step) {
  if (corpus.empty()) {
    throw InvalidInput("select_representatives: corpus is empty");
  }
  if (step < 1 || step > corpus.size()) {
    throw InvalidConfig("select_representatives: step must be in [1, corpus size], got " +
                        std::to_string(step));
  }
  const Eigen::MatrixXd dist = pairwise_frechet_matrix(corpus);

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> norms(corpus.size());
  for (std::size_t j = 0; j < corpus.size(); ++j) {
    norms[j] = dist.col(static_cast<Eigen::Index>(j)).norm();
  }
  // Ascending column norm; ties break by original corpus index.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] < norms[b]; });

  RepresentativeSet reps;
  for (std::size_t k = 0; k < order.size(); k += step) {
    reps.source_indices.push_back(order[k]);
    reps.trajectories.push_back(corpus[order[k]]);
  }
  return reps;
}

}  // namespace ktm
