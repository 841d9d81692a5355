#ifndef KTM_EVAL_HPP
#define KTM_EVAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ktm/data.hpp"
#include "ktm/pipeline.hpp"

namespace ktm {

/// Extrapolates the last observed displacement for `horizon` steps beyond
/// the final waypoint. Needs at least two observed waypoints.
DiscreteTrajectory constant_velocity(const DiscreteTrajectory& observed, int horizon);

/// Euclidean distance between the final waypoints.
double endpoint_distance(const DiscreteTrajectory& pred, const DiscreteTrajectory& truth);

/// Discrete Frechet distance between prediction and ground truth.
double frechet_metric(const DiscreteTrajectory& pred, const DiscreteTrajectory& truth);

struct MotionFilterConfig {
  bool enabled = false;
  double min_displacement = 20.0;
  int window = 20;
};

struct EvalConfig {
  SplitRatio ratio = SplitRatio::kOneToOne;
  double test_fraction = 0.2;
  int horizon = 20;
  int repetitions = 5;
  MotionFilterConfig motion_filter;
  ClosenessMetric ktm_c_selection = ClosenessMetric::kFrechet;
  KtmTrainConfig train;
  std::string config_hash;  // carried into the report for provenance

  void validate() const;
};

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample std (n-1) across repetitions; 0 for one rep
};

/// Per-repetition mean metric value per method.
struct RepetitionResult {
  std::uint64_t seed = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;      // evaluated examples, after filtering
  std::size_t filtered_out = 0;    // dropped by the motion filter
  double ed_ktm_c = 0, ed_ktm_w = 0, ed_cv = 0;
  double df_ktm_c = 0, df_ktm_w = 0, df_cv = 0;
};

/// Aggregated experiment results. The DGM column is reserved so external
/// numbers can be placed alongside; this library does not produce them.
struct EvalReport {
  int format_version = 1;
  std::uint64_t master_seed = 0;
  int repetitions = 0;
  int horizon = 0;
  std::string ratio;
  std::string config_hash;
  std::size_t corpus_size = 0;
  std::size_t pair_count = 0;
  std::size_t segment_skipped = 0;
  std::size_t representative_count = 0;
  MetricStats ed_ktm_c, ed_ktm_w, ed_cv;
  MetricStats df_ktm_c, df_ktm_w, df_cv;
  std::vector<RepetitionResult> per_repetition;
  std::vector<std::string> failures;  // "repetition 3: <error>"
};

/// Rows for the optional trajectory dump (first test example of the first
/// repetition): observed/truth context, the three method predictions, and
/// mixture draws.
struct SampleDumpRow {
  std::string method;
  int sample = 0;
  double t = 0, x = 0, y = 0;
};

struct SampleDump {
  int draw_count = 0;  // mixture realisations to include
  std::vector<SampleDumpRow> rows;
};

/// Runs the full protocol: segment, select representatives over all observed
/// trajectories, then per repetition split (test drawn outside the
/// representative set), train, and score KTM-C / KTM-W / CV on the test set
/// at the configured horizon (capped per example by the available ground
/// truth). A repetition that fails to train is recorded and skipped.
/// Deterministic under master_seed.
EvalReport run_experiment(const TrajectoryCorpus& corpus, const EvalConfig& config,
                          std::uint64_t master_seed, SampleDump* dump = nullptr);

std::string report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

}  // namespace ktm

#endif  // KTM_EVAL_HPP
