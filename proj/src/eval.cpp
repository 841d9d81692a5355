#include "ktm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ktm/errors.hpp"
#include "ktm/model_io.hpp"
#include "ktm/rng.hpp"

namespace ktm {

namespace {

using nlohmann::json;

MetricStats stats_of(const std::vector<double>& values) {
  MetricStats s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

json stats_json(const MetricStats& s) {
  return json{{"mean", s.mean}, {"std", s.stddev}};
}

void dump_trajectory(SampleDump& dump, const std::string& method, int sample,
                     const DiscreteTrajectory& traj, double t0 = 1.0) {
  for (std::size_t k = 0; k < traj.size(); ++k) {
    dump.rows.push_back(SampleDumpRow{method, sample, t0 + static_cast<double>(k),
                                      traj[k].x, traj[k].y});
  }
}

}  // namespace

DiscreteTrajectory constant_velocity(const DiscreteTrajectory& observed, int horizon) {
  if (observed.size() < 2) {
    throw InvalidInput("constant_velocity: need at least 2 observed waypoints");
  }
  if (horizon < 1) throw InvalidInput("constant_velocity: horizon must be >= 1");
  // Velocity from the last observed step only.
  const Point& last = observed.back();
  const Point& prev = observed[observed.size() - 2];
  const double vx = last.x - prev.x;
  const double vy = last.y - prev.y;
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(horizon));
  for (int k = 1; k <= horizon; ++k) {
    pts.push_back(Point{last.x + vx * k, last.y + vy * k});
  }
  return DiscreteTrajectory(std::move(pts));
}

double endpoint_distance(const DiscreteTrajectory& pred, const DiscreteTrajectory& truth) {
  if (pred.empty() || truth.empty()) {
    throw InvalidInput("endpoint_distance: both trajectories must be non-empty");
  }
  return point_distance(pred.back(), truth.back());
}

double frechet_metric(const DiscreteTrajectory& pred, const DiscreteTrajectory& truth) {
  return discrete_frechet(pred, truth);
}

void EvalConfig::validate() const {
  if (horizon < 1) throw InvalidConfig("eval.horizon must be >= 1");
  if (repetitions < 1) throw InvalidConfig("eval.repetitions must be >= 1");
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
    throw InvalidConfig("eval.test_fraction must lie in (0, 1)");
  }
  if (motion_filter.enabled && motion_filter.window < 1) {
    throw InvalidConfig("eval.motion_filter.window must be >= 1");
  }
}

EvalReport run_experiment(const TrajectoryCorpus& corpus, const EvalConfig& config,
                          std::uint64_t master_seed, SampleDump* dump) {
  config.validate();
  if (corpus.size() == 0) throw InvalidInput("run_experiment: corpus is empty");

  EvalReport report;
  report.master_seed = master_seed;
  report.repetitions = config.repetitions;
  report.horizon = config.horizon;
  report.ratio = ratio_to_string(config.ratio);
  report.config_hash = config.config_hash;
  report.corpus_size = corpus.size();

  const SegmentResult segmented = segment(corpus, config.ratio);
  report.pair_count = segmented.pairs.size();
  report.segment_skipped = segmented.skipped;
  if (segmented.pairs.size() < 2) {
    throw InvalidInput("run_experiment: fewer than 2 usable pairs after segmentation");
  }

  // Representatives are chosen once over every observed trajectory; the
  // per-repetition test draw then stays outside this set.
  std::vector<DiscreteTrajectory> observed;
  observed.reserve(segmented.pairs.size());
  for (const auto& pair : segmented.pairs) observed.push_back(pair.observed);
  const RepresentativeSet reps =
      select_representatives(observed, config.train.representative_step);
  report.representative_count = reps.size();

  std::vector<double> ed_c, ed_w, ed_cv, df_c, df_w, df_cv;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t rep_seed = derive_seed(master_seed, static_cast<std::uint64_t>(rep));
    RepetitionResult result;
    result.seed = rep_seed;
    try {
      const IndexSplit split =
          split_train_test(segmented.pairs.size(), reps.source_indices, config.test_fraction,
                           derive_seed(rep_seed, 0));
      std::vector<TrainingPair> train_pairs;
      train_pairs.reserve(split.train.size());
      for (std::size_t idx : split.train) train_pairs.push_back(segmented.pairs[idx]);
      result.train_count = train_pairs.size();

      KtmTrainConfig train_config = config.train;
      train_config.seed = derive_seed(rep_seed, 1);
      const KtmModel model = train_ktm(train_pairs, train_config, reps).model;

      std::vector<TrainingPair> test_pairs;
      test_pairs.reserve(split.test.size());
      for (std::size_t idx : split.test) test_pairs.push_back(segmented.pairs[idx]);
      if (config.motion_filter.enabled) {
        const auto kept = motion_filter(test_pairs, config.motion_filter.min_displacement,
                                        config.motion_filter.window);
        result.filtered_out = test_pairs.size() - kept.size();
        test_pairs = kept;
      }

      double sum_ed_c = 0, sum_ed_w = 0, sum_ed_cv = 0;
      double sum_df_c = 0, sum_df_w = 0, sum_df_cv = 0;
      std::size_t evaluated = 0;
      for (const auto& pair : test_pairs) {
        if (pair.observed.size() < 2) continue;  // CV needs a displacement
        const int h = std::min<int>(config.horizon, static_cast<int>(pair.target.size()));
        std::vector<double> times(static_cast<std::size_t>(h));
        for (int k = 0; k < h; ++k) times[static_cast<std::size_t>(k)] = k + 1;
        DiscreteTrajectory truth;
        truth.points.assign(pair.target.points.begin(), pair.target.points.begin() + h);

        const auto weighted = ktm_weighted_mean(model, pair.observed);
        const auto pred_w = discretise(weighted, times, pair.observed.back());
        const auto closest = ktm_closest_component(model, pair.observed, truth, times,
                                                   config.ktm_c_selection);
        const auto pred_c = discretise(closest.trajectory, times, pair.observed.back());
        const auto pred_cv = constant_velocity(pair.observed, h);

        sum_ed_c += endpoint_distance(pred_c, truth);
        sum_ed_w += endpoint_distance(pred_w, truth);
        sum_ed_cv += endpoint_distance(pred_cv, truth);
        sum_df_c += frechet_metric(pred_c, truth);
        sum_df_w += frechet_metric(pred_w, truth);
        sum_df_cv += frechet_metric(pred_cv, truth);
        ++evaluated;

        if (dump != nullptr && rep == 0 && evaluated == 1) {
          dump_trajectory(*dump, "observed", 0, pair.observed,
                          1.0 - static_cast<double>(pair.observed.size()));
          dump_trajectory(*dump, "truth", 0, truth);
          dump_trajectory(*dump, "KTM-C", 0, pred_c);
          dump_trajectory(*dump, "KTM-W", 0, pred_w);
          dump_trajectory(*dump, "CV", 0, pred_cv);
          if (dump->draw_count > 0) {
            const auto draws = sample_trajectories(model, pair.observed,
                                                   static_cast<std::size_t>(dump->draw_count),
                                                   derive_seed(rep_seed, 2));
            for (std::size_t s = 0; s < draws.size(); ++s) {
              const auto realised =
                  discretise(draws[s].continuous, times, draws[s].origin);
              dump_trajectory(*dump, "KTM-sample", static_cast<int>(s), realised);
            }
          }
        }
      }
      if (evaluated == 0) {
        throw InvalidInput("no evaluable test examples (all filtered or too short)");
      }
      const auto n = static_cast<double>(evaluated);
      result.test_count = evaluated;
      result.ed_ktm_c = sum_ed_c / n;
      result.ed_ktm_w = sum_ed_w / n;
      result.ed_cv = sum_ed_cv / n;
      result.df_ktm_c = sum_df_c / n;
      result.df_ktm_w = sum_df_w / n;
      result.df_cv = sum_df_cv / n;

      ed_c.push_back(result.ed_ktm_c);
      ed_w.push_back(result.ed_ktm_w);
      ed_cv.push_back(result.ed_cv);
      df_c.push_back(result.df_ktm_c);
      df_w.push_back(result.df_ktm_w);
      df_cv.push_back(result.df_cv);
      report.per_repetition.push_back(result);
    } catch (const Error& e) {
      report.failures.push_back("repetition " + std::to_string(rep) + ": " + e.what());
    }
  }

  report.ed_ktm_c = stats_of(ed_c);
  report.ed_ktm_w = stats_of(ed_w);
  report.ed_cv = stats_of(ed_cv);
  report.df_ktm_c = stats_of(df_c);
  report.df_ktm_w = stats_of(df_w);
  report.df_cv = stats_of(df_cv);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["format_version"] = report.format_version;
  j["master_seed"] = report.master_seed;
  j["repetitions"] = report.repetitions;
  j["horizon"] = report.horizon;
  j["ratio"] = report.ratio;
  j["config_hash"] = report.config_hash;
  j["counts"] = {{"corpus", report.corpus_size},
                 {"pairs", report.pair_count},
                 {"segment_skipped", report.segment_skipped},
                 {"representatives", report.representative_count}};
  j["methods"] = {"KTM-C", "KTM-W", "CV", "DGM"};
  j["metrics"] = {
      {"ed",
       {{"KTM-C", stats_json(report.ed_ktm_c)},
        {"KTM-W", stats_json(report.ed_ktm_w)},
        {"CV", stats_json(report.ed_cv)},
        {"DGM", nullptr}}},
      {"df",
       {{"KTM-C", stats_json(report.df_ktm_c)},
        {"KTM-W", stats_json(report.df_ktm_w)},
        {"CV", stats_json(report.df_cv)},
        {"DGM", nullptr}}}};
  j["per_repetition"] = json::array();
  for (const auto& r : report.per_repetition) {
    j["per_repetition"].push_back({{"seed", r.seed},
                                   {"train_count", r.train_count},
                                   {"test_count", r.test_count},
                                   {"filtered_out", r.filtered_out},
                                   {"ed", {{"KTM-C", r.ed_ktm_c},
                                           {"KTM-W", r.ed_ktm_w},
                                           {"CV", r.ed_cv}}},
                                   {"df", {{"KTM-C", r.df_ktm_c},
                                           {"KTM-W", r.df_ktm_w},
                                           {"CV", r.df_cv}}}});
  }
  j["failures"] = report.failures;
  return j.dump(2) + "\n";
}

std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  char line[160];
  out << "experiment: ratio " << report.ratio << ", horizon " << report.horizon << ", "
      << report.repetitions << " repetitions, seed " << report.master_seed << "\n";
  out << "corpus " << report.corpus_size << " | pairs " << report.pair_count
      << " | representatives " << report.representative_count << "\n\n";
  std::snprintf(line, sizeof(line), "%-8s %16s %16s %16s %10s\n", "metric", "KTM-C", "KTM-W",
                "CV", "DGM");
  out << line;
  auto row = [&](const char* name, const MetricStats& c, const MetricStats& w,
                 const MetricStats& cv) {
    char cbuf[32], wbuf[32], vbuf[32];
    std::snprintf(cbuf, sizeof(cbuf), "%.2f +- %.2f", c.mean, c.stddev);
    std::snprintf(wbuf, sizeof(wbuf), "%.2f +- %.2f", w.mean, w.stddev);
    std::snprintf(vbuf, sizeof(vbuf), "%.2f +- %.2f", cv.mean, cv.stddev);
    std::snprintf(line, sizeof(line), "%-8s %16s %16s %16s %10s\n", name, cbuf, wbuf, vbuf, "-");
    out << line;
  };
  row("ED", report.ed_ktm_c, report.ed_ktm_w, report.ed_cv);
  row("DF", report.df_ktm_c, report.df_ktm_w, report.df_cv);
  if (!report.failures.empty()) {
    out << "\nfailures:\n";
    for (const auto& f : report.failures) out << "  " << f << "\n";
  }
  return out.str();
}

}  // namespace ktm
