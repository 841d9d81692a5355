#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ktm/config.hpp"
#include "ktm/data.hpp"
#include "ktm/errors.hpp"
#include "ktm/eval.hpp"
#include "ktm/kernels.hpp"
#include "ktm/model_io.hpp"
#include "ktm/pipeline.hpp"

namespace py = pybind11;

namespace {

ktm::DiscreteTrajectory to_trajectory(const Eigen::MatrixXd& waypoints) {
  if (waypoints.cols() != 2) {
    throw ktm::InvalidInput("trajectory arrays must have shape (n, 2)");
  }
  std::vector<ktm::Point> pts;
  pts.reserve(static_cast<std::size_t>(waypoints.rows()));
  for (Eigen::Index n = 0; n < waypoints.rows(); ++n) {
    pts.push_back(ktm::Point{waypoints(n, 0), waypoints(n, 1)});
  }
  return ktm::DiscreteTrajectory(std::move(pts));
}

Eigen::MatrixXd from_trajectory(const ktm::DiscreteTrajectory& traj) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(traj.size()), 2);
  for (std::size_t n = 0; n < traj.size(); ++n) {
    out(static_cast<Eigen::Index>(n), 0) = traj[n].x;
    out(static_cast<Eigen::Index>(n), 1) = traj[n].y;
  }
  return out;
}

std::vector<std::pair<std::string, Eigen::MatrixXd>> corpus_to_python(
    const ktm::TrajectoryCorpus& corpus) {
  std::vector<std::pair<std::string, Eigen::MatrixXd>> out;
  out.reserve(corpus.size());
  for (const auto& entry : corpus.entries) {
    out.emplace_back(entry.id, from_trajectory(entry.trajectory));
  }
  return out;
}

std::vector<double> default_times(int horizon) {
  std::vector<double> times(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k) times[static_cast<std::size_t>(k)] = k + 1;
  return times;
}

/// Python-facing handle around the trained artifact.
class PyModel {
 public:
  explicit PyModel(ktm::KtmModel model) : model_(std::move(model)) {}

  static PyModel train(
      const std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>& pairs, double ell_df,
      std::size_t representative_step, double basis_spacing, double ell_t, double lambda1,
      double lambda2, int hidden_dim, int components, double learning_rate, int batch_size,
      int epochs, std::uint64_t seed) {
    std::vector<ktm::TrainingPair> converted;
    converted.reserve(pairs.size());
    for (const auto& [observed, target] : pairs) {
      converted.push_back(ktm::TrainingPair{to_trajectory(observed), to_trajectory(target)});
    }
    ktm::KtmTrainConfig config;
    config.ell_df = ell_df;
    config.representative_step = representative_step;
    config.basis_spacing = basis_spacing;
    config.ell_t = ell_t;
    config.lambda1 = lambda1;
    config.lambda2 = lambda2;
    config.mdn.hidden_dim = hidden_dim;
    config.mdn.components = components;
    config.mdn.learning_rate = learning_rate;
    config.mdn.batch_size = batch_size;
    config.mdn.epochs = epochs;
    config.seed = seed;
    return PyModel(ktm::train_ktm(converted, config).model);
  }

  static PyModel load(const std::string& path) { return PyModel(ktm::load_model(path)); }
  void save(const std::string& path) const { ktm::save_model(model_, path); }

  py::dict predict(const Eigen::MatrixXd& query) const {
    const auto mixture = ktm::predict_mixture(model_, to_trajectory(query));
    py::dict out;
    out["alphas"] = mixture.alphas;
    out["means"] = mixture.means;
    out["sigmas"] = mixture.sigmas;
    return out;
  }

  std::vector<Eigen::MatrixXd> sample(const Eigen::MatrixXd& query, std::size_t count,
                                      std::uint64_t seed, int horizon) const {
    const auto q = to_trajectory(query);
    const auto samples = ktm::sample_trajectories(model_, q, count, seed);
    const auto times = default_times(horizon);
    std::vector<Eigen::MatrixXd> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
      out.push_back(from_trajectory(ktm::discretise(s.continuous, times, s.origin)));
    }
    return out;
  }

  Eigen::MatrixXd weighted_mean(const Eigen::MatrixXd& query, int horizon) const {
    const auto q = to_trajectory(query);
    const auto traj = ktm::ktm_weighted_mean(model_, q);
    return from_trajectory(ktm::discretise(traj, default_times(horizon), q.back()));
  }

  std::pair<Eigen::MatrixXd, int> closest_component(const Eigen::MatrixXd& query,
                                                    const Eigen::MatrixXd& truth,
                                                    const std::string& metric) const {
    const auto q = to_trajectory(query);
    const auto ground_truth = to_trajectory(truth);
    const auto times = default_times(static_cast<int>(ground_truth.size()));
    const auto metric_kind = metric == "ed" ? ktm::ClosenessMetric::kEndpoint
                                            : ktm::ClosenessMetric::kFrechet;
    const auto picked =
        ktm::ktm_closest_component(model_, q, ground_truth, times, metric_kind);
    return {from_trajectory(ktm::discretise(picked.trajectory, times, q.back())),
            picked.component};
  }

  std::size_t representative_count() const { return model_.representatives.size(); }
  int components() const { return model_.mdn_config.components; }
  int output_dim() const { return model_.mdn_config.output_dim; }
  py::bytes serialize() const { return py::bytes(ktm::serialize_model(model_)); }

 private:
  ktm::KtmModel model_;
};

}  // namespace

PYBIND11_MODULE(_ktm, m) {
  m.doc() = "Trajectory prediction with discrete-Frechet kernel projections";

  // Translators run newest-first, so the base class goes first and the
  // subclasses that should surface as ValueError take precedence.
  py::register_exception<ktm::Error>(m, "KtmError", PyExc_RuntimeError);
  py::register_exception<ktm::InvalidConfig>(m, "InvalidConfigError", PyExc_ValueError);
  py::register_exception<ktm::InvalidInput>(m, "InvalidInputError", PyExc_ValueError);
  py::register_exception<ktm::ParseError>(m, "CsvParseError", PyExc_ValueError);

  m.def(
      "discrete_frechet",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        return ktm::discrete_frechet(to_trajectory(a), to_trajectory(b));
      },
      py::arg("a"), py::arg("b"),
      "Discrete Frechet distance between two (n, 2) waypoint arrays.");

  m.def(
      "df_kernel",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double ell_df) {
        return ktm::df_kernel(to_trajectory(a), to_trajectory(b), ell_df);
      },
      py::arg("a"), py::arg("b"), py::arg("ell_df") = 100.0,
      "RBF kernel over the discrete Frechet distance: exp(-d^2 / (2 ell_df)).");

  m.def(
      "constant_velocity",
      [](const Eigen::MatrixXd& observed, int horizon) {
        return from_trajectory(ktm::constant_velocity(to_trajectory(observed), horizon));
      },
      py::arg("observed"), py::arg("horizon"),
      "Extrapolate the last observed displacement for `horizon` steps.");

  m.def(
      "endpoint_distance",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        return ktm::endpoint_distance(to_trajectory(a), to_trajectory(b));
      },
      py::arg("pred"), py::arg("truth"));

  m.def(
      "simulate_crossings",
      [](int count, std::uint64_t seed, double waypoint_noise, double lateral_std,
         int min_waypoints, int max_waypoints, double arena_size) {
        ktm::SimulatorConfig config;
        config.count = count;
        config.waypoint_noise = waypoint_noise;
        config.lateral_std = lateral_std;
        config.min_waypoints = min_waypoints;
        config.max_waypoints = max_waypoints;
        config.arena_size = arena_size;
        return corpus_to_python(ktm::simulate_crossings(config, seed));
      },
      py::arg("count") = 600, py::arg("seed") = 0, py::arg("waypoint_noise") = 0.15,
      py::arg("lateral_std") = 1.0, py::arg("min_waypoints") = 20,
      py::arg("max_waypoints") = 40, py::arg("arena_size") = 20.0,
      "Two families of crossing trajectories as (id, (n, 2) array) pairs.");

  m.def(
      "load_csv",
      [](const std::string& path) { return corpus_to_python(ktm::load_csv(path)); },
      py::arg("path"), "Load an `id,t,x,y` trajectory CSV.");

  m.def(
      "segment",
      [](const std::vector<std::pair<std::string, Eigen::MatrixXd>>& corpus,
         const std::string& ratio) {
        ktm::TrajectoryCorpus converted;
        for (const auto& [id, array] : corpus) {
          converted.entries.push_back(ktm::CorpusEntry{id, to_trajectory(array)});
        }
        const auto result = ktm::segment(converted, ktm::parse_ratio(ratio));
        std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> out;
        out.reserve(result.pairs.size());
        for (const auto& pair : result.pairs) {
          out.emplace_back(from_trajectory(pair.observed), from_trajectory(pair.target));
        }
        return out;
      },
      py::arg("corpus"), py::arg("ratio") = "1:1",
      "Split each corpus entry into an (observed, target) pair at the given ratio.");

  m.def(
      "run_experiment",
      [](const std::string& corpus_csv, const std::string& config_json,
         std::uint64_t seed) {
        ktm::RunConfig config = config_json.empty()
                                     ? ktm::RunConfig{}
                                     : ktm::parse_config(config_json, "<config>");
        config.seed = seed;
        const auto corpus = ktm::load_csv(corpus_csv, config.data.csv);
        const auto report = ktm::run_experiment(corpus, config.eval_config(), config.seed);
        return ktm::report_to_json(report);
      },
      py::arg("corpus_csv"), py::arg("config_json") = std::string(), py::arg("seed") = 12345,
      "Run the repeated train/test experiment; returns the report as JSON text.");

  py::class_<PyModel>(m, "Model")
      .def_static("train", &PyModel::train, py::arg("pairs"), py::arg("ell_df") = 100.0,
                  py::arg("representative_step") = 2, py::arg("basis_spacing") = 5.0,
                  py::arg("ell_t") = 10.0, py::arg("lambda1") = 1e-3, py::arg("lambda2") = 1e3,
                  py::arg("hidden_dim") = 64, py::arg("components") = 4,
                  py::arg("learning_rate") = 1e-3, py::arg("batch_size") = 32,
                  py::arg("epochs") = 80, py::arg("seed") = 0,
                  "Train from a list of (observed, target) waypoint arrays.")
      .def_static("load", &PyModel::load, py::arg("path"))
      .def("save", &PyModel::save, py::arg("path"))
      .def("predict", &PyModel::predict, py::arg("query"),
           "Mixture parameters (alphas, means, sigmas) for a query trajectory.")
      .def("sample", &PyModel::sample, py::arg("query"), py::arg("count") = 50,
           py::arg("seed") = 0, py::arg("horizon") = 20,
           "Discretised trajectory realisations, absolute coordinates.")
      .def("weighted_mean", &PyModel::weighted_mean, py::arg("query"), py::arg("horizon") = 20)
      .def("closest_component", &PyModel::closest_component, py::arg("query"),
           py::arg("truth"), py::arg("metric") = "df")
      .def("serialize", &PyModel::serialize)
      .def_property_readonly("representative_count", &PyModel::representative_count)
      .def_property_readonly("components", &PyModel::components)
      .def_property_readonly("output_dim", &PyModel::output_dim);

  m.attr("__version__") = "1.0.0";
}
