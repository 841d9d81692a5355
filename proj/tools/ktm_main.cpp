#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ktm/config.hpp"
#include "ktm/data.hpp"
#include "ktm/errors.hpp"
#include "ktm/eval.hpp"
#include "ktm/model_io.hpp"
#include "ktm/pipeline.hpp"

namespace {

using nlohmann::json;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  bool seed_given = false;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file (defaults apply otherwise)");
  cmd->add_option("--set", opts.overrides,
                  "override a config key, e.g. --set kernel.ell_df=50 (repeatable)");
  cmd->add_option("--seed", opts.seed, "master seed override")
      ->each([&opts](const std::string&) { opts.seed_given = true; });
}

ktm::RunConfig resolve_config(const CommonOptions& opts) {
  ktm::RunConfig config =
      opts.config_path.empty() ? ktm::RunConfig{} : ktm::load_config(opts.config_path);
  for (const auto& assignment : opts.overrides) {
    ktm::apply_override(config, assignment);
  }
  if (opts.seed_given) config.seed = opts.seed;
  config.validate();
  return config;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ktm::IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out.good()) throw ktm::IoError("failed while writing '" + path + "'");
}

void echo_config(const ktm::RunConfig& config, const std::string& path) {
  write_text_file(path, config.to_json());
}

std::string format_full(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

int run_simulate(const CommonOptions& opts, const std::string& out_path) {
  const ktm::RunConfig config = resolve_config(opts);
  const ktm::TrajectoryCorpus corpus =
      ktm::simulate_crossings(config.data.simulator, config.seed);
  ktm::write_csv_file(corpus, out_path);
  echo_config(config, out_path + ".config.json");
  std::cout << "wrote " << corpus.size() << " trajectories to " << out_path << "\n";
  return 0;
}

int run_train(const CommonOptions& opts, const std::string& corpus_path,
              const std::string& out_path) {
  const ktm::RunConfig config = resolve_config(opts);
  const ktm::TrajectoryCorpus corpus = ktm::load_csv(corpus_path, config.data.csv);
  const auto segmented = ktm::segment(corpus, ktm::parse_ratio(config.data.segmentation));
  const auto output = ktm::train_ktm(segmented.pairs, config.train_config());
  for (std::size_t e = 0; e < output.epoch_losses.size(); ++e) {
    std::cout << "epoch " << (e + 1) << "/" << output.epoch_losses.size() << " loss "
              << output.epoch_losses[e] << "\n";
  }
  ktm::save_model(output.model, out_path);
  echo_config(config, out_path + ".config.json");
  std::cout << "wrote model (" << output.model.representatives.size() << " representatives, "
            << output.model.mdn_config.output_dim << " weight dims) to " << out_path << "\n";
  return 0;
}

int run_predict(const CommonOptions& opts, const std::string& model_path,
                const std::string& query_path, int samples, const std::string& out_prefix) {
  if (samples < 0) throw ktm::InvalidConfig("--samples must be >= 0");
  const ktm::RunConfig config = resolve_config(opts);
  const ktm::KtmModel model = ktm::load_model(model_path);
  const ktm::TrajectoryCorpus queries = ktm::load_csv(query_path, config.data.csv);
  if (queries.size() != 1) {
    throw ktm::InvalidInput("predict: query file must contain exactly one trajectory id, got " +
                            std::to_string(queries.size()));
  }
  const ktm::DiscreteTrajectory& query = queries.entries[0].trajectory;
  const ktm::MixtureParams mixture = ktm::predict_mixture(model, query);

  json mix_json;
  mix_json["components"] = model.mdn_config.components;
  mix_json["output_dim"] = model.mdn_config.output_dim;
  mix_json["alphas"] = std::vector<double>(mixture.alphas.data(),
                                           mixture.alphas.data() + mixture.alphas.size());
  auto matrix_rows = [](const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      rows[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(m.cols()));
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = m(i, c);
      }
    }
    return rows;
  };
  mix_json["means"] = matrix_rows(mixture.means);
  mix_json["sigmas"] = matrix_rows(mixture.sigmas);
  mix_json["basis"] = {{"ell_t", model.basis.ell_t},
                       {"inducing_times",
                        std::vector<double>(model.basis.inducing_times.data(),
                                            model.basis.inducing_times.data() +
                                                model.basis.inducing_times.size())}};
  mix_json["origin"] = {query.back().x, query.back().y};
  write_text_file(out_prefix + "_mixture.json", mix_json.dump(2) + "\n");

  if (samples > 0) {
    const int horizon = config.eval.horizon;
    std::vector<double> times(static_cast<std::size_t>(horizon));
    for (int k = 0; k < horizon; ++k) times[static_cast<std::size_t>(k)] = k + 1;
    const auto draws = ktm::sample_trajectories(model, query,
                                                static_cast<std::size_t>(samples), config.seed);
    std::ofstream out(out_prefix + "_samples.csv", std::ios::binary);
    if (!out) throw ktm::IoError("cannot open '" + out_prefix + "_samples.csv' for writing");
    out << "sample,t,x,y\n";
    for (std::size_t s = 0; s < draws.size(); ++s) {
      const auto realised = ktm::discretise(draws[s].continuous, times, draws[s].origin);
      for (int k = 0; k < horizon; ++k) {
        out << s << ',' << (k + 1) << ',' << format_full(realised[static_cast<std::size_t>(k)].x)
            << ',' << format_full(realised[static_cast<std::size_t>(k)].y) << '\n';
      }
    }
    if (!out.good()) throw ktm::IoError("failed while writing samples CSV");
  }
  echo_config(config, out_prefix + "_config.json");
  std::cout << "mixture with " << mixture.alphas.size() << " components written to "
            << out_prefix << "_mixture.json";
  if (samples > 0) std::cout << "; " << samples << " samples to " << out_prefix << "_samples.csv";
  std::cout << "\n";
  return 0;
}

int run_eval(const CommonOptions& opts, const std::string& corpus_path,
             const std::string& out_prefix, const std::string& dump_path) {
  const ktm::RunConfig config = resolve_config(opts);
  const ktm::TrajectoryCorpus corpus = ktm::load_csv(corpus_path, config.data.csv);

  ktm::SampleDump dump;
  dump.draw_count = config.eval.dump_samples;
  ktm::SampleDump* dump_ptr = dump_path.empty() ? nullptr : &dump;

  const ktm::EvalReport report =
      ktm::run_experiment(corpus, config.eval_config(), config.seed, dump_ptr);

  write_text_file(out_prefix + "_report.json", ktm::report_to_json(report));
  const std::string table = ktm::report_to_text(report);
  write_text_file(out_prefix + "_report.txt", table);
  echo_config(config, out_prefix + "_config.json");
  if (!dump_path.empty()) {
    std::ofstream out(dump_path, std::ios::binary);
    if (!out) throw ktm::IoError("cannot open '" + dump_path + "' for writing");
    out << "method,sample,t,x,y\n";
    for (const auto& row : dump.rows) {
      out << row.method << ',' << row.sample << ',' << format_full(row.t) << ','
          << format_full(row.x) << ',' << format_full(row.y) << '\n';
    }
  }
  std::cout << table;
  if (!report.failures.empty()) {
    std::cerr << "error: " << report.failures.size() << " repetition(s) failed\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory prediction via discrete-Frechet kernel projections"};
  app.require_subcommand(1);

  CommonOptions sim_opts, train_opts, predict_opts, eval_opts;
  std::string sim_out = "corpus.csv";
  std::string train_corpus, train_out = "model.ktm";
  std::string predict_model, predict_query, predict_out = "prediction";
  int predict_samples = 0;
  std::string eval_corpus, eval_out = "eval", eval_dump;

  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic crossing corpus");
  add_common(simulate, sim_opts);
  simulate->add_option("--out", sim_out, "output CSV path");

  CLI::App* train = app.add_subcommand("train", "train a model from a corpus CSV");
  add_common(train, train_opts);
  train->add_option("corpus", train_corpus, "corpus CSV (id,t,x,y)")->required();
  train->add_option("--out", train_out, "output model path");

  CLI::App* predict = app.add_subcommand("predict", "predict futures for one query trajectory");
  add_common(predict, predict_opts);
  predict->add_option("--model", predict_model, "trained model file")->required();
  predict->add_option("--query", predict_query, "query trajectory CSV")->required();
  predict->add_option("--samples", predict_samples, "number of sampled trajectories");
  predict->add_option("--out", predict_out, "output prefix");

  CLI::App* evaluate = app.add_subcommand("eval", "run the repeated train/test experiment");
  add_common(evaluate, eval_opts);
  evaluate->add_option("corpus", eval_corpus, "corpus CSV (id,t,x,y)")->required();
  evaluate->add_option("--out", eval_out, "output prefix");
  evaluate->add_option("--repetitions", "shortcut for --set eval.repetitions=N")
      ->each([&eval_opts](const std::string& v) {
        eval_opts.overrides.push_back("eval.repetitions=" + v);
      });
  evaluate->add_option("--dump-samples", eval_dump,
                       "also dump trajectories (method,sample,t,x,y) to this CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim_opts, sim_out);
    if (train->parsed()) return run_train(train_opts, train_corpus, train_out);
    if (predict->parsed()) {
      return run_predict(predict_opts, predict_model, predict_query, predict_samples,
                         predict_out);
    }
    if (evaluate->parsed()) return run_eval(eval_opts, eval_corpus, eval_out, eval_dump);
  } catch (const ktm::InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ktm::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ktm::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ktm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
