#ifndef KTM_CONFIG_HPP
#define KTM_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ktm/data.hpp"
#include "ktm/eval.hpp"
#include "ktm/pipeline.hpp"

namespace ktm {

/// The full hyperparameter tree backing every CLI command. Loadable from a
/// JSON file; unknown keys are rejected and constraint violations report the
/// offending path.
struct RunConfig {
  std::uint64_t seed = 12345;

  struct Kernel {
    double ell_df = 100.0;
    std::size_t representative_step = 2;
  } kernel;

  struct Basis {
    double spacing = 5.0;
    double ell_t = 10.0;
    double lambda1 = 1e-3;
    double lambda2 = 1e3;
  } basis;

  struct Mdn {
    int hidden_dim = 64;
    int components = 4;
    double learning_rate = 1e-3;
    int batch_size = 32;
    int epochs = 80;
    double sigma_floor = 1e-6;
  } mdn;

  struct Data {
    std::string segmentation = "1:1";
    CsvSchema csv;
    SimulatorConfig simulator;
  } data;

  struct Eval {
    int horizon = 20;
    int repetitions = 5;
    double test_fraction = 0.2;
    bool motion_filter_enabled = false;
    double motion_filter_min_displacement = 20.0;
    int motion_filter_window = 20;
    std::string ktm_c_selection = "df";  // "df" | "ed"
    int dump_samples = 50;               // draws per dumped query
  } eval;

  void validate() const;

  KtmTrainConfig train_config() const;
  EvalConfig eval_config() const;

  /// Canonical JSON echo of every resolved value; reloading it reproduces
  /// this config exactly.
  std::string to_json() const;

  /// FNV-1a hash of the canonical echo, as fixed-width hex.
  std::string hash() const;
};

/// Built-in defaults overlaid with the (optional) config file.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text, const std::string& source_name);

/// Applies a dotted-path override like "kernel.ell_df=50" or
/// "data.segmentation=1:3". Values parse as JSON first, bare strings second.
void apply_override(RunConfig& config, const std::string& assignment);

}  // namespace ktm

#endif  // KTM_CONFIG_HPP
