#include "ktm/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ktm/errors.hpp"

namespace ktm {

namespace {

using nlohmann::json;

json to_tree(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["kernel"] = {{"ell_df", c.kernel.ell_df},
                 {"representative_step", c.kernel.representative_step}};
  j["basis"] = {{"spacing", c.basis.spacing},
                {"ell_t", c.basis.ell_t},
                {"lambda1", c.basis.lambda1},
                {"lambda2", c.basis.lambda2}};
  j["mdn"] = {{"hidden_dim", c.mdn.hidden_dim},
              {"components", c.mdn.components},
              {"learning_rate", c.mdn.learning_rate},
              {"batch_size", c.mdn.batch_size},
              {"epochs", c.mdn.epochs},
              {"sigma_floor", c.mdn.sigma_floor}};
  j["data"] = {{"segmentation", c.data.segmentation},
               {"csv",
                {{"id_col", c.data.csv.id_col},
                 {"t_col", c.data.csv.t_col},
                 {"x_col", c.data.csv.x_col},
                 {"y_col", c.data.csv.y_col}}},
               {"simulator",
                {{"count", c.data.simulator.count},
                 {"waypoint_noise", c.data.simulator.waypoint_noise},
                 {"lateral_std", c.data.simulator.lateral_std},
                 {"min_waypoints", c.data.simulator.min_waypoints},
                 {"max_waypoints", c.data.simulator.max_waypoints},
                 {"arena_size", c.data.simulator.arena_size}}}};
  j["eval"] = {{"horizon", c.eval.horizon},
               {"repetitions", c.eval.repetitions},
               {"test_fraction", c.eval.test_fraction},
               {"motion_filter",
                {{"enabled", c.eval.motion_filter_enabled},
                 {"min_displacement", c.eval.motion_filter_min_displacement},
                 {"window", c.eval.motion_filter_window}}},
               {"ktm_c_selection", c.eval.ktm_c_selection},
               {"dump_samples", c.eval.dump_samples}};
  return j;
}

// Reads every field back from the tree, complaining about unknown keys so
// typos do not silently fall back to defaults.
void check_known_keys(const json& node, const json& reference, const std::string& path) {
  if (!node.is_object()) return;
  for (const auto& [key, value] : node.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!reference.contains(key)) {
      throw InvalidConfig("config: unknown key '" + here + "'");
    }
    if (value.is_object()) check_known_keys(value, reference.at(key), here);
  }
}

template <typename T>
void read_field(const json& node, const std::string& key, const std::string& path, T& out) {
  if (!node.contains(key)) return;
  try {
    out = node.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidConfig("config: '" + path + "' has the wrong type");
  }
}

RunConfig from_tree(const json& j) {
  RunConfig c;
  check_known_keys(j, to_tree(c), "");
  read_field(j, "seed", "seed", c.seed);
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    read_field(k, "ell_df", "kernel.ell_df", c.kernel.ell_df);
    read_field(k, "representative_step", "kernel.representative_step",
               c.kernel.representative_step);
  }
  if (j.contains("basis")) {
    const auto& b = j.at("basis");
    read_field(b, "spacing", "basis.spacing", c.basis.spacing);
    read_field(b, "ell_t", "basis.ell_t", c.basis.ell_t);
    read_field(b, "lambda1", "basis.lambda1", c.basis.lambda1);
    read_field(b, "lambda2", "basis.lambda2", c.basis.lambda2);
  }
  if (j.contains("mdn")) {
    const auto& m = j.at("mdn");
    read_field(m, "hidden_dim", "mdn.hidden_dim", c.mdn.hidden_dim);
    read_field(m, "components", "mdn.components", c.mdn.components);
    read_field(m, "learning_rate", "mdn.learning_rate", c.mdn.learning_rate);
    read_field(m, "batch_size", "mdn.batch_size", c.mdn.batch_size);
    read_field(m, "epochs", "mdn.epochs", c.mdn.epochs);
    read_field(m, "sigma_floor", "mdn.sigma_floor", c.mdn.sigma_floor);
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    read_field(d, "segmentation", "data.segmentation", c.data.segmentation);
    if (d.contains("csv")) {
      const auto& v = d.at("csv");
      read_field(v, "id_col", "data.csv.id_col", c.data.csv.id_col);
      read_field(v, "t_col", "data.csv.t_col", c.data.csv.t_col);
      read_field(v, "x_col", "data.csv.x_col", c.data.csv.x_col);
      read_field(v, "y_col", "data.csv.y_col", c.data.csv.y_col);
    }
    if (d.contains("simulator")) {
      const auto& s = d.at("simulator");
      read_field(s, "count", "data.simulator.count", c.data.simulator.count);
      read_field(s, "waypoint_noise", "data.simulator.waypoint_noise",
                 c.data.simulator.waypoint_noise);
      read_field(s, "lateral_std", "data.simulator.lateral_std", c.data.simulator.lateral_std);
      read_field(s, "min_waypoints", "data.simulator.min_waypoints",
                 c.data.simulator.min_waypoints);
      read_field(s, "max_waypoints", "data.simulator.max_waypoints",
                 c.data.simulator.max_waypoints);
      read_field(s, "arena_size", "data.simulator.arena_size", c.data.simulator.arena_size);
    }
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    read_field(e, "horizon", "eval.horizon", c.eval.horizon);
    read_field(e, "repetitions", "eval.repetitions", c.eval.repetitions);
    read_field(e, "test_fraction", "eval.test_fraction", c.eval.test_fraction);
    if (e.contains("motion_filter")) {
      const auto& m = e.at("motion_filter");
      read_field(m, "enabled", "eval.motion_filter.enabled", c.eval.motion_filter_enabled);
      read_field(m, "min_displacement", "eval.motion_filter.min_displacement",
                 c.eval.motion_filter_min_displacement);
      read_field(m, "window", "eval.motion_filter.window", c.eval.motion_filter_window);
    }
    read_field(e, "ktm_c_selection", "eval.ktm_c_selection", c.eval.ktm_c_selection);
    read_field(e, "dump_samples", "eval.dump_samples", c.eval.dump_samples);
  }
  return c;
}

}  // namespace

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& message) {
    if (!ok) throw InvalidConfig("config: " + message);
  };
  require(kernel.ell_df > 0.0, "kernel.ell_df must be > 0");
  require(kernel.representative_step >= 1, "kernel.representative_step must be >= 1");
  require(basis.spacing > 0.0, "basis.spacing must be > 0");
  require(basis.ell_t > 0.0, "basis.ell_t must be > 0");
  require(basis.lambda1 > 0.0, "basis.lambda1 must be > 0");
  require(basis.lambda2 >= 0.0, "basis.lambda2 must be >= 0");
  require(mdn.hidden_dim >= 1, "mdn.hidden_dim must be >= 1");
  require(mdn.components >= 1, "mdn.components must be >= 1");
  require(mdn.learning_rate >= 0.0, "mdn.learning_rate must be >= 0");
  require(mdn.batch_size >= 1, "mdn.batch_size must be >= 1");
  require(mdn.epochs >= 1, "mdn.epochs must be >= 1");
  require(mdn.sigma_floor > 0.0, "mdn.sigma_floor must be > 0");
  parse_ratio(data.segmentation);  // throws with its own message
  require(!data.csv.id_col.empty() && !data.csv.t_col.empty() && !data.csv.x_col.empty() &&
              !data.csv.y_col.empty(),
          "data.csv column names must be non-empty");
  data.simulator.validate();
  require(eval.horizon >= 1, "eval.horizon must be >= 1");
  require(eval.repetitions >= 1, "eval.repetitions must be >= 1");
  require(eval.test_fraction > 0.0 && eval.test_fraction < 1.0,
          "eval.test_fraction must lie in (0, 1)");
  require(eval.motion_filter_window >= 1, "eval.motion_filter.window must be >= 1");
  require(eval.ktm_c_selection == "df" || eval.ktm_c_selection == "ed",
          "eval.ktm_c_selection must be 'df' or 'ed'");
  require(eval.dump_samples >= 0, "eval.dump_samples must be >= 0");
}

KtmTrainConfig RunConfig::train_config() const {
  KtmTrainConfig t;
  t.ell_df = kernel.ell_df;
  t.representative_step = kernel.representative_step;
  t.basis_spacing = basis.spacing;
  t.ell_t = basis.ell_t;
  t.lambda1 = basis.lambda1;
  t.lambda2 = basis.lambda2;
  t.mdn.hidden_dim = mdn.hidden_dim;
  t.mdn.components = mdn.components;
  t.mdn.learning_rate = mdn.learning_rate;
  t.mdn.batch_size = mdn.batch_size;
  t.mdn.epochs = mdn.epochs;
  t.mdn.sigma_floor = mdn.sigma_floor;
  t.seed = seed;
  return t;
}

EvalConfig RunConfig::eval_config() const {
  EvalConfig e;
  e.ratio = parse_ratio(data.segmentation);
  e.test_fraction = eval.test_fraction;
  e.horizon = eval.horizon;
  e.repetitions = eval.repetitions;
  e.motion_filter.enabled = eval.motion_filter_enabled;
  e.motion_filter.min_displacement = eval.motion_filter_min_displacement;
  e.motion_filter.window = eval.motion_filter_window;
  e.ktm_c_selection = eval.ktm_c_selection == "ed" ? ClosenessMetric::kEndpoint
                                                   : ClosenessMetric::kFrechet;
  e.train = train_config();
  e.config_hash = hash();
  return e;
}

std::string RunConfig::to_json() const {
  return to_tree(*this).dump(2) + "\n";
}

std::string RunConfig::hash() const {
  const std::string text = to_json();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char byte : text) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const std::string& json_text, const std::string& source_name) {
  json tree;
  try {
    tree = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(source_name + ": " + e.what());
  }
  RunConfig config = from_tree(tree);
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InvalidConfig("override must look like section.key=value, got '" + assignment + "'");
  }
  std::string pointer = "/" + assignment.substr(0, eq);
  for (auto& ch : pointer) {
    if (ch == '.') ch = '/';
  }
  const std::string raw = assignment.substr(eq + 1);

  json tree = json::parse(config.to_json());
  const json::json_pointer where(pointer);
  if (!tree.contains(where)) {
    throw InvalidConfig("override targets unknown key '" + assignment.substr(0, eq) + "'");
  }
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // bare strings like 1:3
  }
  tree[where] = value;
  RunConfig updated = from_tree(tree);
  updated.validate();
  config = updated;
}

}  // namespace ktm
