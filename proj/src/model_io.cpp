#include "ktm/model_io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "ktm/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "model archives are defined little-endian");

namespace ktm {

namespace {

using nlohmann::json;

constexpr const char* kMagic = "KTMMODEL 1\n";

void append_section(std::string& out, const std::string& name, const std::string& payload) {
  out += "@" + name + " " + std::to_string(payload.size()) + "\n";
  out += payload;
  out += "\n";
}

void append_doubles(std::string& payload, const double* data, std::size_t count) {
  const std::size_t offset = payload.size();
  payload.resize(offset + count * sizeof(double));
  std::memcpy(payload.data() + offset, data, count * sizeof(double));
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

double parse_double(const std::string& token, const std::string& context) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError("model archive: bad number '" + token + "' in " + context);
  }
  return value;
}

struct Reader {
  const std::string& bytes;
  std::size_t pos = 0;

  std::string line() {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw ParseError("model archive: truncated");
    std::string out = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return out;
  }

  std::string section(const std::string& expected) {
    const std::string head = line();
    const std::string prefix = "@" + expected + " ";
    if (head.rfind(prefix, 0) != 0) {
      throw ParseError("model archive: expected section '" + expected + "', got '" + head + "'");
    }
    std::size_t count = 0;
    const std::string digits = head.substr(prefix.size());
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), count);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) {
      throw ParseError("model archive: bad byte count in section '" + expected + "'");
    }
    if (pos + count + 1 > bytes.size()) throw ParseError("model archive: truncated payload");
    std::string payload = bytes.substr(pos, count);
    pos += count;
    if (bytes[pos] != '\n') throw ParseError("model archive: missing section terminator");
    ++pos;
    return payload;
  }
};

json basis_to_json(const TimeBasis& basis) {
  json j;
  j["inducing_times"] = std::vector<double>(
      basis.inducing_times.data(), basis.inducing_times.data() + basis.inducing_times.size());
  j["ell_t"] = basis.ell_t;
  j["lambda1"] = basis.lambda1;
  j["lambda2"] = basis.lambda2;
  return j;
}

TimeBasis basis_from_json(const json& j) {
  TimeBasis basis;
  const auto times = j.at("inducing_times").get<std::vector<double>>();
  basis.inducing_times =
      Eigen::Map<const Eigen::VectorXd>(times.data(), static_cast<Eigen::Index>(times.size()));
  basis.ell_t = j.at("ell_t").get<double>();
  basis.lambda1 = j.at("lambda1").get<double>();
  basis.lambda2 = j.at("lambda2").get<double>();
  return basis;
}

}  // namespace

std::string serialize_model(const KtmModel& model) {
  model.audit();

  json header;
  header["format_version"] = model.format_version;
  header["ell_df"] = model.ell_df;
  header["basis"] = basis_to_json(model.basis);
  header["mdn"] = {{"input_dim", model.mdn_config.input_dim},
                   {"hidden_dim", model.mdn_config.hidden_dim},
                   {"components", model.mdn_config.components},
                   {"output_dim", model.mdn_config.output_dim},
                   {"learning_rate", model.mdn_config.learning_rate},
                   {"batch_size", model.mdn_config.batch_size},
                   {"epochs", model.mdn_config.epochs},
                   {"sigma_floor", model.mdn_config.sigma_floor},
                   {"seed", model.mdn_config.seed}};
  header["representative_sources"] = model.representatives.source_indices;
  header["representative_lengths"] = [&] {
    std::vector<std::size_t> lengths;
    for (const auto& t : model.representatives.trajectories) lengths.push_back(t.size());
    return lengths;
  }();

  std::ostringstream reps;
  reps << "id,t,x,y\n";
  for (std::size_t j = 0; j < model.representatives.size(); ++j) {
    const auto& traj = model.representatives.trajectories[j];
    char id[16];
    std::snprintf(id, sizeof(id), "%06zu", j);
    for (std::size_t n = 0; n < traj.size(); ++n) {
      reps << id << ',' << (n + 1) << ',' << format_double(traj[n].x) << ','
           << format_double(traj[n].y) << '\n';
    }
  }

  std::string params;
  const auto& p = model.params;
  append_doubles(params, p.w_hidden.data(), static_cast<std::size_t>(p.w_hidden.size()));
  append_doubles(params, p.b_hidden.data(), static_cast<std::size_t>(p.b_hidden.size()));
  append_doubles(params, p.w_alpha.data(), static_cast<std::size_t>(p.w_alpha.size()));
  append_doubles(params, p.b_alpha.data(), static_cast<std::size_t>(p.b_alpha.size()));
  append_doubles(params, p.w_mu.data(), static_cast<std::size_t>(p.w_mu.size()));
  append_doubles(params, p.b_mu.data(), static_cast<std::size_t>(p.b_mu.size()));
  append_doubles(params, p.w_sigma.data(), static_cast<std::size_t>(p.w_sigma.size()));
  append_doubles(params, p.b_sigma.data(), static_cast<std::size_t>(p.b_sigma.size()));
  append_doubles(params, p.out_shift.data(), static_cast<std::size_t>(p.out_shift.size()));
  append_doubles(params, p.out_scale.data(), static_cast<std::size_t>(p.out_scale.size()));

  std::string out = kMagic;
  append_section(out, "header", header.dump());
  append_section(out, "representatives", reps.str());
  append_section(out, "params", params);
  out += "@end 0\n";
  return out;
}

KtmModel deserialize_model(const std::string& bytes) {
  if (bytes.rfind(kMagic, 0) != 0) {
    throw ParseError("model archive: bad magic; expected a KTMMODEL 1 file");
  }
  Reader reader{bytes, std::strlen(kMagic)};

  const json header = json::parse(reader.section("header"));
  KtmModel model;
  model.format_version = header.at("format_version").get<int>();
  if (model.format_version != 1) {
    throw ParseError("model archive: unsupported format_version " +
                     std::to_string(model.format_version));
  }
  model.ell_df = header.at("ell_df").get<double>();
  model.basis = basis_from_json(header.at("basis"));
  const json& mdn = header.at("mdn");
  model.mdn_config.input_dim = mdn.at("input_dim").get<int>();
  model.mdn_config.hidden_dim = mdn.at("hidden_dim").get<int>();
  model.mdn_config.components = mdn.at("components").get<int>();
  model.mdn_config.output_dim = mdn.at("output_dim").get<int>();
  model.mdn_config.learning_rate = mdn.at("learning_rate").get<double>();
  model.mdn_config.batch_size = mdn.at("batch_size").get<int>();
  model.mdn_config.epochs = mdn.at("epochs").get<int>();
  model.mdn_config.sigma_floor = mdn.at("sigma_floor").get<double>();
  model.mdn_config.seed = mdn.at("seed").get<std::uint64_t>();
  model.representatives.source_indices =
      header.at("representative_sources").get<std::vector<std::size_t>>();
  const auto lengths = header.at("representative_lengths").get<std::vector<std::size_t>>();

  // Representative CSV block: contiguous rows per id, written in set order.
  {
    std::istringstream reps(reader.section("representatives"));
    std::string line;
    if (!std::getline(reps, line) || line != "id,t,x,y") {
      throw ParseError("model archive: representatives block has a bad header");
    }
    model.representatives.trajectories.assign(lengths.size(), DiscreteTrajectory{});
    std::size_t current = 0;
    std::string last_id;
    while (std::getline(reps, line)) {
      if (line.empty()) continue;
      std::stringstream row(line);
      std::string id, t, x, y;
      if (!std::getline(row, id, ',') || !std::getline(row, t, ',') ||
          !std::getline(row, x, ',') || !std::getline(row, y, ',')) {
        throw ParseError("model archive: malformed representative row '" + line + "'");
      }
      if (id != last_id) {
        if (!last_id.empty()) ++current;
        last_id = id;
      }
      if (current >= lengths.size()) {
        throw ParseError("model archive: more representative blocks than declared");
      }
      model.representatives.trajectories[current].points.push_back(
          Point{parse_double(x, "representatives"), parse_double(y, "representatives")});
    }
    for (std::size_t j = 0; j < lengths.size(); ++j) {
      if (model.representatives.trajectories[j].size() != lengths[j]) {
        throw ParseError("model archive: representative " + std::to_string(j) +
                         " has wrong length");
      }
    }
  }

  // Parameter block.
  {
    const std::string payload = reader.section("params");
    const int h = model.mdn_config.hidden_dim;
    const int i = model.mdn_config.input_dim;
    const int r = model.mdn_config.components;
    const int d = model.mdn_config.output_dim;
    auto& p = model.params;
    p.w_hidden.resize(h, i);
    p.b_hidden.resize(h);
    p.w_alpha.resize(r, h);
    p.b_alpha.resize(r);
    p.w_mu.resize(static_cast<Eigen::Index>(r) * d, h);
    p.b_mu.resize(static_cast<Eigen::Index>(r) * d);
    p.w_sigma.resize(static_cast<Eigen::Index>(r) * d, h);
    p.b_sigma.resize(static_cast<Eigen::Index>(r) * d);
    p.out_shift.resize(d);
    p.out_scale.resize(d);

    const std::size_t expected =
        sizeof(double) *
        (static_cast<std::size_t>(p.w_hidden.size()) + p.b_hidden.size() + p.w_alpha.size() +
         p.b_alpha.size() + p.w_mu.size() + p.b_mu.size() + p.w_sigma.size() +
         p.b_sigma.size() + p.out_shift.size() + p.out_scale.size());
    if (payload.size() != expected) {
      throw ParseError("model archive: params block has " + std::to_string(payload.size()) +
                       " bytes, expected " + std::to_string(expected));
    }
    std::size_t offset = 0;
    auto take = [&](double* dst, std::size_t count) {
      std::memcpy(dst, payload.data() + offset, count * sizeof(double));
      offset += count * sizeof(double);
    };
    take(p.w_hidden.data(), static_cast<std::size_t>(p.w_hidden.size()));
    take(p.b_hidden.data(), static_cast<std::size_t>(p.b_hidden.size()));
    take(p.w_alpha.data(), static_cast<std::size_t>(p.w_alpha.size()));
    take(p.b_alpha.data(), static_cast<std::size_t>(p.b_alpha.size()));
    take(p.w_mu.data(), static_cast<std::size_t>(p.w_mu.size()));
    take(p.b_mu.data(), static_cast<std::size_t>(p.b_mu.size()));
    take(p.w_sigma.data(), static_cast<std::size_t>(p.w_sigma.size()));
    take(p.b_sigma.data(), static_cast<std::size_t>(p.b_sigma.size()));
    take(p.out_shift.data(), static_cast<std::size_t>(p.out_shift.size()));
    take(p.out_scale.data(), static_cast<std::size_t>(p.out_scale.size()));
  }

  const std::string tail = reader.line();
  if (tail != "@end 0") throw ParseError("model archive: missing end marker");
  model.audit();
  return model;
}

void save_model(const KtmModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const std::string bytes = serialize_model(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out.good()) throw IoError("failed while writing '" + path + "'");
}

KtmModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace ktm
