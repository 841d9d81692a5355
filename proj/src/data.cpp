#include "ktm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "ktm/errors.hpp"
#include "ktm/rng.hpp"

namespace ktm {

namespace {

struct Vec2 {
  double x, y;
};

// Cubic Bezier point and tangent.
Vec2 bezier(const Vec2 p[4], double s) {
  const double u = 1.0 - s;
  const double b0 = u * u * u, b1 = 3 * u * u * s, b2 = 3 * u * s * s, b3 = s * s * s;
  return {p[0].x * b0 + p[1].x * b1 + p[2].x * b2 + p[3].x * b3,
          p[0].y * b0 + p[1].y * b1 + p[2].y * b2 + p[3].y * b3};
}

Vec2 bezier_tangent(const Vec2 p[4], double s) {
  const double u = 1.0 - s;
  return {3 * u * u * (p[1].x - p[0].x) + 6 * u * s * (p[2].x - p[1].x) +
              3 * s * s * (p[3].x - p[2].x),
          3 * u * u * (p[1].y - p[0].y) + 6 * u * s * (p[2].y - p[1].y) +
              3 * s * s * (p[3].y - p[2].y)};
}

std::string zero_pad(int value, int width) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, value);
  return buf;
}

double parse_number(const std::string& token, std::size_t line_no, const std::string& column) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + token +
                     "' as a finite number for column '" + column + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void SimulatorConfig::validate() const {
  if (count < 1) throw InvalidConfig("simulator: count must be >= 1");
  if (!(arena_size > 0.0)) throw InvalidConfig("simulator: arena_size must be positive");
  if (waypoint_noise < 0.0) throw InvalidConfig("simulator: waypoint_noise must be >= 0");
  if (lateral_std < 0.0) throw InvalidConfig("simulator: lateral_std must be >= 0");
  if (min_waypoints < 2) throw InvalidConfig("simulator: min_waypoints must be >= 2");
  if (max_waypoints < min_waypoints) {
    throw InvalidConfig("simulator: max_waypoints must be >= min_waypoints");
  }
}

TrajectoryCorpus simulate_crossings(const SimulatorConfig& config, std::uint64_t seed) {
  config.validate();
  const double a = config.arena_size;

  // Family center-lines: S-shaped arcs between opposite corners whose middle
  // sections pass near the arena center heading mostly upward, so the late
  // observed segments of the two families look alike.
  const Vec2 family1[4] = {{0.05 * a, 0.05 * a}, {0.70 * a, 0.10 * a},
                           {0.30 * a, 0.90 * a}, {0.95 * a, 0.95 * a}};
  const Vec2 family2[4] = {{0.95 * a, 0.05 * a}, {0.30 * a, 0.10 * a},
                           {0.70 * a, 0.90 * a}, {0.05 * a, 0.95 * a}};

  Rng rng(seed);
  TrajectoryCorpus corpus;
  corpus.time_step = 1.0;

  const int n_family1 = (config.count + 1) / 2;
  // Draw order per trajectory: waypoint count, lateral offset, then x/y
  // jitter per waypoint.
  auto emit = [&](const Vec2 control[4], const std::string& prefix, int index) {
    const int span = config.max_waypoints - config.min_waypoints + 1;
    const int len = config.min_waypoints +
                    static_cast<int>(rng.uniform_index(static_cast<std::size_t>(span)));
    const double offset = config.lateral_std * rng.normal();
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(len));
    for (int n = 0; n < len; ++n) {
      const double s = static_cast<double>(n) / static_cast<double>(len - 1);
      const Vec2 c = bezier(control, s);
      Vec2 tan = bezier_tangent(control, s);
      const double norm = std::sqrt(tan.x * tan.x + tan.y * tan.y);
      tan.x /= norm;
      tan.y /= norm;
      const double jx = config.waypoint_noise * rng.normal();
      const double jy = config.waypoint_noise * rng.normal();
      pts.push_back(Point{c.x - tan.y * offset + jx, c.y + tan.x * offset + jy});
    }
    corpus.entries.push_back(CorpusEntry{prefix + zero_pad(index, 4),
                                         DiscreteTrajectory(std::move(pts))});
  };

  for (int i = 0; i < n_family1; ++i) emit(family1, "f1_", i);
  for (int i = 0; i < config.count - n_family1; ++i) emit(family2, "f2_", i);
  return corpus;
}

TrajectoryCorpus load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return load_csv_stream(in, schema, path);
}

TrajectoryCorpus load_csv_stream(std::istream& in, const CsvSchema& schema,
                                 const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) {
    std::cerr << "warning: " << source_name << " is empty; returning an empty corpus\n";
    return {};
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv_line(line);
  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ParseError(source_name + ": header is missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = column_of(schema.id_col);
  const std::size_t t_col = column_of(schema.t_col);
  const std::size_t x_col = column_of(schema.x_col);
  const std::size_t y_col = column_of(schema.y_col);

  struct Row {
    double t;
    Point p;
    std::size_t line;
  };
  std::map<std::string, std::vector<Row>> grouped;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::size_t needed = std::max({id_col, t_col, x_col, y_col}) + 1;
    if (fields.size() < needed) {
      throw ParseError("line " + std::to_string(line_no) + ": expected at least " +
                       std::to_string(needed) + " fields, got " + std::to_string(fields.size()));
    }
    Row row;
    row.t = parse_number(fields[t_col], line_no, schema.t_col);
    row.p.x = parse_number(fields[x_col], line_no, schema.x_col);
    row.p.y = parse_number(fields[y_col], line_no, schema.y_col);
    row.line = line_no;
    grouped[fields[id_col]].push_back(row);
  }

  TrajectoryCorpus corpus;
  for (auto& [id, rows] : grouped) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.t < b.t; });
    for (std::size_t k = 1; k < rows.size(); ++k) {
      if (rows[k].t == rows[k - 1].t) {
        throw ParseError("line " + std::to_string(rows[k].line) + ": duplicate timestamp " +
                         std::to_string(rows[k].t) + " for id '" + id + "'");
      }
    }
    if (rows.size() < 2) {
      throw ParseError(source_name + ": id '" + id + "' has fewer than 2 waypoints");
    }
    std::vector<Point> pts;
    pts.reserve(rows.size());
    for (const auto& r : rows) pts.push_back(r.p);
    corpus.entries.push_back(CorpusEntry{id, DiscreteTrajectory(std::move(pts))});
  }
  return corpus;
}

void write_csv(const TrajectoryCorpus& corpus, std::ostream& out) {
  out << "id,t,x,y\n";
  char buf[64];
  for (const auto& entry : corpus.entries) {
    for (std::size_t n = 0; n < entry.trajectory.size(); ++n) {
      out << entry.id << ',' << (n + 1) << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", entry.trajectory[n].x);
      out << buf << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", entry.trajectory[n].y);
      out << buf << '\n';
    }
  }
}

void write_csv_file(const TrajectoryCorpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(corpus, out);
  if (!out.good()) throw IoError("failed while writing '" + path + "'");
}

SplitRatio parse_ratio(const std::string& text) {
  if (text == "1:3") return SplitRatio::kOneToThree;
  if (text == "1:1") return SplitRatio::kOneToOne;
  if (text == "3:1") return SplitRatio::kThreeToOne;
  throw InvalidConfig("segmentation ratio must be one of 1:3, 1:1, 3:1; got '" + text + "'");
}

std::string ratio_to_string(SplitRatio ratio) {
  switch (ratio) {
    case SplitRatio::kOneToThree: return "1:3";
    case SplitRatio::kOneToOne: return "1:1";
    case SplitRatio::kThreeToOne: return "3:1";
  }
  return "?";
}

double observed_fraction(SplitRatio ratio) {
  switch (ratio) {
    case SplitRatio::kOneToThree: return 0.25;
    case SplitRatio::kOneToOne: return 0.5;
    case SplitRatio::kThreeToOne: return 0.75;
  }
  return 0.5;
}

SegmentResult segment(const TrajectoryCorpus& corpus, SplitRatio ratio) {
  const double fraction = observed_fraction(ratio);
  SegmentResult result;
  for (const auto& entry : corpus.entries) {
    const auto total = entry.trajectory.size();
    // Round half up on the observed length.
    const auto observed_len =
        static_cast<std::size_t>(std::floor(static_cast<double>(total) * fraction + 0.5));
    if (observed_len < 1 || observed_len >= total) {
      ++result.skipped;
      continue;
    }
    TrainingPair pair;
    pair.observed.points.assign(entry.trajectory.points.begin(),
                                entry.trajectory.points.begin() + observed_len);
    pair.target.points.assign(entry.trajectory.points.begin() + observed_len,
                              entry.trajectory.points.end());
    result.pairs.push_back(std::move(pair));
  }
  if (result.skipped > 0) {
    std::cerr << "warning: segment skipped " << result.skipped
              << " trajectories too short for ratio " << ratio_to_string(ratio) << "\n";
  }
  return result;
}

IndexSplit split_train_test(std::size_t n_items,
                            const std::vector<std::size_t>& representative_indices,
                            double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
    throw InvalidConfig("split: test_fraction must lie in (0, 1)");
  }
  std::vector<bool> is_rep(n_items, false);
  for (std::size_t idx : representative_indices) {
    if (idx >= n_items) throw InvalidInput("split: representative index out of range");
    is_rep[idx] = true;
  }
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < n_items; ++i) {
    if (!is_rep[i]) pool.push_back(i);
  }
  const auto requested =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(pool.size())));
  if (requested < 1 || requested > pool.size()) {
    throw InvalidConfig("split: non-representative pool of " + std::to_string(pool.size()) +
                        " cannot supply " + std::to_string(requested) + " test examples");
  }

  Rng rng(seed);
  for (std::size_t k = 0; k < requested; ++k) {
    const std::size_t j = k + rng.uniform_index(pool.size() - k);
    std::swap(pool[k], pool[j]);
  }
  IndexSplit split;
  split.test.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(requested));
  std::sort(split.test.begin(), split.test.end());

  std::vector<bool> in_test(n_items, false);
  for (std::size_t idx : split.test) in_test[idx] = true;
  for (std::size_t i = 0; i < n_items; ++i) {
    if (!in_test[i]) split.train.push_back(i);
  }
  return split;
}

std::vector<TrainingPair> motion_filter(const std::vector<TrainingPair>& pairs,
                                        double min_displacement, int window) {
  if (min_displacement <= 0.0) return pairs;
  if (window < 1) throw InvalidConfig("motion_filter: window must be >= 1");
  std::vector<TrainingPair> kept;
  for (const auto& pair : pairs) {
    if (pair.target.empty()) continue;
    const std::size_t last =
        std::min(pair.target.size() - 1, static_cast<std::size_t>(window));
    const double displacement = point_distance(pair.target[0], pair.target[last]);
    if (displacement > min_displacement) kept.push_back(pair);
  }
  return kept;
}

}  // namespace ktm
