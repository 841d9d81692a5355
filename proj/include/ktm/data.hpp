#ifndef KTM_DATA_HPP
#define KTM_DATA_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ktm/trajectory.hpp"

namespace ktm {

/// An observed prefix and the continuation used as prediction target.
struct TrainingPair {
  DiscreteTrajectory observed;
  DiscreteTrajectory target;
};

struct CorpusEntry {
  std::string id;
  DiscreteTrajectory trajectory;
};

/// Identified trajectories, ordered by id; one time step per waypoint.
struct TrajectoryCorpus {
  std::vector<CorpusEntry> entries;
  double time_step = 1.0;

  std::size_t size() const { return entries.size(); }
};

/// Column names mapping a CSV file onto (id, t, x, y).
struct CsvSchema {
  std::string id_col = "id";
  std::string t_col = "t";
  std::string x_col = "x";
  std::string y_col = "y";
};

struct SimulatorConfig {
  int count = 600;              // trajectories, split evenly between the families
  double waypoint_noise = 0.15; // per-coordinate jitter std, meters
  double lateral_std = 1.0;     // per-trajectory offset std, meters
  int min_waypoints = 20;
  int max_waypoints = 40;
  double arena_size = 20.0;     // square arena side, meters

  void validate() const;
};

/// Two families of smooth crossing paths over a square arena: lower-left to
/// upper-right and lower-right to upper-left. Each trajectory follows its
/// family center-line with a per-trajectory lateral offset and per-waypoint
/// jitter. Family-1 entries come first; ids are "f1_0000", "f2_0000", ...
/// and sort in generation order. Bitwise reproducible for a fixed seed.
TrajectoryCorpus simulate_crossings(const SimulatorConfig& config, std::uint64_t seed);

/// Reads a corpus from CSV. Rows are grouped by id (ids ordered
/// lexicographically), ordered by t within each id; duplicate (id, t) rows,
/// unparsable numbers, and missing columns raise ParseError with the line
/// number. An empty file yields an empty corpus and a warning on stderr.
TrajectoryCorpus load_csv(const std::string& path, const CsvSchema& schema = {});
TrajectoryCorpus load_csv_stream(std::istream& in, const CsvSchema& schema = {},
                                 const std::string& source_name = "<stream>");

/// Writes the canonical `id,t,x,y` schema (t = 1..T, coordinates with
/// round-trip precision).
void write_csv(const TrajectoryCorpus& corpus, std::ostream& out);
void write_csv_file(const TrajectoryCorpus& corpus, const std::string& path);

/// Observed:target segmentation ratios.
enum class SplitRatio { kOneToThree, kOneToOne, kThreeToOne };

SplitRatio parse_ratio(const std::string& text);        // "1:3" | "1:1" | "3:1"
std::string ratio_to_string(SplitRatio ratio);
double observed_fraction(SplitRatio ratio);

struct SegmentResult {
  std::vector<TrainingPair> pairs;
  std::size_t skipped = 0;  // trajectories too short to yield both parts
};

/// Splits every trajectory at round-half-up(T * observed_fraction); observed
/// takes the first part and target the remainder. Concatenating the two
/// reproduces the source exactly.
SegmentResult segment(const TrajectoryCorpus& corpus, SplitRatio ratio);

struct IndexSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Draws round(test_fraction * pool) test indices uniformly without
/// replacement from the items NOT in representative_indices; everything else
/// trains. Both lists come back sorted. Deterministic under the seed.
IndexSplit split_train_test(std::size_t n_items,
                            const std::vector<std::size_t>& representative_indices,
                            double test_fraction, std::uint64_t seed);

/// Drops pairs whose target displaces at most min_displacement over the
/// first `window` steps (strict "more than" keeps a pair). A non-positive
/// threshold disables the filter.
std::vector<TrainingPair> motion_filter(const std::vector<TrainingPair>& pairs,
                                        double min_displacement, int window);

}  // namespace ktm

#endif  // KTM_DATA_HPP
