#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "actalign/grid.hpp"

namespace actalign {

// One timestep of end-effector action (or robot state). By convention dims
// 0-2 are position, 3-5 orientation and 6 the gripper.
using ActionVector = std::vector<double>;

// H x D, time-major: row t is the action at timestep t.
using ActionChunk = DenseGrid<struct ActionChunkTag>;

inline constexpr std::size_t kDefaultDims = 7;
inline constexpr std::size_t kGripperDim = 6;

struct Trajectory {
  std::string id;
  std::string instruction;
  std::vector<ActionVector> actions;
  std::optional<std::vector<ActionVector>> states;

  std::size_t length() const noexcept { return actions.size(); }
  std::size_t dims() const noexcept { return actions.empty() ? 0 : actions.front().size(); }

  bool operator==(const Trajectory&) const = default;
};

// Per-dimension affine bounds; [low, high] maps onto [-1, +1].
struct NormStats {
  double p = 1.0;
  std::vector<double> low;
  std::vector<double> high;

  std::size_t dims() const noexcept { return low.size(); }

  bool operator==(const NormStats&) const = default;
};

inline constexpr double kDefaultPercentile = 1.0;
inline constexpr double kDegenerateWidth = 1e-6;

struct DatasetSchema {
  // Expected action dimensionality; inferred from the first record when unset.
  std::optional<std::size_t> dims;
};

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct TrajectoryScan {
  std::vector<Trajectory> trajectories;
  std::vector<LineError> errors;
};

// Validates one decoded record. Throws DataError naming the trajectory id.
Trajectory trajectory_from_json(const nlohmann::json& record, const DatasetSchema& schema = {});
nlohmann::json trajectory_to_json(const Trajectory& trajectory);

// Reads every line; each one lands either in `trajectories` or in `errors`.
// Blank lines are not records and are skipped.
TrajectoryScan scan_trajectories(std::istream& in, DatasetSchema schema = {});

// Strict variant: throws DataError (message lists line numbers) if any line
// fails, or if the file cannot be opened.
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path, DatasetSchema schema = {});
void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories);

// Nearest-rank percentile (1-based rank ceil(p/100 * N)) of unsorted values.
double nearest_rank_percentile(std::vector<double> values, double p);

// low_d / high_d are the p-th and (100 - p)-th nearest-rank percentiles of all
// action values in dimension d. Constant dimensions are widened by
// kDegenerateWidth on each side.
NormStats fit_norm_stats(std::span<const Trajectory> trajectories, double p = kDefaultPercentile);

nlohmann::json norm_stats_to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);

// No clipping: out-of-range values map outside [-1, 1].
ActionChunk normalize_chunk(const ActionChunk& chunk, const NormStats& stats);
ActionChunk denormalize_chunk(const ActionChunk& chunk, const NormStats& stats);

ActionChunk chunk_from_rows(std::span<const ActionVector> rows);
std::vector<ActionVector> chunk_to_rows(const ActionChunk& chunk);

// Non-overlapping windows of `horizon` actions; a trailing partial window is
// dropped.
std::vector<ActionChunk> extract_chunks(const Trajectory& trajectory, std::size_t horizon);
std::vector<ActionChunk> extract_chunks(std::span<const Trajectory> trajectories, std::size_t horizon);

enum class SyntheticProfile { smooth, step, mixed };

SyntheticProfile parse_profile(const std::string& name);
std::string to_string(SyntheticProfile profile);

// Deterministic in `seed`. Every trajectory has exactly `horizon` timesteps
// and carries integrated robot states.
//   smooth: each non-gripper dim is a sum of 1-3 cosines at distinct DCT
//           frequencies k <= 3; gripper held open (+1).
//   step:   piecewise constants with <= 2 change points; gripper toggles
//           between -1 and +1 at <= 2 change points.
//   mixed:  smooth or step per trajectory, chosen by coin flip.
std::vector<Trajectory> gen_synthetic(std::size_t count, std::size_t horizon, std::size_t dims, std::uint64_t seed,
                                      SyntheticProfile profile);

}  // namespace actalign
