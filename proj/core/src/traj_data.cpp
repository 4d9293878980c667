#include "actalign/traj_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "actalign/error.hpp"
#include "actalign/rng.hpp"

namespace actalign {

namespace {

std::vector<ActionVector> parse_vectors(const nlohmann::json& j, const char* field, const std::string& id,
                                        std::optional<std::size_t>& dims) {
  if (!j.is_array()) throw DataError("trajectory '" + id + "': field '" + field + "' must be an array");
  std::vector<ActionVector> rows;
  rows.reserve(j.size());
  for (std::size_t t = 0; t < j.size(); ++t) {
    const auto& row = j[t];
    if (!row.is_array()) {
      throw DataError("trajectory '" + id + "': " + field + "[" + std::to_string(t) + "] is not an array");
    }
    ActionVector v;
    v.reserve(row.size());
    for (const auto& x : row) {
      if (!x.is_number()) {
        throw DataError("trajectory '" + id + "': " + field + "[" + std::to_string(t) + "] has a non-numeric entry");
      }
      const double value = x.get<double>();
      if (!std::isfinite(value)) {
        throw DataError("trajectory '" + id + "': " + field + "[" + std::to_string(t) + "] has a non-finite entry");
      }
      v.push_back(value);
    }
    if (!dims) dims = v.size();
    if (v.size() != *dims || v.empty()) {
      throw DataError("trajectory '" + id + "': " + field + "[" + std::to_string(t) + "] has dimension " +
                      std::to_string(v.size()) + ", expected " + std::to_string(*dims));
    }
    rows.push_back(std::move(v));
  }
  return rows;
}

const std::array<const char*, 8> kInstructions = {
    "pick up the cup from the table",
    "move the orange cloth to the top of the right burner",
    "open the top drawer",
    "push the blue block to the left",
    "put the spoon in the pot",
    "close the microwave door",
    "stack the red block on the green block",
    "wipe the table with the sponge",
};

}  // namespace

Trajectory trajectory_from_json(const nlohmann::json& record, const DatasetSchema& schema) {
  if (!record.is_object()) throw DataError("record is not a JSON object");
  if (!record.contains("id") || !record["id"].is_string()) throw DataError("record has no string 'id'");
  Trajectory traj;
  traj.id = record["id"].get<std::string>();
  if (!record.contains("instruction") || !record["instruction"].is_string()) {
    throw DataError("trajectory '" + traj.id + "': missing string 'instruction'");
  }
  traj.instruction = record["instruction"].get<std::string>();
  if (!record.contains("actions")) throw DataError("trajectory '" + traj.id + "': missing 'actions'");

  std::optional<std::size_t> dims = schema.dims;
  traj.actions = parse_vectors(record["actions"], "actions", traj.id, dims);
  if (traj.actions.empty()) throw DataError("trajectory '" + traj.id + "': 'actions' is empty");

  if (record.contains("states") && !record["states"].is_null()) {
    auto states = parse_vectors(record["states"], "states", traj.id, dims);
    if (states.size() != traj.actions.size()) {
      throw DataError("trajectory '" + traj.id + "': states length " + std::to_string(states.size()) +
                      " does not match actions length " + std::to_string(traj.actions.size()));
    }
    traj.states = std::move(states);
  }
  return traj;
}

nlohmann::json trajectory_to_json(const Trajectory& trajectory) {
  nlohmann::json j;
  j["id"] = trajectory.id;
  j["instruction"] = trajectory.instruction;
  j["actions"] = trajectory.actions;
  if (trajectory.states) j["states"] = *trajectory.states;
  return j;
}

TrajectoryScan scan_trajectories(std::istream& in, DatasetSchema schema) {
  TrajectoryScan scan;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      auto traj = trajectory_from_json(record, schema);
      // A file holds a single D: the first good record fixes it.
      if (!schema.dims) schema.dims = traj.dims();
      scan.trajectories.push_back(std::move(traj));
    } catch (const nlohmann::json::parse_error& e) {
      scan.errors.push_back({line_no, std::string("invalid JSON: ") + e.what()});
    } catch (const DataError& e) {
      scan.errors.push_back({line_no, e.what()});
    }
  }
  return scan;
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path, DatasetSchema schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trajectory file " + path.string());
  auto scan = scan_trajectories(in, schema);
  if (!scan.errors.empty()) {
    std::ostringstream msg;
    msg << path.string() << ": " << scan.errors.size() << " malformed line(s)";
    for (const auto& e : scan.errors) msg << "; line " << e.line << ": " << e.message;
    throw DataError(msg.str());
  }
  return std::move(scan.trajectories);
}

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories) {
  for (const auto& t : trajectories) out << trajectory_to_json(t).dump() << '\n';
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const double r = p / 100.0 * n;
  // Absorb representation error so that exact integer ranks stay exact.
  auto rank = static_cast<std::size_t>(std::ceil(r - 1e-9 * std::max(1.0, r)));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

NormStats fit_norm_stats(std::span<const Trajectory> trajectories, double p) {
  if (!(p > 0.0 && p < 50.0)) throw ConfigError("percentile p must lie in (0, 50)");
  std::size_t dims = 0;
  for (const auto& t : trajectories) {
    if (!t.actions.empty()) {
      dims = t.dims();
      break;
    }
  }
  if (dims == 0) throw DataError("fit_norm_stats: no action vectors");

  std::vector<std::vector<double>> columns(dims);
  for (const auto& t : trajectories) {
    for (const auto& a : t.actions) {
      if (a.size() != dims) throw DataError("fit_norm_stats: trajectory '" + t.id + "' has mismatched dimension");
      for (std::size_t d = 0; d < dims; ++d) columns[d].push_back(a[d]);
    }
  }

  NormStats stats;
  stats.p = p;
  stats.low.resize(dims);
  stats.high.resize(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    double lo = nearest_rank_percentile(columns[d], p);
    double hi = nearest_rank_percentile(std::move(columns[d]), 100.0 - p);
    if (!(lo < hi)) {
      lo -= kDegenerateWidth;
      hi += kDegenerateWidth;
    }
    stats.low[d] = lo;
    stats.high[d] = hi;
  }
  return stats;
}

nlohmann::json norm_stats_to_json(const NormStats& stats) {
  return {{"p", stats.p}, {"low", stats.low}, {"high", stats.high}};
}

NormStats norm_stats_from_json(const nlohmann::json& j) {
  NormStats stats;
  try {
    stats.p = j.at("p").get<double>();
    stats.low = j.at("low").get<std::vector<double>>();
    stats.high = j.at("high").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed norm stats: ") + e.what());
  }
  if (stats.low.size() != stats.high.size() || stats.low.empty()) {
    throw DataError("malformed norm stats: low/high dimension mismatch");
  }
  for (std::size_t d = 0; d < stats.dims(); ++d) {
    if (!(stats.low[d] < stats.high[d])) throw DataError("malformed norm stats: low >= high in dim " + std::to_string(d));
  }
  return stats;
}

ActionChunk normalize_chunk(const ActionChunk& chunk, const NormStats& stats) {
  if (chunk.cols() != stats.dims()) throw DataError("normalize_chunk: dimension mismatch");
  ActionChunk out(chunk.rows(), chunk.cols());
  for (std::size_t t = 0; t < chunk.rows(); ++t) {
    for (std::size_t d = 0; d < chunk.cols(); ++d) {
      const double lo = stats.low[d];
      const double hi = stats.high[d];
      out(t, d) = 2.0 * (chunk(t, d) - lo) / (hi - lo) - 1.0;
    }
  }
  return out;
}

ActionChunk denormalize_chunk(const ActionChunk& chunk, const NormStats& stats) {
  if (chunk.cols() != stats.dims()) throw DataError("denormalize_chunk: dimension mismatch");
  ActionChunk out(chunk.rows(), chunk.cols());
  for (std::size_t t = 0; t < chunk.rows(); ++t) {
    for (std::size_t d = 0; d < chunk.cols(); ++d) {
      const double lo = stats.low[d];
      const double hi = stats.high[d];
      out(t, d) = (chunk(t, d) + 1.0) * 0.5 * (hi - lo) + lo;
    }
  }
  return out;
}

ActionChunk chunk_from_rows(std::span<const ActionVector> rows) {
  if (rows.empty()) throw DataError("action chunk needs at least one row");
  const std::size_t dims = rows.front().size();
  ActionChunk chunk(rows.size(), dims);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != dims) throw DataError("action chunk rows have differing dimension");
    std::copy(rows[t].begin(), rows[t].end(), chunk.row(t).begin());
  }
  return chunk;
}

std::vector<ActionVector> chunk_to_rows(const ActionChunk& chunk) {
  std::vector<ActionVector> rows(chunk.rows());
  for (std::size_t t = 0; t < chunk.rows(); ++t) rows[t].assign(chunk.row(t).begin(), chunk.row(t).end());
  return rows;
}

std::vector<ActionChunk> extract_chunks(const Trajectory& trajectory, std::size_t horizon) {
  if (horizon == 0) throw ConfigError("chunk horizon must be >= 1");
  std::vector<ActionChunk> chunks;
  const std::span<const ActionVector> actions(trajectory.actions);
  for (std::size_t start = 0; start + horizon <= actions.size(); start += horizon) {
    chunks.push_back(chunk_from_rows(actions.subspan(start, horizon)));
  }
  return chunks;
}

std::vector<ActionChunk> extract_chunks(std::span<const Trajectory> trajectories, std::size_t horizon) {
  std::vector<ActionChunk> chunks;
  for (const auto& t : trajectories) {
    auto part = extract_chunks(t, horizon);
    chunks.insert(chunks.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return chunks;
}

SyntheticProfile parse_profile(const std::string& name) {
  if (name == "smooth") return SyntheticProfile::smooth;
  if (name == "step") return SyntheticProfile::step;
  if (name == "mixed") return SyntheticProfile::mixed;
  throw ConfigError("unknown synthetic profile '" + name + "' (expected smooth|step|mixed)");
}

std::string to_string(SyntheticProfile profile) {
  switch (profile) {
    case SyntheticProfile::smooth: return "smooth";
    case SyntheticProfile::step: return "step";
    case SyntheticProfile::mixed: return "mixed";
  }
  return "?";
}

namespace {

constexpr std::size_t kMaxSmoothFrequency = 3;
constexpr double kStateStep = 0.1;

void fill_smooth(std::vector<ActionVector>& actions, std::size_t d, Rng& rng) {
  const std::size_t horizon = actions.size();
  std::vector<std::size_t> freqs;
  const std::size_t available = std::min(horizon, kMaxSmoothFrequency + 1);
  for (std::size_t k = 0; k < available; ++k) freqs.push_back(k);
  // Partial Fisher-Yates: the first `terms` entries are a random subset.
  const std::size_t terms = std::min<std::size_t>(1 + rng.below(3), available);
  for (std::size_t i = 0; i < terms; ++i) std::swap(freqs[i], freqs[i + rng.below(available - i)]);

  for (std::size_t i = 0; i < terms; ++i) {
    const double amplitude = rng.uniform(-1.0, 1.0) / 3.0;
    const double k = static_cast<double>(freqs[i]);
    for (std::size_t t = 0; t < horizon; ++t) {
      actions[t][d] += amplitude * std::cos(std::numbers::pi * (static_cast<double>(t) + 0.5) * k / static_cast<double>(horizon));
    }
  }
}

std::vector<std::size_t> change_points(std::size_t horizon, Rng& rng) {
  std::vector<std::size_t> points;
  if (horizon < 2) return points;
  const std::size_t n = rng.below(3);
  for (std::size_t i = 0; i < n; ++i) points.push_back(1 + rng.below(horizon - 1));
  std::sort(points.begin(), points.end());
  return points;
}

void fill_step(std::vector<ActionVector>& actions, std::size_t d, Rng& rng, bool gripper) {
  const auto points = change_points(actions.size(), rng);
  double level = gripper ? (rng.below(2) == 0 ? -1.0 : 1.0) : 0.5 * rng.uniform(-1.0, 1.0);
  std::size_t next = 0;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    while (next < points.size() && points[next] == t) {
      level = gripper ? -level : 0.5 * rng.uniform(-1.0, 1.0);
      ++next;
    }
    actions[t][d] = level;
  }
}

}  // namespace

std::vector<Trajectory> gen_synthetic(std::size_t count, std::size_t horizon, std::size_t dims, std::uint64_t seed,
                                      SyntheticProfile profile) {
  if (horizon == 0 || dims == 0) throw ConfigError("gen_synthetic: horizon and dims must be >= 1");
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    SyntheticProfile kind = profile;
    if (kind == SyntheticProfile::mixed) kind = rng.below(2) == 0 ? SyntheticProfile::smooth : SyntheticProfile::step;

    Trajectory traj;
    traj.id = "traj_" + std::to_string(i);
    traj.instruction = kInstructions[rng.below(kInstructions.size())];
    traj.actions.assign(horizon, ActionVector(dims, 0.0));
    for (std::size_t d = 0; d < dims; ++d) {
      const bool gripper = d == kGripperDim;
      if (kind == SyntheticProfile::smooth) {
        if (gripper) {
          for (auto& a : traj.actions) a[d] = 1.0;
        } else {
          fill_smooth(traj.actions, d, rng);
        }
      } else {
        fill_step(traj.actions, d, rng, gripper);
      }
    }

    std::vector<ActionVector> states(horizon, ActionVector(dims, 0.0));
    for (std::size_t t = 0; t < horizon; ++t) {
      for (std::size_t d = 0; d < dims; ++d) {
        if (d == kGripperDim) {
          states[t][d] = traj.actions[t][d];
        } else {
          states[t][d] = (t == 0 ? 0.0 : states[t - 1][d]) + kStateStep * traj.actions[t][d];
        }
      }
    }
    traj.states = std::move(states);
    out.push_back(std::move(traj));
  }
  return out;
}

}  // namespace actalign
