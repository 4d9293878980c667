#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "actalign/error.hpp"
#include "actalign/repr_analysis.hpp"

namespace actalign {

double euclidean(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

DtwPath dtw(std::span<const ActionVector> a, std::span<const ActionVector> b, const DtwOptions& options) {
  if (a.empty() || b.empty()) throw DataError("dtw: sequences must be non-empty");
  const std::size_t dims = a.front().size();
  for (const auto& v : a) {
    if (v.size() != dims) throw DataError("dtw: state dimension mismatch");
  }
  for (const auto& v : b) {
    if (v.size() != dims) throw DataError("dtw: state dimension mismatch");
  }

  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t width = options.band ? std::max(*options.band, n > m ? n - m : m - n)
                                         : std::numeric_limits<std::size_t>::max();
  auto in_band = [&](std::size_t i, std::size_t j) { return (i > j ? i - j : j - i) <= width; };

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> acc(n * m, inf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return acc[i * m + j]; };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!in_band(i, j)) continue;
      const double d = euclidean(a[i], b[j]);
      if (i == 0 && j == 0) {
        at(i, j) = d;
        continue;
      }
      double best = inf;
      if (i > 0 && j > 0) best = std::min(best, at(i - 1, j - 1));
      if (i > 0) best = std::min(best, at(i - 1, j));
      if (j > 0) best = std::min(best, at(i, j - 1));
      at(i, j) = best + d;
    }
  }

  DtwPath out;
  out.cost = at(n - 1, m - 1);
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  out.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = at(i - 1, j - 1);
      const double up = at(i - 1, j);
      const double left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    out.path.emplace_back(i, j);
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

std::size_t StateLabeling::total() const noexcept {
  std::size_t n = 0;
  for (const auto& l : labels) n += l.size();
  return n;
}

std::vector<std::size_t> StateLabeling::class_counts() const {
  std::vector<std::size_t> counts(classes, 0);
  for (const auto& l : labels) {
    for (auto c : l) ++counts.at(c);
  }
  return counts;
}

const std::vector<std::uint32_t>& StateLabeling::of(const std::string& id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw DataError("no labels for trajectory '" + id + "'");
  return labels[static_cast<std::size_t>(it - ids.begin())];
}

std::size_t default_reference(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) throw DataError("no trajectories to choose a reference from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < trajectories.size(); ++i) {
    if (trajectories[i].length() > trajectories[best].length()) best = i;
  }
  return best;
}

StateLabeling label_by_reference(std::span<const Trajectory> trajectories, std::size_t reference,
                                 std::uint32_t classes, const DtwOptions& options, std::size_t threads) {
  if (reference >= trajectories.size()) throw DataError("reference trajectory not in list");
  if (classes == 0) throw ConfigError("number of classes must be >= 1");
  for (const auto& t : trajectories) {
    if (!t.states || t.states->empty()) throw DataError("trajectory '" + t.id + "' has no states");
  }
  const auto& ref_states = *trajectories[reference].states;
  const std::size_t ref_len = ref_states.size();
  // Validate up front; workers must not throw.
  const std::size_t dims = ref_states.front().size();
  for (const auto& t : trajectories) {
    for (const auto& s : *t.states) {
      if (s.size() != dims) throw DataError("trajectory '" + t.id + "': state dimension differs from reference");
    }
  }
  if (classes > ref_len) {
    throw DataError("C=" + std::to_string(classes) + " exceeds reference length " + std::to_string(ref_len));
  }

  std::vector<std::uint32_t> ref_labels(ref_len);
  for (std::size_t t = 0; t < ref_len; ++t) ref_labels[t] = static_cast<std::uint32_t>(t * classes / ref_len);

  StateLabeling out;
  out.classes = classes;
  out.ids.resize(trajectories.size());
  out.labels.resize(trajectories.size());

  auto work = [&](std::size_t k) {
    const auto& traj = trajectories[k];
    out.ids[k] = traj.id;
    if (k == reference) {
      out.labels[k] = ref_labels;
      return;
    }
    const auto path = dtw(*traj.states, ref_states, options);
    std::vector<std::size_t> first_ref(traj.length(), ref_len);
    for (const auto& [i, j] : path.path) first_ref[i] = std::min(first_ref[i], j);
    auto& labels = out.labels[k];
    labels.resize(traj.length());
    for (std::size_t i = 0; i < traj.length(); ++i) labels[i] = ref_labels[first_ref[i]];
  };

  const std::size_t workers = std::clamp<std::size_t>(threads, 1, trajectories.size());
  if (workers == 1) {
    for (std::size_t k = 0; k < trajectories.size(); ++k) work(k);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < trajectories.size(); k += workers) work(k);
      });
    }
  }
  return out;
}

}  // namespace actalign
