#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "actalign/traj_data.hpp"

namespace actalign {

struct DtwPath {
  double cost = 0.0;
  // Monotone from (0, 0) to (n-1, m-1); steps (1,0), (0,1) or (1,1).
  std::vector<std::pair<std::size_t, std::size_t>> path;
};

struct DtwOptions {
  // Sakoe-Chiba half-width; cells with |i - j| > max(band, |n - m|) are
  // excluded. Unset means unconstrained.
  std::optional<std::size_t> band;
};

double euclidean(std::span<const double> a, std::span<const double> b);

// Classic three-step DTW under the Euclidean metric. The backtrace prefers
// the diagonal predecessor on ties, then (i-1, j), then (i, j-1).
DtwPath dtw(std::span<const ActionVector> a, std::span<const ActionVector> b, const DtwOptions& options = {});

inline constexpr std::uint32_t kDefaultClasses = 32;
inline constexpr std::size_t kDefaultNeighbors = 5;

struct StateLabeling {
  std::size_t classes = kDefaultClasses;
  std::vector<std::string> ids;
  std::vector<std::vector<std::uint32_t>> labels;  // per trajectory, per timestep

  std::size_t total() const noexcept;
  std::vector<std::size_t> class_counts() const;
  const std::vector<std::uint32_t>& of(const std::string& id) const;
};

// Index of the longest trajectory (first one on ties).
std::size_t default_reference(std::span<const Trajectory> trajectories);

// The reference's timestep t gets class floor(t * C / len). Every other
// trajectory is DTW-aligned to the reference over robot states and each of its
// timesteps inherits the class of the smallest reference index it maps to.
StateLabeling label_by_reference(std::span<const Trajectory> trajectories, std::size_t reference,
                                 std::uint32_t classes = kDefaultClasses, const DtwOptions& options = {},
                                 std::size_t threads = 1);

struct LabeledFeature {
  std::vector<double> vector;
  std::uint32_t label = 0;
  std::string trajectory;
  std::size_t timestep = 0;
};

struct Neighbor {
  std::size_t index = 0;  // into the training set
  double distance = 0.0;
};

// k nearest by Euclidean distance; distance ties ordered by (trajectory,
// timestep).
std::vector<Neighbor> knn_neighbors(std::span<const LabeledFeature> train, std::span<const double> query,
                                    std::size_t k);

// Majority vote over the k nearest. Vote ties go to the class with the
// smallest summed distance, then the smallest class id.
std::uint32_t knn_classify(std::span<const LabeledFeature> train, std::span<const double> query,
                           std::size_t k = kDefaultNeighbors);

struct KnnReport {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t classes = 0;
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]

  nlohmann::json to_json() const;
};

// Leave-one-trajectory-out: every timestep is classified against all other
// trajectories' features.
KnnReport knn_accuracy(std::span<const LabeledFeature> features, std::size_t classes,
                       std::size_t k = kDefaultNeighbors, std::size_t threads = 1);

// I/O for the feature and labeling JSONL files.
struct RawFeature {
  std::string trajectory;
  std::size_t timestep = 0;
  std::vector<double> vector;
};

std::vector<RawFeature> read_features(std::istream& in);
std::vector<RawFeature> load_features(const std::filesystem::path& path);
void write_features(std::ostream& out, std::span<const RawFeature> features);

StateLabeling read_labeling(std::istream& in, std::size_t classes);
StateLabeling load_labeling(const std::filesystem::path& path, std::size_t classes);
void write_labeling(std::ostream& out, const StateLabeling& labeling);

// Joins features with their labels; every feature must have a label and all
// vectors must share one dimensionality.
std::vector<LabeledFeature> attach_labels(std::span<const RawFeature> features, const StateLabeling& labeling);

}  // namespace actalign
