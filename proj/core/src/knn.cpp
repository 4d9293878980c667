#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <thread>

#include "actalign/error.hpp"
#include "actalign/repr_analysis.hpp"

namespace actalign {

namespace {

bool neighbor_before(const Neighbor& x, const Neighbor& y, std::span<const LabeledFeature> train) {
  if (x.distance != y.distance) return x.distance < y.distance;
  const auto& fx = train[x.index];
  const auto& fy = train[y.index];
  if (fx.trajectory != fy.trajectory) return fx.trajectory < fy.trajectory;
  if (fx.timestep != fy.timestep) return fx.timestep < fy.timestep;
  return x.index < y.index;
}

std::uint32_t vote(std::span<const Neighbor> neighbors, std::span<const LabeledFeature> train) {
  // class -> (votes, summed distance); std::map iterates in class order.
  std::map<std::uint32_t, std::pair<std::size_t, double>> tally;
  for (const auto& nb : neighbors) {
    auto& [votes, dist] = tally[train[nb.index].label];
    ++votes;
    dist += nb.distance;
  }
  auto best = tally.begin();
  for (auto it = tally.begin(); it != tally.end(); ++it) {
    const auto& [votes, dist] = it->second;
    const auto& [best_votes, best_dist] = best->second;
    if (votes > best_votes || (votes == best_votes && dist < best_dist)) best = it;
  }
  return best->first;
}

std::vector<Neighbor> nearest(std::span<const LabeledFeature> train, std::span<const double> query, std::size_t k,
                              const std::vector<std::size_t>* subset) {
  std::vector<Neighbor> all;
  auto consider = [&](std::size_t i) {
    if (train[i].vector.size() != query.size()) throw DataError("knn: feature dimension mismatch");
    all.push_back({i, euclidean(train[i].vector, query)});
  };
  if (subset) {
    all.reserve(subset->size());
    for (std::size_t i : *subset) consider(i);
  } else {
    all.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) consider(i);
  }
  if (all.size() < k) throw DataError("knn: fewer training points than k");
  auto less = [&](const Neighbor& x, const Neighbor& y) { return neighbor_before(x, y, train); };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
  all.resize(k);
  return all;
}

}  // namespace

std::vector<Neighbor> knn_neighbors(std::span<const LabeledFeature> train, std::span<const double> query,
                                    std::size_t k) {
  if (train.empty()) throw DataError("knn: empty training set");
  if (k == 0) throw ConfigError("knn: k must be >= 1");
  return nearest(train, query, k, nullptr);
}

std::uint32_t knn_classify(std::span<const LabeledFeature> train, std::span<const double> query, std::size_t k) {
  const auto neighbors = knn_neighbors(train, query, k);
  return vote(neighbors, train);
}

nlohmann::json KnnReport::to_json() const {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t support = 0;
    for (auto v : confusion[c]) support += v;
    per_class.push_back({{"class", c}, {"support", support}, {"correct", confusion[c][c]}});
  }
  return {{"accuracy", accuracy}, {"correct", correct}, {"total", total}, {"classes", classes},
          {"k", k},           {"protocol", "leave_one_trajectory_out"},
          {"confusion", confusion}, {"per_class", std::move(per_class)}};
}

KnnReport knn_accuracy(std::span<const LabeledFeature> features, std::size_t classes, std::size_t k,
                       std::size_t threads) {
  if (k == 0) throw ConfigError("knn: k must be >= 1");
  if (classes == 0) throw ConfigError("knn: number of classes must be >= 1");

  std::vector<std::string> traj_names;
  std::map<std::string, std::size_t> traj_index;
  std::vector<std::size_t> owner(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    if (f.label >= classes) throw DataError("knn: label " + std::to_string(f.label) + " >= C");
    if (f.vector.size() != features.front().vector.size()) throw DataError("knn: feature dimension mismatch");
    auto [it, inserted] = traj_index.emplace(f.trajectory, traj_names.size());
    if (inserted) traj_names.push_back(f.trajectory);
    owner[i] = it->second;
  }
  const std::size_t folds = traj_names.size();
  if (folds < 2) throw DataError("knn: leave-one-trajectory-out needs at least 2 trajectories");

  std::vector<std::vector<std::size_t>> members(folds);
  for (std::size_t i = 0; i < features.size(); ++i) members[owner[i]].push_back(i);
  for (std::size_t f = 0; f < folds; ++f) {
    if (features.size() - members[f].size() < k) {
      throw DataError("knn: fewer than k training points when holding out '" + traj_names[f] + "'");
    }
  }

  std::vector<std::uint32_t> predicted(features.size());
  auto run_fold = [&](std::size_t fold) {
    std::vector<std::size_t> train_idx;
    train_idx.reserve(features.size() - members[fold].size());
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (owner[i] != fold) train_idx.push_back(i);
    }
    for (std::size_t q : members[fold]) {
      const auto nb = nearest(features, features[q].vector, k, &train_idx);
      predicted[q] = vote(nb, features);
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(threads, 1, folds);
  if (workers == 1) {
    for (std::size_t f = 0; f < folds; ++f) run_fold(f);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t f = w; f < folds; f += workers) run_fold(f);
      });
    }
  }

  KnnReport report;
  report.classes = classes;
  report.k = k;
  report.total = features.size();
  report.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < features.size(); ++i) {
    ++report.confusion[features[i].label][predicted[i]];
    if (predicted[i] == features[i].label) ++report.correct;
  }
  report.accuracy = report.total == 0 ? 0.0 : static_cast<double>(report.correct) / static_cast<double>(report.total);
  return report;
}

std::vector<RawFeature> read_features(std::istream& in) {
  std::vector<RawFeature> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RawFeature f;
      f.trajectory = j.at("traj").get<std::string>();
      const auto t = j.at("t").get<long long>();
      if (t < 0) throw DataError("negative timestep");
      f.timestep = static_cast<std::size_t>(t);
      f.vector = j.at("vec").get<std::vector<double>>();
      if (f.vector.empty()) throw DataError("empty feature vector");
      out.push_back(std::move(f));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("features line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("features line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RawFeature> load_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file " + path.string());
  return read_features(in);
}

void write_features(std::ostream& out, std::span<const RawFeature> features) {
  for (const auto& f : features) {
    out << nlohmann::json{{"traj", f.trajectory}, {"t", f.timestep}, {"vec", f.vector}}.dump() << '\n';
  }
}

StateLabeling read_labeling(std::istream& in, std::size_t classes) {
  StateLabeling out;
  out.classes = classes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto labels = j.at("labels").get<std::vector<std::uint32_t>>();
      for (auto c : labels) {
        if (c >= classes) throw DataError("label " + std::to_string(c) + " >= C=" + std::to_string(classes));
      }
      out.ids.push_back(j.at("traj").get<std::string>());
      out.labels.push_back(std::move(labels));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("labeling line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("labeling line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

StateLabeling load_labeling(const std::filesystem::path& path, std::size_t classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open labeling file " + path.string());
  return read_labeling(in, classes);
}

void write_labeling(std::ostream& out, const StateLabeling& labeling) {
  for (std::size_t i = 0; i < labeling.ids.size(); ++i) {
    out << nlohmann::json{{"traj", labeling.ids[i]}, {"labels", labeling.labels[i]}}.dump() << '\n';
  }
}

std::vector<LabeledFeature> attach_labels(std::span<const RawFeature> features, const StateLabeling& labeling) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labeling.ids.size(); ++i) index.emplace(labeling.ids[i], i);
  std::vector<LabeledFeature> out;
  out.reserve(features.size());
  for (const auto& f : features) {
    const auto it = index.find(f.trajectory);
    if (it == index.end()) throw DataError("feature for unlabeled trajectory '" + f.trajectory + "'");
    const auto& labels = labeling.labels[it->second];
    if (f.timestep >= labels.size()) {
      throw DataError("feature timestep " + std::to_string(f.timestep) + " beyond labels of '" + f.trajectory + "'");
    }
    if (!out.empty() && f.vector.size() != out.front().vector.size()) {
      throw DataError("feature vectors have differing dimensionality");
    }
    out.push_back({f.vector, labels[f.timestep], f.trajectory, f.timestep});
  }
  return out;
}

}  // namespace actalign
