#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "actalign/actalign.hpp"

// Slow, obviously-correct reference implementations used to check the library.
namespace oracle {

using actalign::TokenId;

// Walk both sequences until the first mismatch.
inline double first_mismatch_reward(const std::vector<TokenId>& gen, const std::vector<TokenId>& target) {
  std::size_t i = 0;
  while (i < gen.size() && i < target.size() && gen[i] == target[i]) ++i;
  return static_cast<double>(i) / static_cast<double>(target.size());
}

// One full left-to-right pass per merge, in table order.
inline std::vector<TokenId> sequential_bpe_encode(std::vector<TokenId> seq,
                                                  const std::vector<std::pair<TokenId, TokenId>>& merges,
                                                  std::size_t alphabet) {
  for (std::size_t r = 0; r < merges.size(); ++r) {
    std::vector<TokenId> next;
    for (std::size_t i = 0; i < seq.size();) {
      if (i + 1 < seq.size() && seq[i] == merges[r].first && seq[i + 1] == merges[r].second) {
        next.push_back(static_cast<TokenId>(alphabet + r));
        i += 2;
      } else {
        next.push_back(seq[i]);
        ++i;
      }
    }
    seq = std::move(next);
  }
  return seq;
}

// Recount every adjacent pair from scratch each round.
inline std::vector<std::pair<TokenId, TokenId>> naive_bpe_train(std::vector<std::vector<TokenId>> corpus,
                                                                std::size_t alphabet, std::size_t target) {
  std::vector<std::pair<TokenId, TokenId>> merges;
  while (alphabet + merges.size() < target) {
    std::map<std::pair<TokenId, TokenId>, std::size_t> counts;
    for (const auto& s : corpus) {
      for (std::size_t i = 0; i + 1 < s.size(); ++i) ++counts[{s[i], s[i + 1]}];
    }
    std::pair<TokenId, TokenId> best{};
    std::size_t best_count = 0;
    for (const auto& [pair, c] : counts) {
      if (c > best_count) {
        best = pair;
        best_count = c;
      }
    }
    if (best_count < 2) break;
    merges.push_back(best);
    for (auto& s : corpus) s = sequential_bpe_encode(s, {best}, alphabet + merges.size() - 1);
  }
  return merges;
}

inline double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

// Minimum over every monotone warping path, summed in path order.
inline double brute_force_dtw(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    acc += distance(a[i], b[j]);
    if (i + 1 == a.size() && j + 1 == b.size()) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < a.size() && j + 1 < b.size()) walk(i + 1, j + 1, acc);
    if (i + 1 < a.size()) walk(i + 1, j, acc);
    if (j + 1 < b.size()) walk(i, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

struct KnnPoint {
  std::vector<double> vec;
  std::uint32_t label = 0;
  std::string traj;
  std::size_t t = 0;
};

// Sort everything, take k, count votes.
inline std::uint32_t exhaustive_knn(const std::vector<KnnPoint>& train, const std::vector<double>& query,
                                    std::size_t k, std::uint32_t classes) {
  std::vector<std::tuple<double, std::string, std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < train.size(); ++i) all.emplace_back(distance(train[i].vec, query), train[i].traj, train[i].t, i);
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> votes(classes, 0);
  std::vector<double> dist(classes, 0.0);
  for (std::size_t n = 0; n < k; ++n) {
    const auto& p = train[std::get<3>(all[n])];
    ++votes[p.label];
    dist[p.label] += std::get<0>(all[n]);
  }
  std::uint32_t best = 0;
  for (std::uint32_t c = 1; c < classes; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && votes[c] > 0 && dist[c] < dist[best])) best = c;
  }
  return best;
}

inline std::vector<double> finite_difference_gradient(const actalign::ToyPolicy& policy, const actalign::ToyPolicy& ref,
                                                      const std::vector<actalign::RolloutGroup>& groups,
                                                      const actalign::GrpoConfig& cfg, double h) {
  std::vector<double> grad(policy.logits().size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    auto plus = policy;
    auto minus = policy;
    plus.logits()[i] += h;
    minus.logits()[i] -= h;
    const double fp = actalign::grpo_objective(plus, ref, groups, cfg).objective;
    const double fm = actalign::grpo_objective(minus, ref, groups, cfg).objective;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// Fine-tuned and RL responses for the cloth-to-right-burner episode, each
// closed with the answer tag.
inline const std::vector<TokenId> kPlaceClothTarget = {486, 265, 268, 116, 269};

inline const std::string kPlaceClothSftResponse =
    "<think>To perform the task of moving the orange cloth to the top of the right burner, the robot needs to first "
    "approach the cloth, then grasp it, and finally move it to the right burner. The actions should be sequential "
    "and purposeful, focusing on the cloth and the burner in question.</think><answer>\n"
    "<|action_start|><|action_266|><|action_709|><|action_268|><|action_116|><|action_269|><|action_end|></answer>";

inline const std::string kPlaceClothRlResponse =
    "<think>To perform the task of moving the orange cloth to the top of the right burner, the robot needs to first "
    "approach and align its gripper with the cloth. Once aligned, it will need to close the gripper to pick up the "
    "cloth, lift it, and then move it to the right burner before releasing it. The robot's current position suggests "
    "it is already aligned with the cloth, ready to pick it up.</think><answer><|action_start|><|action_486|>"
    "<|action_265|><|action_268|><|action_116|><|action_269|><|action_end|></answer>";

}  // namespace oracle

namespace testutil {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("actalign_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI with stdout/stderr captured into `scratch`.
inline CliResult run_cli(const std::string& binary, const std::vector<std::string>& args,
                         const std::filesystem::path& scratch) {
  static int counter = 0;
  const auto tag = std::to_string(counter++);
  const auto out_path = scratch / ("stdout_" + tag + ".txt");
  const auto err_path = scratch / ("stderr_" + tag + ".txt");
  std::string cmd = shell_quote(binary);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " >" + shell_quote(out_path.string()) + " 2>" + shell_quote(err_path.string());
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  std::filesystem::remove(out_path);
  std::filesystem::remove(err_path);
  return r;
}

// Every regular file under `dir`, keyed by relative path.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[std::filesystem::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

}  // namespace testutil
