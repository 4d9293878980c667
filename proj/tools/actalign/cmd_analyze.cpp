#include <algorithm>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include "actalign/error.hpp"
#include "actalign/repr_analysis.hpp"
#include "cli.hpp"

namespace actalign::cli {

namespace {

struct AnalyzeParams {
  std::string input;
  std::string against;
  std::string features;
  std::string labels;
  std::string reference;
  std::size_t band = 0;  // 0 = unconstrained
  std::uint32_t classes = kDefaultClasses;
  std::size_t k = kDefaultNeighbors;
};

DtwOptions dtw_options(const AnalyzeParams& p) {
  DtwOptions o;
  if (p.band != 0) o.band = p.band;
  return o;
}

std::vector<Trajectory> read_trajectories(const std::string& path) {
  if (path.empty()) throw ConfigError("--input is required");
  return load_trajectories(path);
}

// DTW runs over robot states when every trajectory has them, else over actions.
bool all_have_states(std::span<const Trajectory> a, std::span<const Trajectory> b) {
  auto has = [](const Trajectory& t) { return t.states.has_value() && !t.states->empty(); };
  return std::all_of(a.begin(), a.end(), has) && std::all_of(b.begin(), b.end(), has);
}

void run_dtw(const AnalyzeParams& p, const RunContext& ctx, const nlohmann::json& effective) {
  const auto rows = read_trajectories(p.input);
  const auto cols = p.against.empty() ? rows : load_trajectories(p.against);
  if (rows.empty() || cols.empty()) throw DataError("dtw needs at least one trajectory on each side");
  const bool states = all_have_states(rows, cols);
  auto series = [&](const Trajectory& t) -> const std::vector<ActionVector>& { return states ? *t.states : t.actions; };
  const std::size_t dims = series(rows.front()).front().size();
  for (const auto* side : {&rows, &cols}) {
    for (const auto& t : *side) {
      for (const auto& v : series(t)) {
        if (v.size() != dims) throw DataError("dtw: trajectory '" + t.id + "' has mismatched dimensionality");
      }
    }
  }

  const auto options = dtw_options(p);
  std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size(), 0.0));
  auto work = [&](std::size_t i) {
    for (std::size_t j = 0; j < cols.size(); ++j) cost[i][j] = dtw(series(rows[i]), series(cols[j]), options).cost;
  };
  const std::size_t workers = std::clamp<std::size_t>(ctx.threads, 1, rows.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) work(i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < rows.size(); i += workers) work(i);
      });
    }
  }

  nlohmann::json row_ids = nlohmann::json::array();
  nlohmann::json col_ids = nlohmann::json::array();
  for (const auto& t : rows) row_ids.push_back(t.id);
  for (const auto& t : cols) col_ids.push_back(t.id);
  nlohmann::json report = {
      {"series", states ? "states" : "actions"},
      {"rows", std::move(row_ids)},
      {"cols", std::move(col_ids)},
      {"cost", cost},
      {"provenance", effective},
  };
  const auto out = prepare_out_dir(ctx);
  write_json(out / "dtw.json", report);
  write_json(out / "run_config.json", effective);

  double max_diag = 0.0;
  const std::size_t diag = std::min(rows.size(), cols.size());
  for (std::size_t i = 0; i < diag; ++i) max_diag = std::max(max_diag, cost[i][i]);
  std::cout << "analyze dtw: " << rows.size() << "x" << cols.size() << " costs over " << (states ? "states" : "actions")
            << ", max diagonal " << format_number(max_diag) << " -> " << (out / "dtw.json").string() << '\n';
}

void run_label(const AnalyzeParams& p, const RunContext& ctx, const nlohmann::json& effective) {
  const auto trajectories = read_trajectories(p.input);
  std::size_t ref = 0;
  if (p.reference.empty()) {
    ref = default_reference(trajectories);
  } else {
    const auto it = std::find_if(trajectories.begin(), trajectories.end(),
                                 [&](const Trajectory& t) { return t.id == p.reference; });
    if (it == trajectories.end()) throw DataError("reference trajectory '" + p.reference + "' not found");
    ref = static_cast<std::size_t>(it - trajectories.begin());
  }
  const auto labeling = label_by_reference(trajectories, ref, p.classes, dtw_options(p), ctx.threads);

  std::ostringstream buf;
  write_labeling(buf, labeling);
  const auto counts = labeling.class_counts();
  nlohmann::json summary = {
      {"classes", labeling.classes},
      {"reference", trajectories[ref].id},
      {"trajectories", labeling.ids.size()},
      {"total", labeling.total()},
      {"class_counts", counts},
      {"provenance", effective},
  };
  const auto out = prepare_out_dir(ctx);
  write_file(out / "labels.jsonl", buf.str());
  write_json(out / "label_summary.json", summary);
  write_json(out / "run_config.json", effective);
  const auto empty = static_cast<std::size_t>(std::count(counts.begin(), counts.end(), std::size_t{0}));
  std::cout << "analyze label: " << labeling.total() << " timesteps in " << labeling.ids.size()
            << " trajectories, C=" << labeling.classes << " (" << empty << " empty), reference "
            << trajectories[ref].id << " -> " << (out / "labels.jsonl").string() << '\n';
}

void run_knn(const AnalyzeParams& p, const RunContext& ctx, const nlohmann::json& effective) {
  if (p.features.empty()) throw ConfigError("--features is required");
  if (p.labels.empty()) throw ConfigError("--labels is required");
  const auto raw = load_features(p.features);
  const auto labeling = load_labeling(p.labels, p.classes);
  const auto features = attach_labels(raw, labeling);
  const auto report = knn_accuracy(features, p.classes, p.k, ctx.threads);

  auto j = report.to_json();
  j["provenance"] = effective;
  const auto out = prepare_out_dir(ctx);
  write_json(out / "knn_report.json", j);
  write_json(out / "run_config.json", effective);
  std::cout << "analyze knn: accuracy " << format_number(report.accuracy) << " (" << report.correct << "/"
            << report.total << "), k=" << report.k << ", C=" << report.classes << " -> "
            << (out / "knn_report.json").string() << '\n';
}

}  // namespace

void register_analyze(CLI::App& app, RunContext& ctx, Registry& registry) {
  auto* analyze = app.add_subcommand("analyze", "DTW alignment, state labeling and KNN probing");
  analyze->require_subcommand(1);
  auto params = std::make_shared<AnalyzeParams>();

  auto* d = analyze->add_subcommand("dtw", "Pairwise DTW cost matrix; writes dtw.json");
  d->add_option("--input,-i", params->input, "Trajectory JSONL (rows)");
  d->add_option("--against", params->against, "Trajectory JSONL (columns; default = input)");
  d->add_option("--band", params->band, "Sakoe-Chiba half-width (0 = none)")->capture_default_str();
  add_common_options(d, ctx);
  registry.push_back({d, [params](const RunContext& c, const nlohmann::json& e) { run_dtw(*params, c, e); }});

  auto* l = analyze->add_subcommand("label", "Label every timestep by DTW to a reference");
  l->add_option("--input,-i", params->input, "Trajectory JSONL with states");
  l->add_option("--classes,-C", params->classes, "Number of classes")->check(CLI::PositiveNumber)->capture_default_str();
  l->add_option("--reference", params->reference, "Reference trajectory id (default = longest)");
  l->add_option("--band", params->band, "Sakoe-Chiba half-width (0 = none)")->capture_default_str();
  add_common_options(l, ctx);
  registry.push_back({l, [params](const RunContext& c, const nlohmann::json& e) { run_label(*params, c, e); }});

  auto* k = analyze->add_subcommand("knn", "Leave-one-trajectory-out KNN accuracy");
  k->add_option("--features", params->features, "Feature JSONL {traj, t, vec}");
  k->add_option("--labels", params->labels, "Labeling JSONL {traj, labels}");
  k->add_option("--classes,-C", params->classes, "Number of classes")->check(CLI::PositiveNumber)->capture_default_str();
  k->add_option("--k", params->k, "Neighbours")->check(CLI::PositiveNumber)->capture_default_str();
  add_common_options(k, ctx);
  registry.push_back({k, [params](const RunContext& c, const nlohmann::json& e) { run_knn(*params, c, e); }});
}

}  // namespace actalign::cli
