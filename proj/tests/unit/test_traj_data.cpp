#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "actalign/dct.hpp"
#include "actalign/error.hpp"
#include "actalign/rng.hpp"
#include "actalign/traj_data.hpp"
#include "oracles.hpp"

using namespace actalign;

namespace {

Trajectory make_traj(const std::string& id, std::vector<ActionVector> actions) {
  return Trajectory{id, "do something", std::move(actions), std::nullopt};
}

}  // namespace

TEST(LoadTrajectories, TwoRecordsKeepOrderAndIds) {
  std::istringstream in(
      R"({"id":"a","instruction":"x","actions":[[1,2],[3,4]]})"
      "\n"
      R"({"id":"b","instruction":"y","actions":[[5,6]],"states":[[0,0]]})"
      "\n");
  const auto scan = scan_trajectories(in);
  ASSERT_TRUE(scan.errors.empty());
  ASSERT_EQ(scan.trajectories.size(), 2u);
  EXPECT_EQ(scan.trajectories[0].id, "a");
  EXPECT_EQ(scan.trajectories[1].id, "b");
  EXPECT_FALSE(scan.trajectories[0].states.has_value());
  ASSERT_TRUE(scan.trajectories[1].states.has_value());
}

TEST(LoadTrajectories, ShortStateListNamesTrajectory) {
  const auto j = nlohmann::json::parse(R"({"id":"traj_17","instruction":"x","actions":[[1],[2]],"states":[[0]]})");
  try {
    trajectory_from_json(j);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("traj_17"), std::string::npos);
  }
}

TEST(LoadTrajectories, EmptyFileGivesEmptyList) {
  testutil::TempDir dir("traj");
  testutil::write_file(dir / "empty.jsonl", "");
  EXPECT_TRUE(load_trajectories(dir / "empty.jsonl").empty());
}

TEST(LoadTrajectories, MissingFileIsDataError) {
  EXPECT_THROW(load_trajectories("/nonexistent/actalign/file.jsonl"), DataError);
}

TEST(LoadTrajectories, EveryLineIsRecordOrError) {
  std::istringstream in(
      "{\"id\":\"ok\",\"instruction\":\"\",\"actions\":[[1,2]]}\n"
      "not json\n"
      "\n"
      "{\"id\":\"ragged\",\"instruction\":\"\",\"actions\":[[1,2],[3]]}\n"
      "{\"id\":\"empty\",\"instruction\":\"\",\"actions\":[]}\n"
      "{\"id\":\"nan\",\"instruction\":\"\",\"actions\":[[1,null]]}\n"
      "{\"id\":\"ok2\",\"instruction\":\"\",\"actions\":[[1,2]]}\n");
  const auto scan = scan_trajectories(in);
  ASSERT_EQ(scan.trajectories.size(), 2u);
  ASSERT_EQ(scan.errors.size(), 4u);
  EXPECT_EQ(scan.errors[0].line, 2u);
  EXPECT_EQ(scan.errors[1].line, 4u);
  EXPECT_EQ(scan.errors[2].line, 5u);
  EXPECT_EQ(scan.errors[3].line, 6u);
}

TEST(LoadTrajectories, StrictLoaderListsLineNumbers) {
  testutil::TempDir dir("traj");
  testutil::write_file(dir / "bad.jsonl",
                       "{\"id\":\"a\",\"instruction\":\"\",\"actions\":[[1]]}\n{\"id\":\"b\"}\n");
  try {
    load_trajectories(dir / "bad.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(LoadTrajectories, SchemaDimsEnforced) {
  std::istringstream in("{\"id\":\"a\",\"instruction\":\"\",\"actions\":[[1,2,3]]}\n");
  DatasetSchema schema;
  schema.dims = 7;
  const auto scan = scan_trajectories(in, schema);
  EXPECT_TRUE(scan.trajectories.empty());
  EXPECT_EQ(scan.errors.size(), 1u);
}

TEST(LoadTrajectories, WriteThenReadRoundTrips) {
  const auto trajs = gen_synthetic(5, 12, 7, 4, SyntheticProfile::mixed);
  std::stringstream buf;
  write_trajectories(buf, trajs);
  const auto scan = scan_trajectories(buf);
  ASSERT_TRUE(scan.errors.empty());
  EXPECT_EQ(scan.trajectories, trajs);
}

TEST(Percentile, NearestRankOnZeroToHundred) {
  std::vector<ActionVector> actions;
  for (int v = 0; v <= 100; ++v) actions.push_back({static_cast<double>(v)});
  const std::vector<Trajectory> trajs{make_traj("a", actions)};
  const auto stats = fit_norm_stats(trajs, 1.0);
  EXPECT_DOUBLE_EQ(stats.low[0], 1.0);
  EXPECT_DOUBLE_EQ(stats.high[0], 99.0);
}

TEST(Percentile, MatchesSortAndIndexOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    std::vector<double> values(n);
    for (auto& v : values) v = rng.normal();
    const double p = rng.uniform(0.01, 99.99);
    auto sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::size_t rank = 1;
    while (static_cast<double>(rank) < p / 100.0 * static_cast<double>(n) - 1e-9) ++rank;
    EXPECT_EQ(nearest_rank_percentile(values, p), sorted[rank - 1]) << "n=" << n << " p=" << p;
  }
}

TEST(NormStats, ConstantDimensionIsWidened) {
  const std::vector<Trajectory> trajs{make_traj("a", {{2.5}, {2.5}, {2.5}})};
  const auto stats = fit_norm_stats(trajs, 1.0);
  EXPECT_DOUBLE_EQ(stats.low[0], 2.5 - kDegenerateWidth);
  EXPECT_DOUBLE_EQ(stats.high[0], 2.5 + kDegenerateWidth);
}

TEST(NormStats, SmallPercentileGivesMinMax) {
  std::vector<ActionVector> actions;
  for (int i = 0; i <= 10; ++i) actions.push_back({i / 10.0, -5.0 + i});
  const std::vector<Trajectory> trajs{make_traj("a", actions)};
  const auto stats = fit_norm_stats(trajs, 1e-6);
  EXPECT_DOUBLE_EQ(stats.low[0], 0.0);
  EXPECT_DOUBLE_EQ(stats.high[0], 1.0);
  EXPECT_DOUBLE_EQ(stats.low[1], -5.0);
  EXPECT_DOUBLE_EQ(stats.high[1], 5.0);
}

TEST(NormStats, RejectsEmptyInputAndBadPercentile) {
  EXPECT_THROW(fit_norm_stats(std::vector<Trajectory>{}, 1.0), DataError);
  const std::vector<Trajectory> trajs{make_traj("a", {{1.0}})};
  EXPECT_THROW(fit_norm_stats(trajs, 0.0), ConfigError);
  EXPECT_THROW(fit_norm_stats(trajs, 50.0), ConfigError);
}

TEST(NormStats, PermutationInvariant) {
  auto trajs = gen_synthetic(30, 10, 7, 9, SyntheticProfile::mixed);
  const auto base = fit_norm_stats(trajs, 1.0);
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    for (std::size_t k = trajs.size() - 1; k > 0; --k) std::swap(trajs[k], trajs[rng.below(k + 1)]);
    EXPECT_EQ(fit_norm_stats(trajs, 1.0), base);
  }
}

TEST(NormStats, JsonRoundTrip) {
  const auto stats = fit_norm_stats(gen_synthetic(4, 9, 3, 1, SyntheticProfile::step), 2.5);
  EXPECT_EQ(norm_stats_from_json(norm_stats_to_json(stats)), stats);
  EXPECT_THROW(norm_stats_from_json(nlohmann::json{{"p", 1.0}, {"low", {1.0}}, {"high", {0.0}}}), DataError);
}

TEST(Normalize, EndpointsAndMidpoint) {
  NormStats stats{1.0, {-2.0, 10.0}, {4.0, 30.0}};
  ActionChunk chunk(3, 2, {-2.0, 10.0, 4.0, 30.0, 1.0, 20.0});
  const auto n = normalize_chunk(chunk, stats);
  EXPECT_DOUBLE_EQ(n(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(n(0, 1), -1.0);
  EXPECT_DOUBLE_EQ(n(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(n(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(n(2, 0), 0.0);
  EXPECT_DOUBLE_EQ(n(2, 1), 0.0);
  const auto back = denormalize_chunk(n, stats);
  EXPECT_DOUBLE_EQ(back(0, 0), -2.0);
  EXPECT_DOUBLE_EQ(back(1, 1), 30.0);
  EXPECT_DOUBLE_EQ(back(2, 0), 1.0);
}

TEST(Normalize, OutOfRangeIsNotClipped) {
  NormStats stats{1.0, {0.0}, {1.0}};
  ActionChunk chunk(1, 1, {3.0});
  EXPECT_DOUBLE_EQ(normalize_chunk(chunk, stats)(0, 0), 5.0);
}

TEST(Normalize, InverseWithinRelativeTolerance) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    NormStats stats;
    const std::size_t d = 1 + rng.below(8);
    for (std::size_t i = 0; i < d; ++i) {
      const double lo = rng.uniform(-100, 100);
      stats.low.push_back(lo);
      stats.high.push_back(lo + rng.uniform(1e-3, 50));
    }
    ActionChunk chunk(4, d);
    for (std::size_t t = 0; t < 4; ++t) {
      for (std::size_t k = 0; k < d; ++k) chunk(t, k) = rng.uniform(stats.low[k], stats.high[k]);
    }
    const auto back = denormalize_chunk(normalize_chunk(chunk, stats), stats);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const double a = chunk.values()[i];
      EXPECT_LE(std::abs(back.values()[i] - a), 1e-12 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST(Normalize, DimensionMismatchThrows) {
  NormStats stats{1.0, {0.0, 0.0}, {1.0, 1.0}};
  EXPECT_THROW(normalize_chunk(ActionChunk(2, 3), stats), DataError);
}

TEST(Chunks, NonOverlappingWindowsDropTail) {
  std::vector<ActionVector> actions;
  for (int t = 0; t < 10; ++t) actions.push_back({static_cast<double>(t)});
  const auto chunks = extract_chunks(make_traj("a", actions), 4);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_DOUBLE_EQ(chunks[0](0, 0), 0.0);
  EXPECT_DOUBLE_EQ(chunks[1](0, 0), 4.0);
  EXPECT_DOUBLE_EQ(chunks[1](3, 0), 7.0);
  EXPECT_THROW(extract_chunks(make_traj("a", actions), 0), ConfigError);
}

TEST(Synthetic, SameSeedIsBitIdentical) {
  for (auto profile : {SyntheticProfile::smooth, SyntheticProfile::step, SyntheticProfile::mixed}) {
    EXPECT_EQ(gen_synthetic(20, 16, 7, 42, profile), gen_synthetic(20, 16, 7, 42, profile));
  }
  EXPECT_NE(gen_synthetic(5, 16, 7, 1, SyntheticProfile::smooth), gen_synthetic(5, 16, 7, 2, SyntheticProfile::smooth));
}

TEST(Synthetic, ZeroCountIsEmpty) { EXPECT_TRUE(gen_synthetic(0, 8, 7, 1, SyntheticProfile::smooth).empty()); }

TEST(Synthetic, ShapeAndGripper) {
  for (auto profile : {SyntheticProfile::smooth, SyntheticProfile::step, SyntheticProfile::mixed}) {
    const auto trajs = gen_synthetic(50, 11, 7, 8, profile);
    ASSERT_EQ(trajs.size(), 50u);
    for (const auto& t : trajs) {
      ASSERT_EQ(t.length(), 11u);
      ASSERT_TRUE(t.states.has_value());
      ASSERT_EQ(t.states->size(), 11u);
      EXPECT_FALSE(t.instruction.empty());
      for (const auto& a : t.actions) {
        ASSERT_EQ(a.size(), 7u);
        EXPECT_TRUE(a[kGripperDim] == 1.0 || a[kGripperDim] == -1.0);
      }
    }
  }
}

TEST(Synthetic, StepProfileHasAtMostTwoChangePoints) {
  for (const auto& t : gen_synthetic(100, 20, 7, 13, SyntheticProfile::step)) {
    for (std::size_t d = 0; d < 7; ++d) {
      int changes = 0;
      for (std::size_t i = 1; i < t.length(); ++i) changes += t.actions[i][d] != t.actions[i - 1][d];
      EXPECT_LE(changes, 2) << t.id << " dim " << d;
    }
  }
}

TEST(Synthetic, SmoothProfileHasNoHighFrequencyEnergy) {
  for (const auto& t : gen_synthetic(200, 8, 7, 21, SyntheticProfile::smooth)) {
    const auto coeffs = dct2(chunk_from_rows(t.actions));
    for (std::size_t d = 0; d < 7; ++d) {
      double tail = 0.0;
      int nonzero = 0;
      for (std::size_t k = 0; k < 8; ++k) {
        if (k > 6) tail += coeffs(k, d) * coeffs(k, d);
        nonzero += std::abs(coeffs(k, d)) > 1e-9;
      }
      EXPECT_LT(tail, 1e-9);
      if (d != kGripperDim) {
        EXPECT_LE(nonzero, 3) << t.id << " dim " << d;
      }
    }
  }
}

TEST(Synthetic, UnknownProfileIsConfigError) { EXPECT_THROW(parse_profile("wavy"), ConfigError); }
