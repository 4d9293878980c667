#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "actalign/error.hpp"
#include "actalign/policy.hpp"
#include "actalign/reward.hpp"
#include "actalign/rng.hpp"

using namespace actalign;
using boost::multiprecision::cpp_dec_float_50;

namespace {

ToyPolicy random_policy(Rng& rng, std::size_t p, std::size_t l, std::size_t w, double scale = 1.0) {
  std::vector<double> logits(p * l * w);
  for (auto& z : logits) z = scale * rng.normal();
  return ToyPolicy(p, l, w, std::move(logits));
}

}  // namespace

TEST(ToyPolicy, SoftmaxRowsSumToOne) {
  Rng rng(1);
  const auto policy = random_policy(rng, 3, 4, 16, 5.0);
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t t = 0; t < 4; ++t) {
      const auto probs = policy.probs(p, t);
      EXPECT_NEAR(std::accumulate(probs.begin(), probs.end(), 0.0), 1.0, 1e-12);
    }
  }
}

TEST(ToyPolicy, StableForHugeLogits) {
  ToyPolicy policy(1, 1, 3, {1000.0, -1000.0, 0.0});
  const auto lp = policy.log_probs(0, 0);
  for (double x : lp) EXPECT_FALSE(std::isnan(x));
  EXPECT_NEAR(std::exp(lp[0]), 1.0, 1e-12);
}

TEST(ToyPolicy, RejectsBadShapes) {
  EXPECT_THROW(ToyPolicy(0, 1, 1), ConfigError);
  EXPECT_THROW(ToyPolicy(1, 1, 2, {0.0}), DataError);
  EXPECT_THROW(ToyPolicy(1, 1, 1, {std::nan("")}), NumericError);
}

TEST(ToyPolicy, JsonRoundTrip) {
  Rng rng(2);
  const auto policy = random_policy(rng, 2, 3, 5);
  EXPECT_EQ(ToyPolicy::from_json(nlohmann::json::parse(policy.to_json().dump())), policy);
}

TEST(SampleGroup, PeakedLogitsGiveConstantResponses) {
  ToyPolicy policy(2, 5, 8);
  for (std::size_t t = 0; t < 5; ++t) policy.logit(1, t, 3) = 800.0;
  const auto group = sample_group(policy, 1, 7, 123);
  ASSERT_EQ(group.responses.size(), 7u);
  for (const auto& r : group.responses) {
    EXPECT_EQ(r.tokens, (std::vector<TokenId>(5, 3)));
    for (double lp : r.old_log_probs) EXPECT_NEAR(lp, 0.0, 1e-12);
  }
}

TEST(SampleGroup, DeterministicInSeed) {
  Rng rng(3);
  const auto policy = random_policy(rng, 2, 6, 16);
  const auto a = sample_group(policy, 0, 5, 77);
  const auto b = sample_group(policy, 0, 5, 77);
  ASSERT_EQ(a.responses.size(), b.responses.size());
  for (std::size_t i = 0; i < a.responses.size(); ++i) {
    EXPECT_EQ(a.responses[i].tokens, b.responses[i].tokens);
    EXPECT_EQ(a.responses[i].old_log_probs, b.responses[i].old_log_probs);
  }
  EXPECT_THROW(sample_group(policy, 2, 5, 1), DataError);
}

TEST(SampleGroup, UniformBinaryFrequency) {
  const ToyPolicy policy(1, 1, 2);
  const auto group = sample_group(policy, 0, 10000, 5);
  std::size_t zeros = 0;
  for (const auto& r : group.responses) zeros += r.tokens[0] == 0;
  EXPECT_NEAR(static_cast<double>(zeros) / 10000.0, 0.5, 0.02);
}

TEST(SampleGroup, RecordsSamplingLogProbs) {
  Rng rng(4);
  const auto policy = random_policy(rng, 1, 4, 6);
  const auto group = sample_group(policy, 0, 5, 9);
  for (const auto& r : group.responses) {
    for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(r.old_log_probs[t], policy.log_prob(0, t, r.tokens[t]));
  }
}

TEST(RewardGroup, SequenceAndTemplatedAdapters) {
  SyntheticTask task{4, 3, {ActionTokenSeq{{1, 2, 3}}}, RewardAdapter::sequence_only};
  RolloutGroup group{0, {Response{{1, 2, 3}, {0, 0, 0}}, Response{{0, 2, 3}, {0, 0, 0}}, Response{{1, 2, 0}, {0, 0, 0}}}};
  reward_group(group, task);
  EXPECT_EQ(group.responses[0].reward, 1.0);
  EXPECT_EQ(group.responses[1].reward, 0.0);
  EXPECT_DOUBLE_EQ(group.responses[2].reward, 2.0 / 3.0);

  task.adapter = RewardAdapter::templated_text;
  reward_group(group, task);
  EXPECT_EQ(group.responses[0].reward, 1.0);
  EXPECT_EQ(group.responses[1].reward, 0.5);
  const std::vector<TokenId> tokens{1, 2, 3};
  EXPECT_TRUE(parse_response(render_templated_response(tokens)).well_formed());
}

TEST(SyntheticTask, DeterministicAndValidated) {
  const auto a = make_synthetic_task(8, 16, 6, 3);
  const auto b = make_synthetic_task(8, 16, 6, 3);
  ASSERT_EQ(a.prompts(), 8u);
  for (std::size_t p = 0; p < 8; ++p) {
    EXPECT_EQ(a.targets[p], b.targets[p]);
    EXPECT_EQ(a.targets[p].size(), 6u);
    for (auto id : a.targets[p].ids) EXPECT_LT(id, 16u);
  }
  const auto back = SyntheticTask::from_json(nlohmann::json::parse(a.to_json().dump()));
  EXPECT_EQ(back.targets, a.targets);
  auto bad = a.to_json();
  bad["targets"][0][0] = 16;
  EXPECT_THROW(SyntheticTask::from_json(bad), DataError);
}

TEST(KlToRef, ZeroForIdenticalPolicies) {
  Rng rng(5);
  const auto p = random_policy(rng, 2, 3, 5);
  EXPECT_NEAR(kl_to_ref(p, p, 0), 0.0, 1e-15);
  EXPECT_NEAR(kl_to_ref(p, p, 1), 0.0, 1e-15);
}

TEST(KlToRef, NonNegativeOnRandomPairs) {
  Rng rng(6);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_policy(rng, 1, 3, 6, 3.0);
    const auto b = random_policy(rng, 1, 3, 6, 3.0);
    EXPECT_GE(kl_to_ref(a, b, 0), 0.0);
  }
}

TEST(KlToRef, TwoTokenClosedForm) {
  const ToyPolicy policy(1, 1, 2, {std::log(0.8), std::log(0.2)});
  const ToyPolicy ref(1, 1, 2);
  const cpp_dec_float_50 expected = cpp_dec_float_50("0.8") * log(cpp_dec_float_50("1.6")) +
                                    cpp_dec_float_50("0.2") * log(cpp_dec_float_50("0.4"));
  EXPECT_NEAR(kl_to_ref(policy, ref, 0), expected.convert_to<double>(), 1e-12);
  EXPECT_NEAR(kl_to_ref(policy, ref, 0), 0.19274, 5e-6);
}

TEST(KlToRef, AveragesOverPositions) {
  std::vector<double> logits{std::log(0.8), std::log(0.2), 0.0, 0.0};
  const ToyPolicy policy(1, 2, 2, logits);
  const ToyPolicy ref(1, 2, 2);
  EXPECT_NEAR(kl_to_ref(policy, ref, 0), 0.5 * (0.8 * std::log(1.6) + 0.2 * std::log(0.4)), 1e-12);
  EXPECT_THROW(kl_to_ref(policy, ToyPolicy(1, 3, 2), 0), DataError);
}

TEST(ImportanceRatios, OnPolicyIsOne) {
  Rng rng(7);
  const auto policy = random_policy(rng, 1, 4, 6);
  const auto group = sample_group(policy, 0, 5, 1);
  for (const auto& row : importance_ratios(policy, group)) {
    for (double r : row) EXPECT_EQ(r, 1.0);
  }
}

TEST(ImportanceRatios, DoubledProbabilityGivesTwo) {
  // W=4 uniform: token 0 has p=1/4. Raise its logit so p becomes 1/2.
  const ToyPolicy old_policy(1, 1, 4);
  auto group = sample_group(old_policy, 0, 50, 3);
  ToyPolicy policy(1, 1, 4);
  policy.logit(0, 0, 0) = std::log(3.0);
  for (std::size_t i = 0; i < group.responses.size(); ++i) {
    const double rho = importance_ratios(policy, group)[i][0];
    EXPECT_GT(rho, 0.0);
    if (group.responses[i].tokens[0] == 0) {
      EXPECT_NEAR(rho, 2.0, 1e-9);
    } else {
      EXPECT_NEAR(rho, (1.0 / 6.0) / 0.25, 1e-9);
    }
  }
}

TEST(EvaluatePolicy, UniformIsNearChance) {
  const auto task = make_synthetic_task(1, 16, 6, 0);
  const ToyPolicy policy(1, 6, 16);
  // E[r] = (1/L) * sum_i P(first i tokens right).
  double chance = 0.0;
  for (int i = 1; i <= 6; ++i) chance += std::pow(1.0 / 16.0, i);
  chance /= 6.0;
  const double mean = evaluate_policy(policy, task, 20000, 1);
  EXPECT_NEAR(mean, chance, 0.005);
  EXPECT_LT(mean, 0.2);
  EXPECT_EQ(evaluate_policy(policy, task, 100, 5), evaluate_policy(policy, task, 100, 5));
}
