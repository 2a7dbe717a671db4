#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "rtfalsify/aggregate.hpp"

namespace rtfalsify {
namespace {

TEST(AggregateStep, TakesMinimumIgnoringInactive) {
  const std::vector<Degree> d{0.25, kTop, 1.3};
  EXPECT_EQ(aggregate_step(RunningMin{}, d).current(), 0.25);
}

TEST(AggregateStep, KeepsSmallerRunningValue) {
  RunningMin r = aggregate_step(RunningMin{}, std::vector<Degree>{-0.1});
  EXPECT_EQ(aggregate_step(r, std::vector<Degree>{5.0}).current(), -0.1);
}

TEST(AggregateStep, EmptyIsIdentity) { EXPECT_EQ(aggregate_step(RunningMin{}, {}).current(), kTop); }

TEST(Finalize, MinimumOverSteps) {
  RunningMin r;
  for (double m : {1.0, 0.2, 0.7}) r.update(std::vector<Degree>{m});
  EXPECT_EQ(finalize(r), 0.2);
}

TEST(Finalize, NoSteps) { EXPECT_EQ(finalize(RunningMin{}), kTop); }

TEST(Finalize, NegativeInfinityAbsorbs) {
  RunningMin r;
  r.update(std::vector<Degree>{3.0, kBottom});
  r.update(std::vector<Degree>{-1e300});
  EXPECT_EQ(finalize(r), kBottom);
}

TEST(RunningMin, MatchesBatchFoldAndIsPermutationInvariant) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> val(-10, 10);
  for (int run = 0; run < 200; ++run) {
    const int steps = std::uniform_int_distribution<int>(0, 50)(rng);
    const int reqs  = std::uniform_int_distribution<int>(1, 5)(rng);
    std::vector<std::vector<Degree>> rows(steps, std::vector<Degree>(reqs));
    for (auto& row : rows)
      for (auto& d : row) d = std::bernoulli_distribution(0.3)(rng) ? kTop : val(rng);

    RunningMin online, permuted;
    Degree batch = kTop;
    Degree last  = kTop;
    for (auto row : rows) {
      online.update(row);
      EXPECT_LE(online.current(), last);
      last = online.current();
      for (Degree d : row) batch = std::min(batch, d);
      std::shuffle(row.begin(), row.end(), rng);
      permuted.update(row);
    }
    EXPECT_EQ(finalize(online), batch);
    EXPECT_EQ(finalize(permuted), batch);
  }
}

}  // namespace
}  // namespace rtfalsify
