#include "outpaint/rng.hpp"

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

using outpaint::Error;
using outpaint::ErrorKind;
using outpaint::Rng;

TEST(Rng, SameSeedSameSequence) {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.uniform(), b.uniform());
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.normal(), b.normal());
  for (int i = 0; i < 1000; ++i)
    EXPECT_EQ(a.uniform_int(-5, 17), b.uniform_int(-5, 17));
}

TEST(Rng, DifferentSeedsDiffer) {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.uniform() == b.uniform();
  EXPECT_LT(same, 5);
}

TEST(Rng, UniformRangeAndMoments) {
  Rng rng(7);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(Rng, UniformIntCoversRangeInclusively) {
  Rng rng(11);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.uniform_int(3, 9);
    ASSERT_GE(v, 3);
    ASSERT_LE(v, 9);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(Rng(0).uniform_int(5, 5), 5);
  EXPECT_THROW(rng.uniform_int(2, 1), Error);
}

TEST(Rng, NormalMoments) {
  Rng rng(13);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Rng, SaveLoadRoundTripsMidPair) {
  Rng rng(99);
  rng.normal();  // leaves a Box-Muller spare cached
  const std::string state = rng.save();
  std::vector<double> expect;
  for (int i = 0; i < 10; ++i) expect.push_back(rng.normal());
  Rng restored(0);
  restored.load(state);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(restored.normal(), expect[i]);
}

TEST(Rng, SaveLoadRoundTripsUniformStream) {
  Rng rng(5);
  for (int i = 0; i < 37; ++i) rng.uniform();
  const std::string state = rng.save();
  Rng restored(1234);
  restored.load(state);
  EXPECT_TRUE(restored == rng);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(restored.uniform(), rng.uniform());
}

TEST(Rng, LoadRejectsGarbage) {
  Rng rng(0);
  EXPECT_THROW(rng.load("not a valid state"), Error);
}

TEST(Rng, ForkDecouplesStreams) {
  Rng a(42);
  Rng child = a.fork();
  Rng b(42);
  b.fork();
  // Parents stay in sync after forking.
  EXPECT_EQ(a.uniform(), b.uniform());
  // Child differs from parent stream.
  Rng c(42);
  c.fork();
  EXPECT_NE(child.uniform(), c.uniform());
}
