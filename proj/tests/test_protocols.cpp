// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "pdfembed/error.hpp"
#include "pdfembed/protocols.hpp"

using namespace pdfembed;
using namespace pdfembed::protocols;

TEST(Pcc, AffineSequences) {
  const std::vector<double> a{1, 2, 3};
  EXPECT_NEAR(pcc(a, std::vector<double>{2, 4, 6}), 1.0, 1e-12);
  EXPECT_NEAR(pcc(a, std::vector<double>{3, 2, 1}), -1.0, 1e-12);
}

TEST(Pcc, ZeroVariance) {
  try {
    pcc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroVariance);
  }
  EXPECT_FALSE(try_pcc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}).has_value());
}

TEST(Pcc, AffineInvariance) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(20), l(20);
    for (auto& v : p) v = nd(rng);
    for (auto& v : l) v = nd(rng);
    const double base = pcc(p, l);
    const double a = std::exp(nd(rng));
    const double b = nd(rng);
    std::vector<double> q = p;
    for (auto& v : q) v = a * v + b;
    EXPECT_NEAR(pcc(q, l), base, 1e-12);
    for (auto& v : q) v = -v;
    EXPECT_NEAR(pcc(q, l), -base, 1e-12);
  }
}

TEST(Deviations, WorkedExamples) {
  auto d = deviations(0, 3, 5);
  EXPECT_EQ(d.relative, 1.0);
  EXPECT_EQ(d.absolute, 0.6);
  d = deviations(2, 5, 5);
  EXPECT_EQ(d.relative, 0.6);
  EXPECT_EQ(d.absolute, 0.6);
  d = deviations(3, 3, 5);
  EXPECT_EQ(d.relative, 0.0);
  EXPECT_EQ(d.absolute, 0.0);
}

TEST(Deviations, RelativeDominatesAbsolute) {
  for (int l = 0; l <= 5; ++l) {
    for (double p = 0; p <= 5; p += 0.25) {
      const auto d = deviations(p, l, 5);
      EXPECT_GE(d.relative, d.absolute);
      if (p != l && (l == 0 || l == 5)) EXPECT_DOUBLE_EQ(d.relative, d.absolute);
      if (p != l && l != 0 && l != 5) EXPECT_GT(d.relative, d.absolute);
    }
  }
}

TEST(Rd, Examples) {
  EXPECT_EQ(rd(std::vector<double>{3}, std::vector<double>{3}, 5), 0.0);
  EXPECT_EQ(rd(std::vector<double>{0}, std::vector<double>{3}, 5), 1.0);
  EXPECT_EQ(rd(std::vector<double>{2}, std::vector<double>{5}, 5), 0.6);
}

TEST(Rd, ClampsPredictionsAndStaysInUnitInterval) {
  EXPECT_EQ(rd(std::vector<double>{-4}, std::vector<double>{3}, 5), 1.0);
  EXPECT_EQ(rd(std::vector<double>{9}, std::vector<double>{0}, 5), 1.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 8);
  std::uniform_int_distribution<int> lv(0, 5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(7), l(7);
    for (auto& v : p) v = u(rng);
    for (auto& v : l) v = lv(rng);
    const double r = rd(p, l, 5);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    EXPECT_EQ(rd(l, l, 5), 0.0);
  }
  EXPECT_THROW(rd(std::vector<double>{1}, std::vector<double>{6}, 5), Error);
}

TEST(ScaleSimilarity, Examples) {
  EXPECT_EQ(scale_similarity(0.5, 5), 2.5);
  EXPECT_EQ(scale_similarity(1.0, 5), 5.0);
  EXPECT_EQ(scale_similarity(0.0, 5), 0.0);
}

TEST(ReplicationRatio, Examples) {
  EXPECT_DOUBLE_EQ(replication_ratio(std::vector<int>{5, 4, 3, 0, 1}, 4), 0.4);
  EXPECT_EQ(replication_ratio(std::vector<int>{0, 0, 0}), 0.0);
  EXPECT_THROW(replication_ratio(std::vector<int>{}), Error);
}

TEST(ReplicationRatio, NonincreasingInThreshold) {
  const std::vector<int> levels{0, 1, 2, 2, 3, 4, 5, 5, 5};
  double prev = 2.0;
  for (int t = 0; t <= 6; ++t) {
    const double r = replication_ratio(levels, t);
    EXPECT_LE(r, prev);
    prev = r;
  }
}

TEST(LevelHistogram, Counts) {
  EXPECT_EQ(level_histogram(std::vector<int>{0, 5, 5, 2}, 5), (std::vector<int>{1, 0, 1, 0, 0, 2}));
}
