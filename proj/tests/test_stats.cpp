#include <gtest/gtest.h>

#include <algorithm>

#include "eoe/rng.hpp"
#include "eoe/stats.hpp"

using namespace eoe;

namespace {

// Evaluates both ECDFs at every pooled sample point.
double ecdf_sweep_d(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pts(a);
  pts.insert(pts.end(), b.begin(), b.end());
  double d = 0.0;
  for (double t : pts) {
    const double fa = static_cast<double>(std::count_if(a.begin(), a.end(), [&](double v) { return v <= t; })) /
                      static_cast<double>(a.size());
    const double fb = static_cast<double>(std::count_if(b.begin(), b.end(), [&](double v) { return v <= t; })) /
                      static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

// Normalized Mann-Whitney U: fraction of (positive, negative) pairs ranked correctly, ties half.
double mann_whitney_auc(const std::vector<double>& s, const std::vector<bool>& y) {
  double u = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] && !y[j]) {
        pairs += 1.0;
        u += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return u / pairs;
}

}  // namespace

TEST(Ks, MatchesEcdfSweep) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(static_cast<std::size_t>(rng.integer(1, 60))), b(static_cast<std::size_t>(rng.integer(1, 60)));
    const double shift = rng.uniform(-1.0, 1.0);
    for (auto& v : a) v = std::round(rng.normal() * 4.0) / 4.0;  // ties on purpose
    for (auto& v : b) v = std::round((rng.normal() + shift) * 4.0) / 4.0;
    EXPECT_NEAR(ks_two_sample(a, b).d, ecdf_sweep_d(a, b), 1e-12);
  }
}

TEST(Ks, IdenticalAndDisjoint) {
  const std::vector<double> a{0.1, 0.5, 0.5, 0.9}, b{2.0, 3.0};
  const auto same = ks_two_sample(a, a);
  EXPECT_EQ(same.d, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  const auto far = ks_two_sample(a, b);
  EXPECT_EQ(far.d, 1.0);
  EXPECT_LT(far.p_value, 0.2);
  EXPECT_THROW(ks_two_sample({}, a), ParameterError);
}

TEST(Ks, PValueReference) {
  // Reference values of the Kolmogorov survival function.
  EXPECT_NEAR(kolmogorov_q(0.5), 0.9639452436648751, 1e-10);
  EXPECT_NEAR(kolmogorov_q(1.0), 0.26999967167735456, 1e-10);
  EXPECT_NEAR(kolmogorov_q(1.358), 0.05003, 1e-4);
  EXPECT_NEAR(kolmogorov_q(2.0), 0.0006709252557796953, 1e-12);
  // Both branches agree where they meet.
  EXPECT_NEAR(kolmogorov_q(1.18 - 1e-12), kolmogorov_q(1.18), 1e-9);
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
}

TEST(Ks, SeparatedLargeSamplesAreSignificant) {
  Rng rng(4);
  std::vector<double> a(200), b(200);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal(1.0, 1.0);
  EXPECT_LT(ks_two_sample(a, b).p_value, 1e-6);
}

TEST(Roc, MatchesMannWhitney) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(4, 80));
    std::vector<double> s(n);
    std::vector<bool> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i % 2 == 0;
      s[i] = rng.normal(y[i] ? 0.7 : 0.0, 1.0);
    }
    EXPECT_NEAR(roc(s, y).auc, mann_whitney_auc(s, y), 1e-12);
    for (auto& v : s) v = std::round(v);  // ties count half in both
    EXPECT_NEAR(roc(s, y).auc, mann_whitney_auc(s, y), 1e-12);
  }
}

TEST(Roc, ExtremesAndShape) {
  const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
  EXPECT_EQ(roc(s, {false, false, true, true}).auc, 1.0);
  EXPECT_EQ(roc(s, {true, true, false, false}).auc, 0.0);
  const auto r = roc(s, {false, true, false, true});
  ASSERT_EQ(r.points.size(), 5u);
  EXPECT_EQ(r.points.front().fpr, 0.0);
  EXPECT_EQ(r.points.back().tpr, 1.0);
  EXPECT_EQ(r.points.back().fpr, 1.0);
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    EXPECT_GE(r.points[i].fpr, r.points[i - 1].fpr);
    EXPECT_GE(r.points[i].tpr, r.points[i - 1].tpr);
  }
  EXPECT_THROW(roc(s, {true, true, true, true}), ParameterError);
  EXPECT_THROW(roc(s, {true, false}), ParameterError);
}

TEST(Roc, RandomLabelsNearHalf) {
  Rng rng(12);
  std::vector<double> s(4000);
  std::vector<bool> y(4000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    y[i] = rng.uniform() < 0.5;
  }
  EXPECT_NEAR(roc(s, y).auc, 0.5, 0.05);
}

TEST(Summary, MedianAndStddev) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_DOUBLE_EQ(stddev({2, 4, 4, 4, 5, 5, 7, 9}), 2.0);
  EXPECT_THROW(median({}), ParameterError);
}
