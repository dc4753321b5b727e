#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

#include "wardlab/rng.hpp"
#include "wardlab/stats.hpp"

using namespace wardlab;

namespace {

// ---------------------------------------------------------------------------
// independent oracles (enumeration-based, separate from the library paths)
// ---------------------------------------------------------------------------

std::vector<double> oracle_ranks(const std::vector<double>& values) {
  size_t n = values.size();
  std::vector<double> ranks(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (size_t j = 0; j < n; ++j) {
      if (values[j] < values[i]) ++less;
      if (values[j] == values[i]) ++equal;
    }
    ranks[i] = less + (equal + 1.0) / 2.0;
  }
  return ranks;
}

// exact two-sided Wilcoxon p by brute-force sign enumeration
double oracle_wilcoxon_exact(const std::vector<double>& a,
                             const std::vector<double>& b) {
  std::vector<double> diffs;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) diffs.push_back(a[i] - b[i]);
  }
  size_t n = diffs.size();
  if (n == 0) return 1.0;
  std::vector<double> abs_d(n);
  for (size_t i = 0; i < n; ++i) abs_d[i] = std::fabs(diffs[i]);
  std::vector<double> ranks = oracle_ranks(abs_d);

  // doubled ranks keep everything integral under average ranks
  std::vector<long> r2(n);
  long total2 = 0;
  for (size_t i = 0; i < n; ++i) {
    r2[i] = std::lround(ranks[i] * 2.0);
    total2 += r2[i];
  }
  long w2_obs = 0;
  for (size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0) w2_obs += r2[i];
  }
  long obs_dev = std::labs(2 * w2_obs - total2);

  long hits = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    long w2 = 0;
    for (size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) w2 += r2[i];
    }
    if (std::labs(2 * w2 - total2) >= obs_dev) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(1u << n);
}

// exhaustive two-sided permutation p over all label assignments
double oracle_permutation_exact(const std::vector<double>& a,
                                const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  size_t n = pooled.size(), n_a = a.size();
  auto mean_diff = [&](std::uint32_t mask) {
    double sa = 0, sb = 0;
    for (size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) sa += pooled[i];
      else sb += pooled[i];
    }
    return sa / static_cast<double>(n_a) - sb / static_cast<double>(n - n_a);
  };
  std::uint32_t obs_mask = (1u << n_a) - 1;
  double obs = std::fabs(mean_diff(obs_mask));
  long hits = 0, total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != static_cast<int>(n_a)) continue;
    ++total;
    if (std::fabs(mean_diff(mask)) >= obs - 1e-12 * (obs + 1.0)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<double> random_values(rng::Stream& stream, size_t n, int lo, int hi) {
  std::vector<double> out(n);
  for (auto& v : out) {
    v = static_cast<double>(lo) +
        static_cast<double>(stream.below(static_cast<std::uint32_t>(hi - lo + 1)));
  }
  return out;
}

}  // namespace

TEST_CASE("wilcoxon: all-positive differences 1,2,3") {
  std::vector<double> a = {2, 4, 6}, b = {1, 2, 3};
  auto r = stats::wilcoxon_signed_rank(a, b);
  CHECK(r.statistic == doctest::Approx(6.0));
  CHECK(r.p_value == doctest::Approx(0.25));  // 2/8 over the 2^3 sign flips
  CHECK(r.p_method == stats::PMethod::exact);
}

TEST_CASE("wilcoxon: identical inputs degenerate to p=1, flagged") {
  std::vector<double> a = {1, 2, 3}, b = {1, 2, 3};
  auto r = stats::wilcoxon_signed_rank(a, b);
  CHECK(r.p_value == doctest::Approx(1.0));
  CHECK(r.flagged);
}

TEST_CASE("wilcoxon: unequal lengths rejected") {
  std::vector<double> a = {1, 2}, b = {1};
  CHECK_THROWS_AS((void)stats::wilcoxon_signed_rank(a, b), DataError);
}

TEST_CASE("wilcoxon: exact p equals full sign enumeration on random instances") {
  rng::Stream stream(rng::key(0x1a1c0, 1));
  for (int rep = 0; rep < 100; ++rep) {
    size_t n = 2 + stream.below(9);  // n in 2..10
    auto a = random_values(stream, n, 0, 6);
    auto b = random_values(stream, n, 0, 6);
    bool all_equal = true;
    for (size_t i = 0; i < n; ++i) all_equal = all_equal && a[i] == b[i];
    if (all_equal) a[0] += 1.0;
    auto r = stats::wilcoxon_signed_rank(a, b);
    double expected = oracle_wilcoxon_exact(a, b);
    INFO("rep ", rep, " n=", n);
    CHECK(r.p_value == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("wilcoxon: n>25 falls back to the tie-corrected normal approximation") {
  std::vector<double> a(30), b(30);
  rng::Stream stream(rng::key(7, 7));
  for (size_t i = 0; i < 30; ++i) {
    b[i] = static_cast<double>(stream.below(100));
    a[i] = b[i] + static_cast<double>(stream.below(9)) - 3.0;
  }
  a[0] = b[0] + 1;  // ensure at least one nonzero difference
  auto r = stats::wilcoxon_signed_rank(a, b);
  CHECK(r.p_method == stats::PMethod::normal_approx);
  CHECK(r.p_value >= 0.0);
  CHECK(r.p_value <= 1.0);
}

TEST_CASE("kruskal-wallis: [1,2],[3,4],[5,6] gives H = 32/7") {
  auto r = stats::kruskal_wallis({{1, 2}, {3, 4}, {5, 6}});
  CHECK(r.statistic == doctest::Approx(32.0 / 7.0).epsilon(1e-12));
  CHECK(r.p_method == stats::PMethod::chi_square_approx);
}

TEST_CASE("kruskal-wallis: identical groups give H = 0") {
  auto r = stats::kruskal_wallis({{2, 2, 2}, {2, 2, 2}});
  CHECK(r.statistic == doctest::Approx(0.0));
  CHECK(r.p_value == doctest::Approx(1.0));
}

TEST_CASE("kruskal-wallis: invariant under strictly increasing transforms") {
  rng::Stream stream(rng::key(0x1b2d0, 3));
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::vector<double>> groups(3);
    for (auto& g : groups) g = random_values(stream, 4 + stream.below(4), 0, 20);
    auto r1 = stats::kruskal_wallis(groups);
    for (auto& g : groups) {
      for (auto& v : g) v = std::exp(v / 5.0);  // strictly increasing
    }
    auto r2 = stats::kruskal_wallis(groups);
    CHECK(r1.statistic == doctest::Approx(r2.statistic).epsilon(1e-9));
  }
}

TEST_CASE("permutation: separated groups, exhaustive p = 2/20") {
  std::vector<double> a = {1, 2, 3}, b = {101, 102, 103};
  auto r = stats::permutation_test(a, b, stats::PermStatistic::mean_diff, 10000, 1);
  CHECK(r.p_value == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(r.p_method == stats::PMethod::exact);
}

TEST_CASE("permutation: identical groups give p near 1") {
  std::vector<double> a = {5, 5, 5, 5}, b = {5, 5, 5, 5};
  auto r = stats::permutation_test(a, b, stats::PermStatistic::mean_diff, 500, 9);
  CHECK(r.p_value == doctest::Approx(1.0));
}

TEST_CASE("permutation: same seed reproduces p bit-for-bit") {
  rng::Stream stream(rng::key(0x9e4a, 5));
  auto a = random_values(stream, 30, 0, 50);
  auto b = random_values(stream, 30, 5, 55);
  auto r1 = stats::permutation_test(a, b, stats::PermStatistic::mean_diff, 2000, 77);
  auto r2 = stats::permutation_test(a, b, stats::PermStatistic::mean_diff, 2000, 77);
  CHECK(r1.p_value == r2.p_value);
  CHECK(r1.p_method == stats::PMethod::permutation);
}

TEST_CASE("permutation: exhaustive p equals label-assignment enumeration") {
  rng::Stream stream(rng::key(0x9e4a, 6));
  for (int rep = 0; rep < 100; ++rep) {
    size_t n_a = 2 + stream.below(4);
    size_t n_b = 2 + stream.below(4);
    auto a = random_values(stream, n_a, 0, 9);
    auto b = random_values(stream, n_b, 0, 9);
    auto r = stats::permutation_test(a, b, stats::PermStatistic::mean_diff, 100000, 3);
    REQUIRE(r.p_method == stats::PMethod::exact);
    double expected = oracle_permutation_exact(a, b);
    INFO("rep ", rep, " n_a=", n_a, " n_b=", n_b);
    CHECK(r.p_value == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("effect sizes: identical group means give d = 0") {
  std::vector<double> a = {1, 2, 3}, b = {1, 2, 3};
  CHECK(stats::cohens_d(a, b) == doctest::Approx(0.0));
}

TEST_CASE("effect sizes: d negates under group swap, bitwise") {
  std::vector<double> a = {1.5, 2.25, 3.75, 9}, b = {4, 5.5, 6.125};
  CHECK(stats::cohens_d(a, b) == -stats::cohens_d(b, a));
  CHECK(stats::hedges_g(a, b) == -stats::hedges_g(b, a));
}

TEST_CASE("effect sizes: g/d equals the small-sample correction exactly") {
  rng::Stream stream(rng::key(0x6e55, 1));
  for (int n = 3; n <= 30; ++n) {
    auto a = random_values(stream, static_cast<size_t>(n), 0, 40);
    auto b = random_values(stream, static_cast<size_t>(n), 10, 50);
    a[0] += 0.5;  // keep pooled sd nonzero
    double d = stats::cohens_d(a, b);
    double g = stats::hedges_g(a, b);
    double df = 2.0 * n - 2.0;
    double j = 1.0 - 3.0 / (4.0 * df - 1.0);
    CHECK(g == d * j);  // same expression, bit-identical
    if (n == 10) CHECK(j == doctest::Approx(1.0 - 3.0 / 71.0).epsilon(1e-15));
  }
}

TEST_CASE("effect sizes: zero pooled sd rejected") {
  std::vector<double> a = {2, 2, 2}, b = {2, 2, 2};
  CHECK_THROWS_AS((void)stats::cohens_d(a, b), DataError);
}

TEST_CASE("bootstrap: same seed gives the identical interval") {
  std::vector<double> a = {1, 2, 3, 4, 5}, b = {3, 4, 5, 6, 7};
  auto e1 = stats::bootstrap_ci(a, b, stats::Estimator::cohens_d, 500, 0.95, 42);
  auto e2 = stats::bootstrap_ci(a, b, stats::Estimator::cohens_d, 500, 0.95, 42);
  CHECK(e1.ci_low == e2.ci_low);
  CHECK(e1.ci_high == e2.ci_high);
  CHECK(e1.ci_low <= e1.ci_high);
}

TEST_CASE("bootstrap: widely separated tight groups exclude zero") {
  // d is around 5; every resample keeps the sign
  std::vector<double> a = {10.0, 10.1, 9.9, 10.05, 9.95, 10.02};
  std::vector<double> b = {9.0, 9.1, 8.9, 9.05, 8.95, 9.02};
  auto e = stats::bootstrap_ci(a, b, stats::Estimator::cohens_d, 1000, 0.95, 7);
  CHECK(e.ci_low > 0.0);
}

TEST_CASE("bootstrap: interval endpoints are the 2.5/97.5 resample percentiles") {
  std::vector<double> a = {1, 2, 3, 4, 5, 6}, b = {2, 3, 4, 5, 6, 7};
  auto e = stats::bootstrap_ci(a, b, stats::Estimator::hedges_g, 400, 0.95, 11);
  auto samples = stats::bootstrap_samples(a, b, stats::Estimator::hedges_g, 400, 11);
  std::sort(samples.begin(), samples.end());
  auto type7 = [&](double q) {
    double h = (static_cast<double>(samples.size()) - 1.0) * q;
    size_t lo = static_cast<size_t>(std::floor(h));
    size_t hi = std::min(lo + 1, samples.size() - 1);
    return samples[lo] + (h - std::floor(h)) * (samples[hi] - samples[lo]);
  };
  CHECK(e.ci_low == doctest::Approx(type7(0.025)).epsilon(1e-12));
  CHECK(e.ci_high == doctest::Approx(type7(0.975)).epsilon(1e-12));
}

TEST_CASE("holm: worked example and edge cases") {
  auto adj = stats::holm_adjust(std::vector<double>{0.01, 0.04, 0.03});
  REQUIRE(adj.size() == 3);
  CHECK(adj[0] == doctest::Approx(0.03).epsilon(1e-15));
  CHECK(adj[1] == doctest::Approx(0.06).epsilon(1e-15));
  CHECK(adj[2] == doctest::Approx(0.06).epsilon(1e-15));

  auto single = stats::holm_adjust(std::vector<double>{0.2});
  CHECK(single[0] == doctest::Approx(0.2));

  auto ones = stats::holm_adjust(std::vector<double>{1.0, 1.0, 1.0});
  for (double p : ones) CHECK(p == doctest::Approx(1.0));
}

TEST_CASE("holm: adjusted p monotone along the sorted order, 1000 random vectors") {
  rng::Stream stream(rng::key(0x401f, 2));
  for (int rep = 0; rep < 1000; ++rep) {
    size_t m = 1 + stream.below(12);
    std::vector<double> ps(m);
    for (auto& p : ps) p = stream.unit();
    auto adj = stats::holm_adjust(ps);
    for (size_t i = 0; i < m; ++i) {
      CHECK(adj[i] >= ps[i]);
      CHECK(adj[i] <= 1.0);
    }
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t x, size_t y) { return ps[x] < ps[y]; });
    for (size_t i = 1; i < m; ++i) {
      CHECK(adj[order[i]] >= adj[order[i - 1]]);
    }
  }
}

TEST_CASE("sign test: 7 of 8 gives exactly 9/256") {
  auto r = stats::binomial_sign_test(7, 8);
  CHECK(r.p_value == doctest::Approx(9.0 / 256.0).epsilon(1e-15));
  CHECK(r.p_method == stats::PMethod::exact);
}

TEST_CASE("sign test: boundary cases") {
  CHECK(stats::binomial_sign_test(0, 12).p_value == doctest::Approx(1.0));
  CHECK(stats::binomial_sign_test(8, 8).p_value ==
        doctest::Approx(1.0 / 256.0).epsilon(1e-15));
}

TEST_CASE("sign test: agrees with direct binomial summation") {
  for (int n : {5, 10, 20}) {
    for (int s = 0; s <= n; ++s) {
      double expected = 0.0;
      for (int k = s; k <= n; ++k) {
        double c = 1.0;
        for (int i = 1; i <= k; ++i) {
          c *= static_cast<double>(n - k + i) / static_cast<double>(i);
        }
        expected += c;
      }
      expected /= std::pow(2.0, n);
      CHECK(stats::binomial_sign_test(s, n).p_value ==
            doctest::Approx(std::min(1.0, expected)).epsilon(1e-12));
    }
  }
}

TEST_CASE("chi-square survival: checked against trapezoid quadrature") {
  // integrate the df=2 density (exp(-x/2)/2) upward from h
  auto quad_sf_df2 = [](double h) {
    double total = 0.0, step = 1e-4;
    for (double x = h; x < h + 60.0; x += step) {
      total += 0.5 * (std::exp(-x / 2.0) / 2.0 + std::exp(-(x + step) / 2.0) / 2.0) * step;
    }
    return total;
  };
  for (double h : {0.5, 1.0, 3.0, 6.0}) {
    CHECK(stats::chi_square_sf(h, 2) == doctest::Approx(quad_sf_df2(h)).epsilon(1e-5));
  }
  // known value: P(chi2_1 > 3.841) is about 0.05
  CHECK(stats::chi_square_sf(3.841459, 1) == doctest::Approx(0.05).epsilon(1e-4));
}

TEST_CASE("relabeling invariance: p unchanged, d negated") {
  std::vector<double> a = {3, 5, 8, 13}, b = {1, 2, 4, 6};
  auto fwd = stats::permutation_test(a, b, stats::PermStatistic::mean_diff, 100000, 5);
  auto rev = stats::permutation_test(b, a, stats::PermStatistic::mean_diff, 100000, 5);
  CHECK(fwd.p_value == doctest::Approx(rev.p_value).epsilon(1e-12));
  CHECK(fwd.statistic == doctest::Approx(-rev.statistic).epsilon(1e-12));
}

TEST_CASE("relabeling invariance: kruskal-wallis ignores group order; wilcoxon "
          "swap flips W but keeps p") {
  std::vector<std::vector<double>> groups = {{1, 5, 9}, {2, 2, 7}, {3, 8}};
  auto fwd = stats::kruskal_wallis(groups);
  auto rev = stats::kruskal_wallis({groups[2], groups[0], groups[1]});
  CHECK(fwd.statistic == doctest::Approx(rev.statistic).epsilon(1e-12));
  CHECK(fwd.p_value == doctest::Approx(rev.p_value).epsilon(1e-12));

  std::vector<double> a = {2, 9, 4, 7, 11}, b = {1, 3, 8, 2, 5};
  auto ab = stats::wilcoxon_signed_rank(a, b);
  auto ba = stats::wilcoxon_signed_rank(b, a);
  CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-15));
  // W+ and W- sum to the total rank mass
  CHECK(ab.statistic + ba.statistic == doctest::Approx(15.0));  // n=5 ranks
}

TEST_CASE("wilcoxon: invariant under strictly increasing transforms") {
  std::vector<double> a = {2, 9, 4, 7, 11}, b = {1, 3, 8, 2, 5};
  auto r1 = stats::wilcoxon_signed_rank(a, b);
  // monotone transform of the differences' magnitudes is not rank-preserving
  // in general; scaling both sides by a positive constant is
  std::vector<double> a2(a), b2(b);
  for (auto& v : a2) v *= 3.5;
  for (auto& v : b2) v *= 3.5;
  auto r2 = stats::wilcoxon_signed_rank(a2, b2);
  CHECK(r1.statistic == doctest::Approx(r2.statistic));
  CHECK(r1.p_value == doctest::Approx(r2.p_value).epsilon(1e-15));
}
