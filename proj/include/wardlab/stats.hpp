#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wardlab/types.hpp"

namespace wardlab::stats {

enum class PMethod { exact, normal_approx, chi_square_approx, permutation, likelihood_ratio };

std::string to_string(PMethod m);

enum class EffectKind { cohens_d, hedges_g };

struct EffectSize {
  EffectKind kind = EffectKind::cohens_d;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_boot = 0;
  std::uint64_t seed = 0;
  int degenerate_redraws = 0;  // zero-sd resamples that were re-drawn
  bool flagged = false;        // > 50% of draws were degenerate
};

struct TestResult {
  std::string test_name;
  double statistic = 0.0;
  double p_value = 1.0;
  PMethod p_method = PMethod::exact;
  std::vector<int> n_per_group;
  std::optional<EffectSize> effect;
  std::optional<double> adjusted_p;
  std::optional<std::uint64_t> seed;
  bool flagged = false;
  std::string note;
};

// W+ over ranked absolute differences (average ranks for ties), zero
// differences dropped. Exact two-sided p by sign enumeration (via an exact
// count over doubled-rank sums) for n <= 25 after drops; normal approximation
// with tie correction above that. Pairing is by index.
TestResult wilcoxon_signed_rank(std::span<const double> a,
                                std::span<const double> b);

// H with tie correction; p from the chi-square approximation, df = k-1.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

enum class PermStatistic { mean_diff };

// Two-sided p = (1 + #{|stat| >= |observed|}) / (n_iter + 1); switches to
// exhaustive label enumeration whenever C(n_a+n_b, n_a) <= n_iter.
TestResult permutation_test(std::span<const double> a, std::span<const double> b,
                            PermStatistic stat, int n_iter, std::uint64_t seed);

// Pooled-sd standardized mean difference; (n_a + n_b - 2) denominator.
double cohens_d(std::span<const double> a, std::span<const double> b);
// g = J * d with J = 1 - 3 / (4*(n_a+n_b-2) - 1).
double hedges_g(std::span<const double> a, std::span<const double> b);

enum class Estimator { cohens_d, hedges_g };

// Percentile bootstrap CI, resampling within each group independently.
// Zero-sd resamples are re-drawn and counted; > 50% degenerate flags the
// result.
EffectSize bootstrap_ci(std::span<const double> a, std::span<const double> b,
                        Estimator estimator, int n_boot, double level,
                        std::uint64_t seed);
// Same draw sequence, returning the raw resample statistics (test hook).
std::vector<double> bootstrap_samples(std::span<const double> a,
                                      std::span<const double> b,
                                      Estimator estimator, int n_boot,
                                      std::uint64_t seed,
                                      int* degenerate_redraws = nullptr);

// Step-down Holm; returns adjusted p in the original order.
std::vector<double> holm_adjust(std::span<const double> p_values);

// Exact one-sided (greater) binomial sign test: p = sum_{k>=s} C(n,k) / 2^n.
TestResult binomial_sign_test(int successes, int trials);

// chi-square survival function and standard normal CDF (exposed because the
// tests check them against quadrature)
double chi_square_sf(double x, int df);
double normal_cdf(double z);

}  // namespace wardlab::stats
