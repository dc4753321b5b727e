#include "wardlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "wardlab/rng.hpp"

namespace wardlab::stats {

std::string to_string(PMethod m) {
  switch (m) {
    case PMethod::exact: return "exact";
    case PMethod::normal_approx: return "normal_approx";
    case PMethod::chi_square_approx: return "chi_square_approx";
    case PMethod::permutation: return "permutation";
    case PMethod::likelihood_ratio: return "likelihood_ratio";
  }
  return "?";
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// Regularized incomplete gamma P(a,x) via series; Q(a,x) via continued
// fraction. Standard Numerical Recipes construction.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 1.0;
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double mean_of(std::span<const double> v) {
  long double s = 0.0L;
  for (double x : v) s += x;
  return static_cast<double>(s / static_cast<long double>(v.size()));
}

double sample_var(std::span<const double> v) {
  long double m = 0.0L;
  for (double x : v) m += x;
  m /= static_cast<long double>(v.size());
  long double ss = 0.0L;
  for (double x : v) {
    long double d = x - m;
    ss += d * d;
  }
  return static_cast<double>(ss / static_cast<long double>(v.size() - 1));
}

// average ranks, ties shared
std::vector<double> rank_with_ties(const std::vector<double>& values) {
  size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double chi_square_sf(double x, int df) {
  return gamma_q(static_cast<double>(df) / 2.0, x / 2.0);
}

TestResult wilcoxon_signed_rank(std::span<const double> a,
                                std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DataError("wilcoxon: unequal lengths");
  }
  std::vector<double> diffs;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  TestResult res;
  res.test_name = "wilcoxon_signed_rank";
  res.n_per_group = {static_cast<int>(a.size()), static_cast<int>(b.size())};

  size_t n = diffs.size();
  if (n == 0) {
    res.statistic = 0.0;
    res.p_value = 1.0;
    res.p_method = PMethod::exact;
    res.flagged = true;
    res.note = "all differences zero";
    return res;
  }

  std::vector<double> abs_d(n);
  for (size_t i = 0; i < n; ++i) abs_d[i] = std::fabs(diffs[i]);
  std::vector<double> ranks = rank_with_ties(abs_d);

  double w_plus = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0) w_plus += ranks[i];
  }
  res.statistic = w_plus;

  if (n <= 25) {
    // Exact two-sided p over all 2^n sign assignments, computed by counting
    // subset rank-sums. Ranks are doubled to integers (average ranks step
    // by 0.5), so the count is exact.
    std::vector<std::int64_t> r2(n);
    std::int64_t total2 = 0;
    for (size_t i = 0; i < n; ++i) {
      r2[i] = static_cast<std::int64_t>(std::llround(ranks[i] * 2.0));
      total2 += r2[i];
    }
    std::vector<long double> ways(static_cast<size_t>(total2) + 1, 0.0L);
    ways[0] = 1.0L;
    std::int64_t reach = 0;
    for (size_t i = 0; i < n; ++i) {
      reach += r2[i];
      for (std::int64_t s = reach; s >= r2[i]; --s) {
        ways[static_cast<size_t>(s)] +=
            ways[static_cast<size_t>(s - r2[i])];
      }
    }
    // distance from the center in doubled units: |2*W+ - total|
    std::int64_t w2 = static_cast<std::int64_t>(std::llround(w_plus * 2.0));
    std::int64_t obs_dev = std::llabs(2 * w2 - total2);
    long double count = 0.0L;
    for (std::int64_t s = 0; s <= total2; ++s) {
      if (std::llabs(2 * s - total2) >= obs_dev) {
        count += ways[static_cast<size_t>(s)];
      }
    }
    long double denom = powl(2.0L, static_cast<long double>(n));
    res.p_value = static_cast<double>(count / denom);
    res.p_method = PMethod::exact;
  } else {
    double dn = static_cast<double>(n);
    double mu = dn * (dn + 1.0) / 4.0;
    double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0;
    // tie correction: subtract sum(t^3 - t)/48 per tie group
    {
      std::vector<double> sorted = abs_d;
      std::sort(sorted.begin(), sorted.end());
      size_t i = 0;
      while (i < sorted.size()) {
        size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        double t = static_cast<double>(j - i + 1);
        if (t > 1) var -= (t * t * t - t) / 48.0;
        i = j + 1;
      }
    }
    double z = (w_plus - mu) / std::sqrt(var);
    res.p_value = 2.0 * (1.0 - normal_cdf(std::fabs(z)));
    res.p_value = std::min(1.0, res.p_value);
    res.p_method = PMethod::normal_approx;
  }
  res.note = "n_nonzero=" + std::to_string(n);
  return res;
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw DataError("kruskal_wallis: need >= 2 groups");
  size_t total = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw DataError("kruskal_wallis: empty group");
    total += g.size();
  }
  if (total < 3) throw DataError("kruskal_wallis: total n < 3");

  std::vector<double> pooled;
  pooled.reserve(total);
  for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
  std::vector<double> ranks = rank_with_ties(pooled);

  TestResult res;
  res.test_name = "kruskal_wallis";
  double n = static_cast<double>(total);
  double h = 0.0;
  size_t offset = 0;
  for (const auto& g : groups) {
    res.n_per_group.push_back(static_cast<int>(g.size()));
    double rsum = 0.0;
    for (size_t i = 0; i < g.size(); ++i) rsum += ranks[offset + i];
    offset += g.size();
    h += rsum * rsum / static_cast<double>(g.size());
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

  // tie correction
  {
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_sum = 0.0;
    size_t i = 0;
    while (i < sorted.size()) {
      size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      double t = static_cast<double>(j - i + 1);
      tie_sum += t * t * t - t;
      i = j + 1;
    }
    double correction = 1.0 - tie_sum / (n * n * n - n);
    if (correction <= 0.0) {
      // all values identical
      res.statistic = 0.0;
      res.p_value = 1.0;
      res.p_method = PMethod::chi_square_approx;
      res.flagged = true;
      res.note = "all values identical";
      return res;
    }
    h /= correction;
  }

  res.statistic = h;
  res.p_method = PMethod::chi_square_approx;
  res.p_value = chi_square_sf(h, static_cast<int>(groups.size()) - 1);
  return res;
}

namespace {

double mean_diff_stat(std::span<const double> pooled, size_t n_a) {
  long double sa = 0.0L, sb = 0.0L;
  for (size_t i = 0; i < n_a; ++i) sa += pooled[i];
  for (size_t i = n_a; i < pooled.size(); ++i) sb += pooled[i];
  return static_cast<double>(sa / static_cast<long double>(n_a) -
                             sb / static_cast<long double>(pooled.size() - n_a));
}

// C(n, k) capped so the caller can compare against an iteration budget.
double choose_capped(size_t n, size_t k, double cap) {
  double c = 1.0;
  if (k > n - k) k = n - k;
  for (size_t i = 1; i <= k; ++i) {
    c *= static_cast<double>(n - k + i) / static_cast<double>(i);
    if (c > cap) return cap + 1.0;
  }
  return c;
}

}  // namespace

TestResult permutation_test(std::span<const double> a, std::span<const double> b,
                            PermStatistic, int n_iter, std::uint64_t seed) {
  if (a.empty() || b.empty()) throw DataError("permutation_test: empty group");
  size_t n_a = a.size(), n_b = b.size(), n = n_a + n_b;

  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  double observed = mean_diff_stat(pooled, n_a);
  double abs_obs = std::fabs(observed);
  // tolerance so permutations that merely reshuffle equal sums still count
  double tol = 1e-12 * (abs_obs + 1.0);

  TestResult res;
  res.test_name = "permutation_mean_diff";
  res.statistic = observed;
  res.n_per_group = {static_cast<int>(n_a), static_cast<int>(n_b)};
  res.seed = seed;

  double total = choose_capped(n, n_a, static_cast<double>(n_iter));
  if (total <= static_cast<double>(n_iter)) {
    // exhaustive enumeration over label assignments
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n_a), true);
    // iterate combinations via prev_permutation on the mask
    long count = 0, hits = 0;
    std::vector<double> arranged(n);
    do {
      size_t ia = 0, ib = n_a;
      for (size_t i = 0; i < n; ++i) {
        if (mask[i]) arranged[ia++] = pooled[i];
        else arranged[ib++] = pooled[i];
      }
      double stat = mean_diff_stat(arranged, n_a);
      if (std::fabs(stat) >= abs_obs - tol) ++hits;
      ++count;
    } while (std::prev_permutation(mask.begin(), mask.end()));
    res.p_value = static_cast<double>(hits) / static_cast<double>(count);
    res.p_method = PMethod::exact;
    res.note = "exhaustive n_arrangements=" + std::to_string(count);
  } else {
    long hits = 0;
    std::vector<double> shuffled(pooled);
    for (int iter = 0; iter < n_iter; ++iter) {
      rng::Stream stream(rng::key(seed, static_cast<std::uint64_t>(iter), 0x9e37));
      shuffled = pooled;
      for (size_t i = n - 1; i > 0; --i) {
        size_t j = stream.below(static_cast<std::uint32_t>(i + 1));
        std::swap(shuffled[i], shuffled[j]);
      }
      double stat = mean_diff_stat(shuffled, n_a);
      if (std::fabs(stat) >= abs_obs - tol) ++hits;
    }
    res.p_value = (1.0 + static_cast<double>(hits)) / (static_cast<double>(n_iter) + 1.0);
    res.p_method = PMethod::permutation;
    res.note = "n_iter=" + std::to_string(n_iter);
  }
  return res;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw DataError("cohens_d: each group needs n >= 2");
  }
  double na = static_cast<double>(a.size());
  double nb = static_cast<double>(b.size());
  double va = sample_var(a);
  double vb = sample_var(b);
  double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
  if (pooled <= 0.0) throw DataError("cohens_d: zero pooled sd");
  return (mean_of(a) - mean_of(b)) / std::sqrt(pooled);
}

double hedges_g(std::span<const double> a, std::span<const double> b) {
  double df = static_cast<double>(a.size() + b.size()) - 2.0;
  double j = 1.0 - 3.0 / (4.0 * df - 1.0);
  return cohens_d(a, b) * j;
}

namespace {

double percentile_type7(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  size_t lo = static_cast<size_t>(std::floor(h));
  size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = h - std::floor(h);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<double> bootstrap_samples(std::span<const double> a,
                                      std::span<const double> b,
                                      Estimator estimator, int n_boot,
                                      std::uint64_t seed,
                                      int* degenerate_redraws) {
  if (a.size() < 2 || b.size() < 2) {
    throw DataError("bootstrap: each group needs n >= 2");
  }
  std::vector<double> samples;
  samples.reserve(static_cast<size_t>(n_boot));
  std::vector<double> ra(a.size()), rb(b.size());
  int redraws = 0;
  for (int i = 0; i < n_boot; ++i) {
    double value = 0.0;
    // re-draw (with a fresh sub-stream) until the resample is non-degenerate
    for (int attempt = 0;; ++attempt) {
      rng::Stream stream(rng::key(seed, static_cast<std::uint64_t>(i),
                                  static_cast<std::uint64_t>(attempt), 0xb007));
      for (auto& x : ra) x = a[stream.below(static_cast<std::uint32_t>(a.size()))];
      for (auto& x : rb) x = b[stream.below(static_cast<std::uint32_t>(b.size()))];
      try {
        value = estimator == Estimator::cohens_d ? cohens_d(ra, rb) : hedges_g(ra, rb);
        break;
      } catch (const DataError&) {
        ++redraws;
        if (attempt > 200) {
          throw DataError("bootstrap: resamples persistently degenerate");
        }
      }
    }
    samples.push_back(value);
  }
  if (degenerate_redraws) *degenerate_redraws = redraws;
  return samples;
}

EffectSize bootstrap_ci(std::span<const double> a, std::span<const double> b,
                        Estimator estimator, int n_boot, double level,
                        std::uint64_t seed) {
  EffectSize es;
  es.kind = estimator == Estimator::cohens_d ? EffectKind::cohens_d
                                             : EffectKind::hedges_g;
  es.value = estimator == Estimator::cohens_d ? cohens_d(a, b) : hedges_g(a, b);
  es.n_boot = n_boot;
  es.seed = seed;

  int redraws = 0;
  auto samples = bootstrap_samples(a, b, estimator, n_boot, seed, &redraws);
  es.degenerate_redraws = redraws;
  es.flagged = redraws * 2 > n_boot;

  std::sort(samples.begin(), samples.end());
  double alpha = (1.0 - level) / 2.0;
  es.ci_low = percentile_type7(samples, alpha);
  es.ci_high = percentile_type7(samples, 1.0 - alpha);
  return es;
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
  size_t m = p_values.size();
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m, 0.0);
  double running = 0.0;
  for (size_t i = 0; i < m; ++i) {
    double candidate = static_cast<double>(m - i) * p_values[order[i]];
    running = std::max(running, candidate);
    adjusted[order[i]] = std::min(1.0, running);
  }
  return adjusted;
}

TestResult binomial_sign_test(int successes, int trials) {
  if (successes < 0 || trials < 0 || successes > trials) {
    throw DataError("binomial_sign_test: successes out of range");
  }
  TestResult res;
  res.test_name = "binomial_sign_test";
  res.statistic = static_cast<double>(successes);
  res.n_per_group = {trials};
  res.p_method = PMethod::exact;

  // p = sum_{k >= successes} C(n, k) / 2^n via a long-double Pascal row
  long double p = 0.0L;
  long double c = 1.0L;  // C(n, 0)
  for (int k = 0; k <= trials; ++k) {
    if (k >= successes) p += c;
    c = c * static_cast<long double>(trials - k) / static_cast<long double>(k + 1);
  }
  p /= powl(2.0L, static_cast<long double>(trials));
  res.p_value = static_cast<double>(std::min(1.0L, p));
  res.note = std::to_string(successes) + "/" + std::to_string(trials) +
             " one-sided greater";
  return res;
}

}  // namespace wardlab::stats
