#include "wardlab/lmm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

namespace wardlab::stats {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Per-group sufficient statistics. With a single random intercept the
// covariance of group g is sigma2 * (I + ratio * J), whose inverse and
// determinant are available in closed form, so the REML criterion profiles
// down to a scalar function of the variance ratio.
struct GroupStats {
  double n = 0;
  MatrixXd xtx;  // p x p
  VectorXd xty;  // p
  VectorXd xs;   // column sums of X within the group
  double ys = 0;  // sum of y
  double yty = 0;
};

struct Profile {
  std::vector<GroupStats> groups;
  int n_total = 0;
  int p = 0;
};

struct CriterionParts {
  MatrixXd a;  // X' V^-1 X (up to sigma2)
  VectorXd b;  // X' V^-1 y
  double c = 0;  // y' V^-1 y
  double log_det_v = 0;
  bool ok = true;
};

CriterionParts assemble(const Profile& pr, double ratio) {
  CriterionParts parts;
  parts.a = MatrixXd::Zero(pr.p, pr.p);
  parts.b = VectorXd::Zero(pr.p);
  for (const auto& g : pr.groups) {
    double shrink = ratio / (1.0 + ratio * g.n);
    parts.a += g.xtx - shrink * (g.xs * g.xs.transpose());
    parts.b += g.xty - shrink * g.ys * g.xs;
    parts.c += g.yty - shrink * g.ys * g.ys;
    parts.log_det_v += std::log(1.0 + ratio * g.n);
  }
  return parts;
}

// -2 * restricted log-likelihood, up to an additive constant.
double reml_criterion(const Profile& pr, double ratio) {
  auto parts = assemble(pr, ratio);
  Eigen::LDLT<MatrixXd> ldlt(parts.a);
  if (ldlt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  VectorXd beta = ldlt.solve(parts.b);
  double rss = parts.c - beta.dot(parts.b);
  if (rss <= 0.0) return std::numeric_limits<double>::infinity();
  double log_det_a = 0.0;
  for (int i = 0; i < pr.p; ++i) {
    double d = ldlt.vectorD()(i);
    if (d <= 0.0) return std::numeric_limits<double>::infinity();
    log_det_a += std::log(d);
  }
  double nmp = static_cast<double>(pr.n_total - pr.p);
  return parts.log_det_v + log_det_a + nmp * std::log(rss);
}

// golden-section refinement inside a bracket
double golden_minimize(const Profile& pr, double lo, double hi, int iters) {
  const double phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = reml_criterion(pr, x1);
  double f2 = reml_criterion(pr, x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = reml_criterion(pr, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = reml_criterion(pr, x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

LmmFit lmm_random_intercept(std::span<const double> outcome,
                            const std::vector<LmmColumn>& fixed_design,
                            std::span<const int> group_ids) {
  size_t n = outcome.size();
  size_t p = fixed_design.size();
  if (p == 0) throw DataError("lmm: empty design");
  for (const auto& col : fixed_design) {
    if (col.values.size() != n) {
      throw DataError("lmm: design column length mismatch: " + col.name);
    }
  }
  if (group_ids.size() != n) throw DataError("lmm: group ids length mismatch");
  if (n <= p + 1) throw DataError("lmm: n must exceed columns + 1");

  // densify group ids
  std::map<int, int> gmap;
  for (int g : group_ids) gmap.try_emplace(g, static_cast<int>(gmap.size()));
  size_t n_groups = gmap.size();
  if (n_groups < 2) throw DataError("lmm: need >= 2 groups");

  Profile pr;
  pr.n_total = static_cast<int>(n);
  pr.p = static_cast<int>(p);
  pr.groups.assign(n_groups, GroupStats{});
  for (auto& g : pr.groups) {
    g.xtx = MatrixXd::Zero(pr.p, pr.p);
    g.xty = VectorXd::Zero(pr.p);
    g.xs = VectorXd::Zero(pr.p);
  }
  VectorXd xi(pr.p);
  for (size_t i = 0; i < n; ++i) {
    auto& g = pr.groups[static_cast<size_t>(gmap[group_ids[i]])];
    for (size_t j = 0; j < p; ++j) xi(static_cast<int>(j)) = fixed_design[j].values[i];
    g.n += 1.0;
    g.xtx += xi * xi.transpose();
    g.xty += outcome[i] * xi;
    g.xs += xi;
    g.ys += outcome[i];
    g.yty += outcome[i] * outcome[i];
  }

  // Coarse scan over the variance ratio (including 0), then golden-section
  // refinement around the best bracket.
  std::vector<double> grid = {0.0};
  for (double lg = -6.0; lg <= 6.0; lg += 0.25) grid.push_back(std::pow(10.0, lg));
  double best_ratio = 0.0;
  double best_f = reml_criterion(pr, 0.0);
  size_t best_idx = 0;
  for (size_t i = 1; i < grid.size(); ++i) {
    double f = reml_criterion(pr, grid[i]);
    if (f < best_f) {
      best_f = f;
      best_ratio = grid[i];
      best_idx = i;
    }
  }

  LmmFit fit;
  if (best_idx > 0) {
    double lo = grid[best_idx - 1];
    double hi = best_idx + 1 < grid.size() ? grid[best_idx + 1] : grid[best_idx] * 10.0;
    best_ratio = golden_minimize(pr, lo, hi, 120);
    // accept the boundary if it is as good as the refined interior point
    if (reml_criterion(pr, 0.0) <= reml_criterion(pr, best_ratio)) {
      best_ratio = 0.0;
    }
  }
  fit.boundary = best_ratio == 0.0;
  fit.variance_ratio = best_ratio;
  fit.reml_criterion = reml_criterion(pr, best_ratio);
  fit.converged = std::isfinite(fit.reml_criterion);

  auto parts = assemble(pr, best_ratio);
  Eigen::LDLT<MatrixXd> ldlt(parts.a);
  if (ldlt.info() != Eigen::Success) {
    fit.converged = false;
    return fit;
  }
  VectorXd beta = ldlt.solve(parts.b);
  double rss = parts.c - beta.dot(parts.b);
  double nmp = static_cast<double>(pr.n_total - pr.p);
  fit.sigma2 = rss / nmp;
  fit.tau2 = fit.sigma2 * best_ratio;

  MatrixXd cov = fit.sigma2 * ldlt.solve(MatrixXd::Identity(pr.p, pr.p));
  for (size_t j = 0; j < p; ++j) {
    TestResult tr;
    tr.test_name = fixed_design[j].name;
    tr.statistic = beta(static_cast<int>(j));
    double se = std::sqrt(std::max(0.0, cov(static_cast<int>(j), static_cast<int>(j))));
    fit.se.push_back(se);
    if (se > 0.0) {
      double z = tr.statistic / se;
      tr.p_value = 2.0 * (1.0 - normal_cdf(std::fabs(z)));
    } else {
      tr.p_value = 1.0;
      tr.flagged = true;
    }
    tr.p_method = PMethod::normal_approx;
    tr.n_per_group = {pr.n_total, static_cast<int>(n_groups)};
    tr.flagged = tr.flagged || !fit.converged;
    fit.coefficients.push_back(std::move(tr));
  }
  return fit;
}

}  // namespace wardlab::stats
