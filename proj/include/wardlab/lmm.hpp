#pragma once

#include <string>
#include <vector>

#include "wardlab/stats.hpp"

namespace wardlab::stats {

struct LmmColumn {
  std::string name;
  std::vector<double> values;
};

struct LmmFit {
  std::vector<TestResult> coefficients;  // one per design column, in order
  std::vector<double> se;                // standard error per coefficient
  double sigma2 = 0.0;        // residual variance
  double tau2 = 0.0;          // group intercept variance
  double variance_ratio = 0.0;  // tau2 / sigma2 at the optimum
  bool converged = true;
  bool boundary = false;      // optimum at variance_ratio = 0
  double reml_criterion = 0.0;
};

// Random-intercept linear mixed model fit by REML. The grouping structure
// reduces the profiled criterion to a one-dimensional search over the
// variance ratio; fixed effects get Wald tests against a normal reference
// (documented approximation). With zero fitted group variance the
// coefficients coincide with OLS.
LmmFit lmm_random_intercept(std::span<const double> outcome,
                            const std::vector<LmmColumn>& fixed_design,
                            std::span<const int> group_ids);

}  // namespace wardlab::stats
