#include "scamsim/stats/power.hpp"

#include "scamsim/error.hpp"
#include "scamsim/stats/distributions.hpp"

namespace scamsim::stats {

double anova_power(int k, int n, double f, double alpha) {
  const double df1 = k - 1;
  const double df2 = static_cast<double>(k) * (n - 1);
  const double lambda = f * f * k * n;
  const double crit = f_quantile(1.0 - alpha, df1, df2);
  return 1.0 - noncentral_f_cdf(crit, df1, df2, lambda);
}

int power_n_per_group(int k, double f, double alpha, double power) {
  if (k < 2) fail(ErrorCode::InvalidArgument, "need at least 2 groups");
  if (!(f > 0)) fail(ErrorCode::InvalidArgument, "effect size must be positive");
  if (!(alpha > 0 && alpha < power && power < 1)) {
    fail(ErrorCode::InvalidArgument, "need 0 < alpha < power < 1");
  }
  constexpr int kCap = 1000000;
  int lo = 2;
  if (anova_power(k, lo, f, alpha) >= power) return lo;
  int hi = 4;
  while (anova_power(k, hi, f, alpha) < power) {
    lo = hi;
    if (hi >= kCap) fail(ErrorCode::NoConvergence, "required n exceeds 10^6 per group");
    hi = hi * 2 > kCap ? kCap : hi * 2;
  }
  // Power is increasing in n: lo fails, hi succeeds.
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (anova_power(k, mid, f, alpha) >= power) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace scamsim::stats
