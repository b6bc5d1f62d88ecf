#include "scamsim/stats/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scamsim/error.hpp"

namespace scamsim::stats {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 10000;

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  fail(ErrorCode::NoConvergence, "incomplete beta continued fraction did not converge");
}

double gamma_series(double a, double x) {
  double sum = 1.0 / a;
  double del = sum;
  double ap = a;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) {
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  fail(ErrorCode::NoConvergence, "incomplete gamma series did not converge");
}

double gamma_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  }
  fail(ErrorCode::NoConvergence, "incomplete gamma continued fraction did not converge");
}

template <typename Fn>
double bisect_increasing(Fn&& fn, double target, double lo, double hi) {
  while (fn(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) fail(ErrorCode::NoConvergence, "quantile search diverged");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (fn(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-14 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (a <= 0 || b <= 0) fail(ErrorCode::InvalidArgument, "incomplete beta needs a, b > 0");
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double gamma_p(double a, double x) {
  if (a <= 0) fail(ErrorCode::InvalidArgument, "incomplete gamma needs a > 0");
  if (x <= 0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_cf(a, x);
}

double gamma_q(double a, double x) {
  if (a <= 0) fail(ErrorCode::InvalidArgument, "incomplete gamma needs a > 0");
  if (x <= 0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_cf(a, x);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double t_cdf(double t, double df) {
  if (df <= 0) fail(ErrorCode::InvalidArgument, "t distribution needs df > 0");
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return t >= 0 ? 1.0 - tail : tail;
}

double t_two_sided_p(double t, double df) {
  if (df <= 0) fail(ErrorCode::InvalidArgument, "t distribution needs df > 0");
  if (!std::isfinite(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

double t_quantile(double p, double df) {
  if (!(p > 0 && p < 1)) fail(ErrorCode::InvalidArgument, "quantile needs 0 < p < 1");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -t_quantile(1.0 - p, df);
  return bisect_increasing([&](double t) { return t_cdf(t, df); }, p, 0.0, 1.0);
}

double f_cdf(double f, double df1, double df2) {
  if (df1 <= 0 || df2 <= 0) fail(ErrorCode::InvalidArgument, "F distribution needs positive df");
  if (f <= 0) return 0.0;
  return incomplete_beta(df1 / 2.0, df2 / 2.0, df1 * f / (df1 * f + df2));
}

double f_sf(double f, double df1, double df2) {
  if (df1 <= 0 || df2 <= 0) fail(ErrorCode::InvalidArgument, "F distribution needs positive df");
  if (f <= 0) return 1.0;
  if (!std::isfinite(f)) return 0.0;
  return incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

double f_quantile(double p, double df1, double df2) {
  if (!(p > 0 && p < 1)) fail(ErrorCode::InvalidArgument, "quantile needs 0 < p < 1");
  return bisect_increasing([&](double f) { return f_cdf(f, df1, df2); }, p, 0.0, 1.0);
}

double chi2_sf(double x, double df) {
  if (df <= 0) fail(ErrorCode::InvalidArgument, "chi-square needs df > 0");
  if (x <= 0) return 1.0;
  return gamma_q(df / 2.0, x / 2.0);
}

double noncentral_f_cdf(double f, double df1, double df2, double lambda) {
  if (lambda < 0) fail(ErrorCode::InvalidArgument, "noncentrality must be >= 0");
  if (f <= 0) return 0.0;
  if (lambda == 0) return f_cdf(f, df1, df2);
  const double x = df1 * f / (df1 * f + df2);
  const double half = lambda / 2.0;
  // Sum outward from the Poisson mode so large λ keeps full precision.
  const long mode = static_cast<long>(std::floor(half));
  auto weight = [&](long j) { return std::exp(-half + j * std::log(half) - std::lgamma(j + 1.0)); };
  auto term = [&](long j) { return weight(j) * incomplete_beta(df1 / 2.0 + j, df2 / 2.0, x); };
  double sum = term(mode);
  double mass = weight(mode);
  for (long j = mode + 1; j < mode + 100000; ++j) {
    const double w = weight(j);
    sum += w * incomplete_beta(df1 / 2.0 + j, df2 / 2.0, x);
    mass += w;
    if (w < 1e-17 && j > mode + 10) break;
  }
  for (long j = mode - 1; j >= 0; --j) {
    const double w = weight(j);
    sum += w * incomplete_beta(df1 / 2.0 + j, df2 / 2.0, x);
    mass += w;
    if (w < 1e-17) break;
  }
  if (std::fabs(mass - 1.0) > 1e-9) fail(ErrorCode::NoConvergence, "noncentral F mixture did not converge");
  return sum;
}

}  // namespace scamsim::stats
