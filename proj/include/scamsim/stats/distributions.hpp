#pragma once

namespace scamsim::stats {

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Regularized lower incomplete gamma P(a, x); Q = 1 - P.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double normal_cdf(double z);
double normal_sf(double z);

double t_cdf(double t, double df);
/// P(|T| >= |t|).
double t_two_sided_p(double t, double df);
double t_quantile(double p, double df);

double f_cdf(double f, double df1, double df2);
double f_sf(double f, double df1, double df2);
double f_quantile(double p, double df1, double df2);

double chi2_sf(double x, double df);

/// Noncentral F CDF as a Poisson(λ/2) mixture of central beta terms.
double noncentral_f_cdf(double f, double df1, double df2, double lambda);

}  // namespace scamsim::stats
