#include "scamsim/stats/ols.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scamsim/error.hpp"
#include "scamsim/stats/distributions.hpp"

namespace scamsim::stats {

namespace {

Matrix xtx_inverse_from(const Eigen::ColPivHouseholderQR<Matrix>& qr, int p) {
  const Matrix r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Matrix r_inv = r.triangularView<Eigen::Upper>().solve(Matrix::Identity(p, p));
  const Matrix perm = qr.colsPermutation();
  return perm * (r_inv * r_inv.transpose()) * perm.transpose();
}

}  // namespace

OlsFit fit_ols(const Matrix& x, const Vector& y) {
  const auto n = static_cast<int>(x.rows());
  const auto p = static_cast<int>(x.cols());
  if (y.size() != n) fail(ErrorCode::InvalidArgument, "design rows and response length differ");
  if (p == 0) fail(ErrorCode::InvalidArgument, "design has no columns");
  if (n < p + 1) {
    fail(ErrorCode::TooFewRows, "need at least " + std::to_string(p + 1) + " rows, got " + std::to_string(n));
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    fail(ErrorCode::RankDeficient, "design has rank " + std::to_string(qr.rank()) + " < " + std::to_string(p));
  }

  OlsFit fit;
  fit.n = n;
  fit.p = p;
  fit.coeffs = qr.solve(y);
  fit.residuals = y - x * fit.coeffs;
  fit.ss_residual = fit.residuals.squaredNorm();

  fit.xtx_inverse = xtx_inverse_from(qr, p);

  const Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  fit.hat_diagonal = q.rowwise().squaredNorm();
  return fit;
}

Matrix classical_covariance(const OlsFit& fit) {
  const double s2 = fit.ss_residual / fit.df_residual();
  return s2 * fit.xtx_inverse;
}

Matrix hc3_covariance(const Matrix& x, const Vector& residuals, const Vector& hat_diagonal) {
  const auto n = x.rows();
  if (residuals.size() != n || hat_diagonal.size() != n) {
    fail(ErrorCode::InvalidArgument, "hc3 inputs have mismatched lengths");
  }
  Vector omega(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double one_minus_h = 1.0 - hat_diagonal[i];
    if (one_minus_h <= 1e-10) {
      fail(ErrorCode::LeverageOne, "row " + std::to_string(i) + " has leverage 1");
    }
    omega[i] = residuals[i] * residuals[i] / (one_minus_h * one_minus_h);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols()) fail(ErrorCode::RankDeficient, "hc3 design is rank deficient");
  const Matrix xtx_inv = xtx_inverse_from(qr, static_cast<int>(x.cols()));
  const Matrix meat = x.transpose() * omega.asDiagonal() * x;
  Matrix v = xtx_inv * meat * xtx_inv;
  return 0.5 * (v + v.transpose());
}

BreuschPagan breusch_pagan(const Matrix& x, const Vector& residuals) {
  const auto n = static_cast<int>(x.rows());
  const auto p = static_cast<int>(x.cols());
  if (n <= p + 1) fail(ErrorCode::TooFewRows, "Breusch-Pagan needs n > p + 1");
  BreuschPagan bp;
  bp.df = p - 1;
  const Vector e2 = residuals.array().square().matrix();
  const double mean = e2.mean();
  const double sst = (e2.array() - mean).square().sum();
  if (bp.df == 0 || sst <= 1e-300 * std::max(1.0, mean * mean)) return bp;
  const OlsFit aux = fit_ols(x, e2);
  const double r2 = 1.0 - aux.ss_residual / sst;
  bp.lm = n * std::max(0.0, r2);
  bp.p_value = chi2_sf(bp.lm, bp.df);
  return bp;
}

}  // namespace scamsim::stats
