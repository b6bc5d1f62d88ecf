#pragma once

#include <Eigen/Dense>

namespace scamsim::stats {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct OlsFit {
  Vector coeffs;
  Vector residuals;
  Vector hat_diagonal;
  double ss_residual = 0.0;
  Matrix xtx_inverse;  // (XᵀX)⁻¹
  int n = 0;
  int p = 0;

  int df_residual() const { return n - p; }
};

/// Least squares via column-pivoting QR. Requires full column rank and n ≥ p + 1.
OlsFit fit_ols(const Matrix& x, const Vector& y);

/// s²(XᵀX)⁻¹ with s² = SSR / (n − p).
Matrix classical_covariance(const OlsFit& fit);

/// (XᵀX)⁻¹ Xᵀ diag(e²/(1−h)²) X (XᵀX)⁻¹.
Matrix hc3_covariance(const Matrix& x, const Vector& residuals, const Vector& hat_diagonal);

struct BreuschPagan {
  double lm = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Koenker's studentized form: n·R² of e² regressed on the design, χ²(p − 1).
BreuschPagan breusch_pagan(const Matrix& x, const Vector& residuals);

}  // namespace scamsim::stats
