#pragma once

#include <cmath>
#include <vector>

namespace fedsoft::linalg {

// Solve A x = b for symmetric positive-definite A (row-major d*d) via
// Cholesky. Returns false when a pivot falls below tolerance (A singular or
// not positive definite). A and b are taken by value; callers keep the
// originals for residual checks.
inline bool cholesky_solve(std::vector<double> A, std::vector<double> b, std::vector<double>& x) {
  const size_t d = b.size();
  double max_diag = 0.0;
  for (size_t i = 0; i < d; ++i) max_diag = std::max(max_diag, std::fabs(A[i * d + i]));
  const double tol = std::max(max_diag, 1.0) * 1e-13;

  // In-place lower-triangular factor.
  for (size_t j = 0; j < d; ++j) {
    double diag = A[j * d + j];
    for (size_t k = 0; k < j; ++k) diag -= A[j * d + k] * A[j * d + k];
    if (diag <= tol) return false;
    const double ljj = std::sqrt(diag);
    A[j * d + j] = ljj;
    for (size_t i = j + 1; i < d; ++i) {
      double v = A[i * d + j];
      for (size_t k = 0; k < j; ++k) v -= A[i * d + k] * A[j * d + k];
      A[i * d + j] = v / ljj;
    }
  }
  // Forward then backward substitution.
  for (size_t i = 0; i < d; ++i) {
    double v = b[i];
    for (size_t k = 0; k < i; ++k) v -= A[i * d + k] * b[k];
    b[i] = v / A[i * d + i];
  }
  for (size_t ii = d; ii > 0; --ii) {
    const size_t i = ii - 1;
    double v = b[i];
    for (size_t k = i + 1; k < d; ++k) v -= A[k * d + i] * b[k];
    b[i] = v / A[i * d + i];
  }
  x = std::move(b);
  return true;
}

inline std::vector<double> matvec(const std::vector<double>& A, const std::vector<double>& x) {
  const size_t d = x.size();
  std::vector<double> y(d, 0.0);
  for (size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (size_t j = 0; j < d; ++j) s += A[i * d + j] * x[j];
    y[i] = s;
  }
  return y;
}

}  // namespace fedsoft::linalg
