#include "stnlm/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace stnlm {

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Mat transpose(const Mat& a) {
  Mat out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

double max_abs_diff_identity(const Mat& a) {
  double m = 0.0;
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j)
      m = std::max(m, std::abs(a(i, j) - (i == j ? 1.0 : 0.0)));
  return m;
}

namespace {

double column_dot(const std::vector<double>& q, int m, int col_q,
                  int stride_q, const std::vector<double>& x) {
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += q[static_cast<std::size_t>(i) * stride_q + col_q] * x[i];
  return s;
}

// Orthogonalizes x against the first `ncols` columns of q (twice), returns
// the residual norm.
double orthogonalize(const Mat& q, int ncols, std::vector<double>& x,
                     std::vector<double>* coeffs) {
  for (int pass = 0; pass < 2; ++pass) {
    for (int j = 0; j < ncols; ++j) {
      const double d = column_dot(q.v, q.rows, j, q.cols, x);
      if (coeffs != nullptr) (*coeffs)[j] += d;
      for (int i = 0; i < q.rows; ++i) x[i] -= d * q(i, j);
    }
  }
  double n2 = 0.0;
  for (double v : x) n2 += v * v;
  return std::sqrt(n2);
}

// First canonical basis vector with a usable residual, orthogonalized
// against the existing columns. Index order makes the choice deterministic.
std::vector<double> canonical_completion(const Mat& q, int ncols) {
  const int m = q.rows;
  for (int e = 0; e < m; ++e) {
    std::vector<double> x(m, 0.0);
    x[e] = 1.0;
    const double norm = orthogonalize(q, ncols, x, nullptr);
    if (norm > 0.5 / std::sqrt(static_cast<double>(m))) {
      for (double& v : x) v /= norm;
      return x;
    }
  }
  // Unreachable for ncols < m: m orthonormal columns cannot exclude all of
  // the canonical basis this strongly.
  return std::vector<double>(m, 0.0);
}

}  // namespace

QrResult thin_qr(const Mat& b, double tol) {
  const int m = b.rows;
  const int k = b.cols;
  const int r = std::min(m, k);
  QrResult res;
  res.q = Mat(m, r);
  res.r = Mat(r, k);

  std::vector<double> x(m);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < m; ++i) x[i] = b(i, j);
    const int ncols = std::min(j, r);
    std::vector<double> coeffs(ncols, 0.0);
    const double norm = orthogonalize(res.q, ncols, x, &coeffs);
    for (int i = 0; i < ncols; ++i) res.r(i, j) = coeffs[i];
    if (j >= r) continue;  // wide matrix: remaining columns only project
    if (norm > tol) {
      res.r(j, j) = norm;
      for (int i = 0; i < m; ++i) res.q(i, j) = x[i] / norm;
    } else {
      res.r(j, j) = 0.0;
      res.deficient_columns.push_back(j);
      const std::vector<double> fill = canonical_completion(res.q, j);
      for (int i = 0; i < m; ++i) res.q(i, j) = fill[i];
    }
  }
  return res;
}

Mat complete_to_square(const Mat& q, double tol) {
  (void)tol;
  const int m = q.rows;
  Mat out(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < q.cols; ++j) out(i, j) = q(i, j);
  for (int j = q.cols; j < m; ++j) {
    const std::vector<double> fill = canonical_completion(out, j);
    for (int i = 0; i < m; ++i) out(i, j) = fill[i];
  }
  return out;
}

}  // namespace stnlm
