#ifndef STNLM_LINALG_HPP
#define STNLM_LINALG_HPP

#include <cstddef>
#include <vector>

namespace stnlm {

// Minimal row-major dense matrix used by the QR sweep and circuit export.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c) {}
  double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  static Mat identity(int n);
};

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
double max_abs_diff_identity(const Mat& a);  // ||A - I||_max

struct QrResult {
  Mat q;  // m x r, orthonormal columns, r = min(m, k)
  Mat r;  // r x k, upper triangular, non-negative diagonal
  std::vector<int> deficient_columns;  // columns replaced by completion
};

// Thin QR by modified Gram-Schmidt with one reorthogonalization pass.
// Dependent columns get R(j,j) = 0 and a Q column completed deterministically
// by orthogonalizing canonical basis vectors in index order.
QrResult thin_qr(const Mat& b, double tol = 1e-12);

// Extends an isometry (orthonormal columns) to a square orthogonal matrix by
// the same canonical completion.
Mat complete_to_square(const Mat& q, double tol = 1e-12);

}  // namespace stnlm

#endif
