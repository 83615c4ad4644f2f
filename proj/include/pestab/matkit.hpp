#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pestab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace matkit {

/// exp(t*M) by scaling and squaring with a diagonal Pade approximant
/// (orders 3..13, Higham's 1-norm thresholds).
Mat expm(const Mat& m, double t = 1.0);

/// Eigenvalues with algebraic multiplicity, sorted by (real, imag).
/// Closed form for n <= 2.
std::vector<std::complex<double>> eig(const Mat& m);

/// Roots (plus, minus) of xi^2 + a1*xi + a0 with plus <= minus, or nullopt for
/// a complex-conjugate pair.
std::optional<std::pair<double, double>> quad_roots(double a1, double a0);

double min_sv(const Mat& m);

/// Numerical rank at relative singular-value tolerance `rel_tol` * sigma_max.
int rank(const Mat& m, double rel_tol);

/// Induced 2-norm.
double norm2(const Mat& m);

/// Orthonormal basis of the span of right singular vectors whose singular
/// value is <= abs_tol.
Mat null_space(const Mat& m, double abs_tol);

void require_square(const Mat& m, const char* what);

}  // namespace matkit
}  // namespace pestab
