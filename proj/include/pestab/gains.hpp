#pragma once

#include "pestab/matkit.hpp"
#include "pestab/signals.hpp"

namespace pestab {

/// z = S x puts A in the form [[A1, A2], [0, A3]] with A1 Hurwitz (n1 x n1)
/// and A3 skew-symmetric (n3 x n3); [B1; B3] = S B.
struct NeutralDecomposition {
  Mat S;
  Mat S_inv;
  int n1 = 0;
  int n3 = 0;
  Mat A1, A2, A3;
  Mat B1, B3;
};

NeutralDecomposition neutral_decompose(const Mat& A, const Mat& B);

/// K = (0, -r B3^T) S. Depends on neither T nor mu.
Mat neutral_gain(const Mat& A, const Mat& B, double r = 1.0);

/// Planar double integrator x1' = x2, x2' = u.
Mat di_A();
Mat di_B();

/// K_lambda = (-lambda^2 rho k^2 / 2, -lambda k).
struct DIGain {
  double rho = 0.0;
  double k = 0.0;
  double lambda = 1.0;
  Mat K;  // 1 x 2

  /// Base gain (-rho k^2/2, -k) of the same family.
  Mat base() const;
  double k1() const { return -K(0, 0); }
  double k2() const { return -K(0, 1); }
};

DIGain di_gain(const PeClass& cls, double rho, double k, double lambda = 1.0);

/// Gain (-k1, -k2) and (-lambda^2 k1, -lambda k2).
Mat rescale_gain(const Mat& K, double lambda);

/// Upper half-plane sectors of the double integrator under the base gain.
enum class Cone { C1, Cs, C2 };

struct ConeGeometry {
  double rho = 0.0;
  double k = 0.0;
  double ratio = 0.0;
  double xi_s_plus = 0.0, xi_s_minus = 0.0;
  double xi_one_plus = 0.0, xi_one_minus = 0.0;
  double xi_ratio_plus = 0.0, xi_ratio_minus = 0.0;
  double theta_s_plus = 0.0;   // polar angle of D^s_+ in (pi/2, pi)
  double theta_s_minus = 0.0;  // polar angle of D^s_-

  /// Angle folded into [0, pi] (x and -x share a sector).
  static double folded_angle(const Vec& x);
  Cone cone(const Vec& x) const;
  bool in_C1(const Vec& x) const;
  bool in_Cs(const Vec& x) const;
  bool in_C2(const Vec& x) const;
  bool in_C1_or_C2(const Vec& x) const { return !in_Cs(x) || on_boundary(x); }
  bool on_boundary(const Vec& x) const;

  /// Closed-form optimum of the constant c(rho) for which
  /// tau^2 + k tau + rho k^2/2 >= c (tau^2 + k^2) outside (xi_s_plus, xi_s_minus).
  double c_rho() const;
};

/// Roots xi_+ <= xi_- of xi^2 + abar k xi + abar rho k^2 / 2.
std::pair<double, double> xi_roots(double rho, double k, double abar);

ConeGeometry cone_geometry(double rho, double k, double ratio);

/// K = -k B^+ (minimum-norm right inverse), so that B K = -k I.
Mat multi_input_gain(const Mat& B, double k);

}  // namespace pestab
