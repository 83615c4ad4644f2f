#include "pestab/gains.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pestab/error.hpp"

namespace pestab {

namespace {

bool is_skew(const Mat& m, double tol) { return (m + m.transpose()).cwiseAbs().maxCoeff() <= tol; }

// Real basis Q with Q^{-1} M Q skew-symmetric, for M with semisimple
// imaginary-axis spectrum.
Mat skew_basis(const Mat& m, double scale) {
  const auto n = m.rows();
  const double tol = 1e-8 * scale;
  Mat q(n, 0);
  const Mat kernel = matkit::null_space(m, tol);
  if (kernel.cols() > 0) {
    q.conservativeResize(n, kernel.cols());
    q = kernel;
  }
  Eigen::EigenSolver<Mat> es(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto lam = es.eigenvalues()(i);
    if (lam.imag() <= tol) continue;
    const Eigen::VectorXcd v = es.eigenvectors().col(i);
    // (a + ib) with A a = -w b, A b = w a gives the block [[0, w], [-w, 0]].
    const Vec a = v.real();
    const Vec b = v.imag();
    const auto c = q.cols();
    q.conservativeResize(n, c + 2);
    q.col(c) = a;
    q.col(c + 1) = b;
  }
  if (q.cols() != n || matkit::rank(q, 1e-10) != n) {
    throw NotNeutrallyStable("neutral_decompose: imaginary-axis block is not diagonalizable");
  }
  return q;
}

}  // namespace

NeutralDecomposition neutral_decompose(const Mat& A, const Mat& B) {
  matkit::require_square(A, "neutral_decompose A");
  if (B.rows() != A.rows()) throw ShapeError("neutral_decompose: B must have as many rows as A");
  const auto n = A.rows();
  const double nrm = matkit::norm2(A);
  const double scale = std::max(nrm, 1.0);
  const double re_tol = 1e-10 * scale;

  const auto eigs = matkit::eig(A);
  std::vector<double> omegas;  // one entry per eigenvalue on the imaginary axis with imag >= 0
  int n_center = 0;
  for (const auto& l : eigs) {
    if (l.real() > re_tol) {
      std::ostringstream os;
      os << "eigenvalue " << l.real() << (l.imag() >= 0 ? "+" : "") << l.imag() << "i has positive real part";
      throw NotNeutrallyStable(os.str());
    }
    if (std::abs(l.real()) <= re_tol) {
      ++n_center;
      if (l.imag() >= -re_tol) omegas.push_back(std::max(l.imag(), 0.0));
    }
  }

  // Cluster imaginary parts; each cluster must be semisimple.
  std::sort(omegas.begin(), omegas.end());
  const double cluster_tol = 1e-6 * scale;
  Mat p = Mat::Identity(n, n);
  for (std::size_t i = 0; i < omegas.size();) {
    std::size_t j = i;
    while (j < omegas.size() && omegas[j] - omegas[i] <= cluster_tol) ++j;
    double w = 0.0;
    for (std::size_t l = i; l < j; ++l) w += omegas[l];
    w /= static_cast<double>(j - i);
    const int mult = static_cast<int>(j - i);
    Mat factor;
    int expected;
    double tol;
    if (w <= cluster_tol) {
      w = 0.0;
      factor = A;
      expected = mult;
      tol = 1e-8 * scale;
    } else {
      factor = A * A + w * w * Mat::Identity(n, n);
      expected = 2 * mult;
      tol = 1e-8 * scale * scale;
    }
    const auto nullity = matkit::null_space(factor, tol).cols();
    if (nullity != expected) {
      std::ostringstream os;
      os << "imaginary-axis eigenvalue with |imag| = " << w << " has a nontrivial Jordan block";
      throw NotNeutrallyStable(os.str());
    }
    p = p * factor;
    i = j;
  }

  NeutralDecomposition d;
  d.n3 = n_center;
  d.n1 = static_cast<int>(n) - n_center;
  if (d.n1 == 0 && is_skew(A, 1e-12 * scale)) {
    d.S = Mat::Identity(n, n);
    d.S_inv = Mat::Identity(n, n);
  } else {
    Eigen::JacobiSVD<Mat> svd(p, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat us = svd.matrixU().leftCols(d.n1);
    Mat vc = svd.matrixV().rightCols(d.n3);
    if (d.n3 > 0) {
      const Mat a3 = vc.transpose() * A * vc;
      if (!is_skew(a3, 1e-10 * scale)) vc = vc * skew_basis(a3, scale);
    }
    d.S_inv.resize(n, n);
    d.S_inv << us, vc;
    d.S = d.S_inv.inverse();
  }
  const Mat t = d.S * A * d.S_inv;
  d.A1 = t.topLeftCorner(d.n1, d.n1);
  d.A2 = t.topRightCorner(d.n1, d.n3);
  d.A3 = t.bottomRightCorner(d.n3, d.n3);
  d.A3 = 0.5 * (d.A3 - d.A3.transpose());
  const Mat sb = d.S * B;
  d.B1 = sb.topRows(d.n1);
  d.B3 = sb.bottomRows(d.n3);

  if (d.n1 > 0 && d.n3 > 0 && (t.bottomLeftCorner(d.n3, d.n1).cwiseAbs().maxCoeff() > 1e-8 * scale)) {
    throw ConsistencyError("neutral_decompose: center block is not invariant");
  }
  if (d.n1 > 0) {
    for (const auto& l : matkit::eig(d.A1)) {
      if (!(l.real() < 0.0)) throw ConsistencyError("neutral_decompose: A1 is not Hurwitz");
    }
  }
  return d;
}

Mat neutral_gain(const Mat& A, const Mat& B, double r) {
  if (!(r > 0.0)) throw DomainError("neutral_gain: r must be positive");
  const NeutralDecomposition d = neutral_decompose(A, B);
  Mat kz = Mat::Zero(B.cols(), A.rows());
  if (d.n3 > 0) kz.rightCols(d.n3) = -r * d.B3.transpose();
  return kz * d.S;
}

Mat di_A() {
  Mat a(2, 2);
  a << 0, 1, 0, 0;
  return a;
}

Mat di_B() {
  Mat b(2, 1);
  b << 0, 1;
  return b;
}

Mat DIGain::base() const {
  Mat b(1, 2);
  b << -rho * k * k / 2.0, -k;
  return b;
}

Mat rescale_gain(const Mat& K, double lambda) {
  if (K.rows() != 1 || K.cols() != 2) throw ShapeError("rescale_gain: K must be 1x2");
  if (!(lambda > 0.0)) throw DomainError("rescale_gain: lambda must be positive");
  Mat out(1, 2);
  out << lambda * lambda * K(0, 0), lambda * K(0, 1);
  return out;
}

DIGain di_gain(const PeClass& cls, double rho, double k, double lambda) {
  const double bound = cls.mu / (2.0 * cls.T);
  if (!(rho > 0.0) || !(rho < bound)) {
    std::ostringstream os;
    os << "di_gain: rho = " << rho << " must satisfy 0 < rho < mu/(2T) = " << bound;
    throw DomainError(os.str());
  }
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("di_gain: k must be positive");
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) throw DomainError("di_gain: lambda must be >= 1");
  DIGain g;
  g.rho = rho;
  g.k = k;
  g.lambda = lambda;
  g.K = rescale_gain(g.base(), lambda);
  // Real negative closed-loop eigenvalues for every constant alpha in [mu/T, 1].
  for (double abar : {cls.ratio(), 1.0}) {
    if (!matkit::quad_roots(abar * k, abar * rho * k * k / 2.0)) {
      throw ConsistencyError("di_gain: complex closed-loop eigenvalues for constant alpha");
    }
  }
  return g;
}

std::pair<double, double> xi_roots(double rho, double k, double abar) {
  const auto r = matkit::quad_roots(abar * k, abar * rho * k * k / 2.0);
  if (!r) throw DomainError("xi_roots: complex roots, need rho <= abar/2");
  return *r;
}

ConeGeometry cone_geometry(double rho, double k, double ratio) {
  if (!(k > 0.0) || !(ratio > 0.0) || !(ratio <= 1.0) || !(rho > 0.0) || !(rho < ratio / 2.0)) {
    throw DomainError("cone_geometry: need 0 < rho < ratio/2 <= 1/2 and k > 0");
  }
  ConeGeometry g;
  g.rho = rho;
  g.k = k;
  g.ratio = ratio;
  g.xi_s_plus = -(k / 2.0) * (1.0 + std::sqrt(1.0 - rho));
  // 1 - sqrt(1 - e) computed as e / (1 + sqrt(1 - e)) to keep digits as rho -> 0.
  const double e = (2.0 - rho / 2.0) * rho;
  g.xi_s_minus = -(k / 2.0) * (e / (1.0 + std::sqrt(1.0 - e)));
  std::tie(g.xi_one_plus, g.xi_one_minus) = xi_roots(rho, k, 1.0);
  std::tie(g.xi_ratio_plus, g.xi_ratio_minus) = xi_roots(rho, k, ratio);
  const double tol = 1e-12 * k;
  const double chain[] = {g.xi_s_plus,      g.xi_one_plus, g.xi_ratio_plus, g.xi_ratio_minus,
                          g.xi_one_minus, g.xi_s_minus,  0.0};
  for (int i = 0; i + 1 < 7; ++i) {
    // near-equal middle roots, and the ratio = 1 roots coinciding with the alpha = 1 ones
    const bool weak = i == 2 || (ratio == 1.0 && (i == 1 || i == 3));
    if (weak ? !(chain[i] <= chain[i + 1] + tol) : !(chain[i] + tol < chain[i + 1])) {
      std::ostringstream os;
      os << "cone_geometry: slope ordering violated at position " << i << " (" << chain[i] << " vs "
         << chain[i + 1] << ")";
      throw ConsistencyError(os.str());
    }
  }
  g.theta_s_plus = std::numbers::pi + std::atan(g.xi_s_plus);
  g.theta_s_minus = std::numbers::pi + std::atan(g.xi_s_minus);
  return g;
}

double ConeGeometry::folded_angle(const Vec& x) {
  double th = std::atan2(x(1), x(0));
  if (th < 0.0) th += std::numbers::pi;
  return th;
}

Cone ConeGeometry::cone(const Vec& x) const {
  const double th = folded_angle(x);
  if (th < theta_s_plus) return Cone::C2;
  if (th > theta_s_minus) return Cone::C1;
  return Cone::Cs;
}

bool ConeGeometry::in_C1(const Vec& x) const { return folded_angle(x) >= theta_s_minus; }
bool ConeGeometry::in_Cs(const Vec& x) const {
  const double th = folded_angle(x);
  return th >= theta_s_plus && th <= theta_s_minus;
}
bool ConeGeometry::in_C2(const Vec& x) const { return folded_angle(x) <= theta_s_plus; }
bool ConeGeometry::on_boundary(const Vec& x) const {
  const double th = folded_angle(x);
  return th == theta_s_plus || th == theta_s_minus;
}

double ConeGeometry::c_rho() const {
  const double sp = xi_s_plus / k;
  const double sm = xi_s_minus / k;
  auto g = [&](double s) { return (s * s + s + rho / 2.0) / (s * s + 1.0); };
  double best = std::min({g(sp), g(sm), 1.0});
  const double b = 2.0 - rho;
  const double disc = std::sqrt(b * b + 4.0);
  for (double s : {(b + disc) / 2.0, (b - disc) / 2.0}) {
    if (s <= sp || s >= sm) best = std::min(best, g(s));
  }
  return best;
}

Mat multi_input_gain(const Mat& B, double k) {
  if (B.rows() != 2) throw ShapeError("multi_input_gain: B must have 2 rows");
  if (!(k > 0.0)) throw DomainError("multi_input_gain: k must be positive");
  if (B.cols() < 2 || matkit::min_sv(B) <= 1e-10 * matkit::norm2(B)) {
    throw RankDeficiencyError("multi_input_gain: B has rank < 2; use the scalar-input double-integrator gain");
  }
  Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec s = svd.singularValues();
  const Mat pinv = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  return -k * pinv;
}

}  // namespace pestab
