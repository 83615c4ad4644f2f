#include "pestab/matkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "pestab/error.hpp"

namespace pestab::matkit {

namespace {

// Pade numerator coefficients b_0..b_m for the orders used below.
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                           302702400.0,   30270240.0,   2162160.0,
                                           110880.0,      3960.0,       90.0,
                                           1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

// Max 1-norm for which each order is accurate to unit roundoff.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

double norm1(const Mat& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

template <std::size_t N>
Mat pade_low_order(const Mat& a, const std::array<double, N>& b) {
  const Eigen::Index n = a.rows();
  const Mat ident = Mat::Identity(n, n);
  const Mat a2 = a * a;
  Mat even = b[0] * ident;
  Mat odd = b[1] * ident;
  Mat power = ident;
  for (std::size_t j = 2; j < N; j += 2) {
    power = power * a2;
    even += b[j] * power;
    if (j + 1 < N) odd += b[j + 1] * power;
  }
  const Mat u = a * odd;
  return (even - u).partialPivLu().solve(even + u);
}

Mat pade13(const Mat& a) {
  const auto& b = kPade13;
  const Eigen::Index n = a.rows();
  const Mat ident = Mat::Identity(n, n);
  const Mat a2 = a * a;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  const Mat u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2);
  const Mat u = a * (u_inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
  const Mat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                b[2] * a2 + b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

// Sort key used everywhere eigenvalues are reported.
bool eig_less(const std::complex<double>& x, const std::complex<double>& y) {
  if (x.real() != y.real()) return x.real() < y.real();
  return x.imag() < y.imag();
}

}  // namespace

void require_square(const Mat& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw ShapeError(std::string(what) + ": expected a square matrix, got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

Mat expm(const Mat& m, double t) {
  require_square(m, "expm");
  if (!std::isfinite(t)) throw DomainError("expm: non-finite time");
  const Eigen::Index n = m.rows();
  if (n == 0) return Mat(0, 0);
  const Mat a = t * m;
  if (!a.allFinite()) throw DomainError("expm: non-finite entries");
  const double nrm = norm1(a);
  if (nrm == 0.0) return Mat::Identity(n, n);
  if (nrm <= kTheta3) return pade_low_order(a, kPade3);
  if (nrm <= kTheta5) return pade_low_order(a, kPade5);
  if (nrm <= kTheta7) return pade_low_order(a, kPade7);
  if (nrm <= kTheta9) return pade_low_order(a, kPade9);

  int squarings = 0;
  if (nrm > kTheta13) squarings = static_cast<int>(std::ceil(std::log2(nrm / kTheta13)));
  Mat r = pade13(std::ldexp(1.0, -squarings) * a);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

std::vector<std::complex<double>> eig(const Mat& m) {
  require_square(m, "eig");
  const Eigen::Index n = m.rows();
  std::vector<std::complex<double>> out;
  if (n == 0) return out;
  if (n == 1) {
    out.emplace_back(m(0, 0), 0.0);
    return out;
  }
  if (n == 2) {
    // sigma^2 - tr*sigma + det
    const double tr = m(0, 0) + m(1, 1);
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    if (auto roots = quad_roots(-tr, det)) {
      out.emplace_back(roots->first, 0.0);
      out.emplace_back(roots->second, 0.0);
    } else {
      const double re = tr / 2.0;
      const double im = std::sqrt(det - re * re);
      out.emplace_back(re, -im);
      out.emplace_back(re, im);
    }
    std::sort(out.begin(), out.end(), eig_less);
    return out;
  }
  Eigen::EigenSolver<Mat> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw ConsistencyError("eig: QR iteration did not converge");
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(solver.eigenvalues()(i));
  std::sort(out.begin(), out.end(), eig_less);
  return out;
}

std::optional<std::pair<double, double>> quad_roots(double a1, double a0) {
  const double disc = a1 * a1 - 4.0 * a0;
  if (disc < 0.0) return std::nullopt;
  // q carries the sign of -a1 so that no cancellation happens; the other
  // root follows from Vieta.
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (a1 + (a1 >= 0.0 ? sq : -sq));
  double r1 = q;
  double r2 = (q != 0.0) ? a0 / q : 0.0;
  if (r1 > r2) std::swap(r1, r2);
  return std::make_pair(r1, r2);
}

double min_sv(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().minCoeff();
}

int rank(const Mat& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  const double top = s.maxCoeff();
  if (top == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * top) ++r;
  }
  return r;
}

double norm2(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

Mat null_space(const Mat& m, double abs_tol) {
  const Eigen::Index n = m.cols();
  if (m.rows() == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > abs_tol) ++r;
  }
  return svd.matrixV().rightCols(n - r);
}

}  // namespace pestab::matkit
