#include "pestab/reachability.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "pestab/error.hpp"

namespace pestab {

Mat gramian_piece(const Mat& A, const Mat& B, double h) {
  const auto n = A.rows();
  Mat m = Mat::Zero(2 * n, 2 * n);
  m.topLeftCorner(n, n) = A;
  m.topRightCorner(n, n) = B * B.transpose();
  m.bottomRightCorner(n, n) = -A.transpose();
  const Mat f = matkit::expm(m, h);
  const Mat g = f.topRightCorner(n, n) * f.topLeftCorner(n, n).transpose();
  return 0.5 * (g + g.transpose());
}

GramianReport gramian(const Mat& A, const Mat& B, const PwcSignal& alpha, double t) {
  matkit::require_square(A, "gramian A");
  if (B.rows() != A.rows()) throw ShapeError("gramian: B must have as many rows as A");
  if (!(t > 0.0)) throw DomainError("gramian: t must be positive");
  const auto n = A.rows();

  std::vector<double> cuts{0.0};
  for (double s : alpha.switch_times(0.0, t)) cuts.push_back(s);
  cuts.push_back(t);

  std::map<double, std::pair<Mat, Mat>> cache;  // h -> (e^{Ah}, piece)
  Mat W = Mat::Zero(n, n);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double h = cuts[i + 1] - cuts[i];
    if (!(h > 0.0)) continue;
    const double a = alpha(0.5 * (cuts[i] + cuts[i + 1]));
    auto it = cache.find(h);
    if (it == cache.end()) it = cache.emplace(h, std::make_pair(matkit::expm(A, h), gramian_piece(A, B, h))).first;
    const auto& [E, G] = it->second;
    W = E * W * E.transpose();
    if (a != 0.0) W += (a * a) * G;
  }
  W = 0.5 * (W + W.transpose());

  GramianReport rep;
  rep.t = t;
  rep.W = W;
  rep.min_sv = matkit::min_sv(W);
  const double scale = W.trace() / static_cast<double>(n);
  rep.controllable = scale > 0.0 && rep.min_sv > 1e-9 * scale;
  if (!rep.controllable) {
    Eigen::SelfAdjointEigenSolver<Mat> es(W);
    Vec p = es.eigenvectors().col(0);
    rep.witness = p / p.norm();
  }
  return rep;
}

int kalman_rank(const Mat& A, const Mat& B) {
  matkit::require_square(A, "kalman_rank A");
  if (B.rows() != A.rows()) throw ShapeError("kalman_rank: B must have as many rows as A");
  const auto n = A.rows();
  const auto m = B.cols();
  if (m == 0 || B.isZero(0.0)) return 0;
  Mat c(n, n * m);
  Mat block = B;
  for (Eigen::Index i = 0; i < n; ++i) {
    c.middleCols(i * m, m) = block;
    block = A * block;
  }
  return matkit::rank(c, 1e-10);
}

ThresholdResult threshold_check(const Mat& A, const Mat& B, const PeClass& cls, double t,
                                const std::vector<BatteryMember>& battery) {
  if (kalman_rank(A, B) != A.rows()) throw PreconditionError("threshold_check: (A, B) is not controllable");
  if (!(t > 0.0)) throw DomainError("threshold_check: t must be positive");
  ThresholdResult res;
  res.t = t;
  res.cls = cls;
  res.scale = gramian(A, B, PwcSignal::constant(1.0), t).W.trace() / static_cast<double>(A.rows());
  res.adversarial = t <= cls.T - cls.mu + 1e-12;
  if (res.adversarial) {
    const PwcSignal alpha = make_zero_prefix(cls, t);
    const GramianReport rep = gramian(A, B, alpha, t);
    res.min_sv = rep.min_sv;
    res.witness = rep.witness;
    res.worst_label = "zero_prefix";
    res.signals_checked = 1;
    res.claim = !rep.controllable;
    return res;
  }
  if (battery.empty()) throw InsufficientDataError("threshold_check: empty battery");
  bool all = true;
  res.min_sv = std::numeric_limits<double>::infinity();
  for (const auto& member : battery) {
    const GramianReport rep = gramian(A, B, member.signal, t);
    all = all && rep.controllable;
    if (rep.min_sv < res.min_sv) {
      res.min_sv = rep.min_sv;
      res.worst_label = member.label;
      res.witness = rep.witness;
    }
  }
  res.signals_checked = static_cast<int>(battery.size());
  res.claim = all;
  return res;
}

}  // namespace pestab
