#include "pestab/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "pestab/adversary.hpp"
#include "pestab/error.hpp"
#include "pestab/parallel.hpp"
#include "pestab/reachability.hpp"

namespace pestab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cross2(const Vec& a, const Vec& b) { return a(0) * b(1) - a(1) * b(0); }

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Root of f(expm(M s) x_a) in (0, len] given a sign change; returns s.
template <typename F>
double segment_root(const Mat& m, const Vec& x_a, double len, F&& f) {
  double lo = 0.0;
  double hi = len;
  double f_lo = f(x_a);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * len; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(Vec(matkit::expm(m, mid) * x_a));
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

bool sign_change(double a, double b) { return a != 0.0 && (b == 0.0 || (a > 0.0) != (b > 0.0)); }

// Functional vanishing on the line x2 = slope * x1.
struct Line {
  double slope;
  double operator()(const Vec& x) const { return x(1) - slope * x(0); }
};

// Pieces [t_a, t_b] of the trajectory labelled by a predicate that can only
// change where one of `lines` is crossed.
template <typename Pred>
std::vector<Sojourn> label_pieces(const Trajectory& traj, const std::vector<Line>& lines, Pred&& inside) {
  struct Piece {
    double a, b;
    bool in;
  };
  std::vector<Piece> pieces;
  for (std::size_t i = 0; i < traj.segments(); ++i) {
    const double ta = traj.times[i];
    const double tb = traj.times[i + 1];
    const double len = tb - ta;
    const Vec& xa = traj.states[i];
    const Vec& xb = traj.states[i + 1];
    std::vector<double> cuts;
    const Mat m = traj.generator(i);
    for (const Line& l : lines) {
      if (sign_change(l(xa), l(xb))) cuts.push_back(ta + segment_root(m, xa, len, l));
    }
    std::sort(cuts.begin(), cuts.end());
    double start = ta;
    cuts.push_back(tb);
    for (double c : cuts) {
      if (c <= start) continue;
      const double mid = 0.5 * (start + c);
      const bool in = inside(Vec(matkit::expm(m, mid - ta) * xa));
      if (!pieces.empty() && pieces.back().in == in) {
        pieces.back().b = c;
      } else {
        pieces.push_back({start, c, in});
      }
      start = c;
    }
  }
  std::vector<Sojourn> out;
  for (const Piece& p : pieces) {
    if (!p.in) continue;
    Sojourn s;
    s.t_begin = p.a;
    s.t_end = p.b;
    s.open_begin = p.a == traj.start();
    s.open_end = p.b == traj.end();
    out.push_back(s);
  }
  return out;
}

double theta_at(const Trajectory& traj, const std::vector<double>& theta, double t) {
  const std::size_t j = segment_of(traj, t);
  const Vec x = state_at(traj, t);
  const Vec& xj = traj.states[j];
  return theta[j] + std::atan2(cross2(xj, x), xj.dot(x));
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Trajectory> simulate_batch(const Mat& A, const Mat& B, const Mat& K, const std::vector<RunSpec>& runs,
                                       double horizon, double max_step, int workers) {
  std::vector<Trajectory> out(runs.size());
  parallel_for(runs.size(), workers, [&](std::size_t i) {
    const ClosedLoop sys = ClosedLoop::make(A, B, K, runs[i].signal);
    out[i] = propagate(sys, 0.0, runs[i].x0, horizon, max_step);
    out[i].label = runs[i].label;
  });
  return out;
}

std::vector<Vec> circle_grid(int n, double offset) {
  std::vector<Vec> out;
  for (int j = 0; j < n; ++j) {
    const double a = offset + 2.0 * std::numbers::pi * j / n;
    out.push_back(vec2(std::cos(a), std::sin(a)));
  }
  return out;
}

std::vector<Vec> f_angle_grid(int n, double k) {
  std::vector<Vec> out;
  for (int j = 0; j < n; ++j) {
    const double phi = 2.0 * std::numbers::pi * (j + 0.5) / n;
    Vec v = vec2(std::cos(phi), k * std::sin(phi));
    out.push_back(v / v.norm());
  }
  return out;
}

std::vector<RunSpec> cross_runs(const std::vector<BatteryMember>& signals, const std::vector<Vec>& x0s) {
  std::vector<RunSpec> runs;
  runs.reserve(signals.size() * x0s.size());
  for (const auto& s : signals) {
    for (std::size_t j = 0; j < x0s.size(); ++j) {
      runs.push_back({s.label + "/x" + std::to_string(j), s.signal, x0s[j]});
    }
  }
  return runs;
}

Trajectory slice(const Trajectory& traj, double t_a, double t_b) {
  if (!(t_a < t_b) || t_a < traj.start() || t_b > traj.end()) throw DomainError("slice: bad interval");
  Trajectory out;
  out.drift = traj.drift;
  out.gain_term = traj.gain_term;
  out.label = traj.label;
  out.times.push_back(t_a);
  out.states.push_back(state_at(traj, t_a));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    if (t <= t_a || t >= t_b) continue;
    out.alpha_values.push_back(traj.alpha_values[segment_of(traj, 0.5 * (out.times.back() + t))]);
    out.times.push_back(t);
    out.states.push_back(traj.states[i]);
  }
  out.alpha_values.push_back(traj.alpha_values[segment_of(traj, 0.5 * (out.times.back() + t_b))]);
  out.times.push_back(t_b);
  out.states.push_back(state_at(traj, t_b));
  return out;
}

// ---------------------------------------------------------------------------

DecayFit decay_rate(const Trajectory& traj, double t_start) {
  if (traj.size() == 0 || t_start < traj.start() || t_start > traj.end()) {
    throw DomainError("decay_rate: t_start outside the trajectory");
  }
  std::vector<double> tau, y;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] < t_start) continue;
    const double nrm = traj.states[i].norm();
    if (!(nrm > 0.0)) throw DegenerateStateError("decay_rate: zero state");
    tau.push_back(traj.times[i] - t_start);
    y.push_back(std::log(nrm));
  }
  const auto n = tau.size();
  if (n < 10) throw InsufficientDataError("decay_rate: fewer than 10 samples after t_start");
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mt += tau[i];
    my += y[i];
  }
  mt /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sty = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sty += (tau[i] - mt) * (y[i] - my);
    stt += (tau[i] - mt) * (tau[i] - mt);
  }
  const double slope = stt > 0.0 ? sty / stt : 0.0;
  const double intercept = my - slope * mt;
  DecayFit fit;
  fit.gamma_hat = -slope;
  fit.C_hat = std::exp(intercept);
  for (std::size_t i = 0; i < n; ++i) {
    fit.residual = std::max(fit.residual, std::abs(y[i] - (intercept + slope * tau[i])));
  }
  fit.accepted = fit.residual <= 1e-6;
  fit.samples = static_cast<int>(n);
  return fit;
}

namespace {

struct Pt {
  double t, l;
};

// Upper concave hull, points sorted by t.
std::vector<Pt> upper_hull(std::vector<Pt> pts) {
  std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.t < b.t || (a.t == b.t && a.l < b.l); });
  std::vector<Pt> h;
  for (const Pt& p : pts) {
    while (h.size() >= 2) {
      const Pt& a = h[h.size() - 2];
      const Pt& b = h.back();
      if ((b.t - a.t) * (p.l - a.l) - (b.l - a.l) * (p.t - a.t) >= 0.0) {
        h.pop_back();
      } else {
        break;
      }
    }
    if (!h.empty() && h.back().t == p.t) h.back() = p;
    else h.push_back(p);
  }
  return h;
}

double hull_at(const std::vector<Pt>& h, double t) {
  if (t <= h.front().t) return h.front().l;
  if (t >= h.back().t) return h.back().l;
  const auto it = std::lower_bound(h.begin(), h.end(), t, [](const Pt& p, double v) { return p.t < v; });
  const Pt& b = *it;
  const Pt& a = *(it - 1);
  return a.l + (b.l - a.l) * (t - a.t) / (b.t - a.t);
}

}  // namespace

Certificate kl_envelope(const std::vector<Trajectory>& batch) {
  if (batch.size() < 10) throw InsufficientDataError("kl_envelope: need at least 10 trajectories");
  Certificate c;
  c.name = "kl_envelope";
  c.tolerance = 0.0;
  std::vector<Pt> pts;
  std::string culprit;
  double worst_final = -kInf;
  double t_end = 0.0;
  bool finite = true;
  for (const Trajectory& tr : batch) {
    const double n0 = tr.states.front().norm();
    if (!(n0 > 0.0)) throw DegenerateStateError("kl_envelope: zero initial state in " + tr.label);
    double last = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double n = tr.states[i].norm();
      const double l = std::log(n / n0);
      if (!std::isfinite(l) && !(n == 0.0)) {
        finite = false;
        culprit = tr.label;
      }
      if (std::isfinite(l)) pts.push_back({tr.times[i] - tr.start(), l});
      last = l;
    }
    t_end = std::max(t_end, tr.end() - tr.start());
    if (last > worst_final) {
      worst_final = last;
      if (finite) culprit = tr.label;
    }
  }
  const auto hull = upper_hull(std::move(pts));
  const double half = 0.5 * t_end;
  const double gamma_tail = -(hull_at(hull, t_end) - hull_at(hull, half)) / half;
  // 10% below the tail rate so the envelope also covers signals outside the batch
  const double gamma = 0.9 * gamma_tail;
  double log_c = 0.0;
  for (const Pt& p : hull) log_c = std::max(log_c, p.l + gamma * p.t);
  c.measured["gamma_tail"] = gamma_tail;
  c.measured["gamma_hat"] = gamma;
  c.measured["C_hat"] = std::exp(log_c);
  c.measured["trajectories"] = static_cast<double>(batch.size());
  c.measured["horizon"] = t_end;
  c.measured["worst_final_log_ratio"] = worst_final;
  c.pass = finite && gamma > 0.0;
  if (!c.pass) c.notes.push_back("non-decaying trajectory: " + culprit);
  c.notes.push_back("worst trajectory: " + culprit);
  return c;
}

Certificate kl_check(const std::vector<Trajectory>& batch, double C, double gamma) {
  Certificate c;
  c.name = "kl_check";
  c.tolerance = 1e-9;
  double worst = -kInf;
  std::string culprit;
  for (const Trajectory& tr : batch) {
    const double n0 = tr.states.front().norm();
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double ratio = std::log(tr.states[i].norm() / n0) + gamma * (tr.times[i] - tr.start()) - std::log(C);
      if (ratio > worst) {
        worst = ratio;
        culprit = tr.label;
      }
    }
  }
  c.measured["C"] = C;
  c.measured["gamma"] = gamma;
  c.measured["max_log_excess"] = worst;
  c.measured["trajectories"] = static_cast<double>(batch.size());
  c.pass = worst <= c.tolerance;
  if (!c.pass) c.notes.push_back("envelope exceeded by " + culprit);
  return c;
}

// ---------------------------------------------------------------------------

Certificate check_V_neutral(const Trajectory& traj, const Mat& B, double r) {
  Certificate c;
  c.name = "V_neutral";
  c.tolerance = 1e-10;
  double max_rise = 0.0;
  double max_ratio = 0.0;
  double max_err = 0.0;
  int bad = 0;
  for (std::size_t i = 0; i < traj.segments(); ++i) {
    const Vec& xa = traj.states[i];
    const double va = 0.5 * xa.squaredNorm();
    const double vb = 0.5 * traj.states[i + 1].squaredNorm();
    const double rise = va > 0.0 ? (vb - va) / va : 0.0;
    max_rise = std::max(max_rise, rise);
    if (vb - va > c.tolerance * va) ++bad;

    const double len = traj.times[i + 1] - traj.times[i];
    const double d = len / 4.0;
    const Mat m = traj.generator(i);
    const Vec xm = matkit::expm(m, 2.0 * d) * xa;
    const double vm_minus = 0.5 * (matkit::expm(m, d) * xa).squaredNorm();
    const double vm_plus = 0.5 * (matkit::expm(m, 3.0 * d) * xa).squaredNorm();
    const double numeric = (vm_plus - vm_minus) / (2.0 * d);
    const double exact = -r * traj.alpha_values[i] * (B.transpose() * xm).squaredNorm();
    const double mn = matkit::norm2(m);
    const double tol = d * d / 6.0 * 8.0 * mn * mn * mn * xa.squaredNorm() + 1e-14 * va / d + 1e-12 * va;
    const double err = std::abs(numeric - exact);
    max_err = std::max(max_err, err);
    max_ratio = std::max(max_ratio, err / tol);
    if (err > tol) ++bad;
  }
  c.measured["max_relative_rise"] = max_rise;
  c.measured["max_derivative_error"] = max_err;
  c.measured["max_error_over_bound"] = max_ratio;
  c.measured["violations"] = bad;
  c.pass = bad == 0;
  return c;
}

Certificate estimate_eta(const Mat& A, const Mat& B, const PeClass& cls, const std::vector<BatteryMember>& battery,
                         const std::vector<Vec>& x0_grid, int workers) {
  matkit::require_square(A, "estimate_eta A");
  if ((A + A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, matkit::norm2(A))) {
    throw PreconditionError("estimate_eta: A must be skew-symmetric");
  }
  if (kalman_rank(A, B) != A.rows()) throw PreconditionError("estimate_eta: (A, B) is not controllable");
  if (battery.empty() || x0_grid.empty()) throw InsufficientDataError("estimate_eta: empty battery or grid");
  const Mat K = -B.transpose();
  const auto runs = cross_runs(battery, x0_grid);
  struct Out {
    double integral = 0.0;
    double consistency = 0.0;
  };
  std::vector<Out> res(runs.size());
  parallel_for(runs.size(), workers, [&](std::size_t i) {
    const ClosedLoop sys = ClosedLoop::make(A, B, K, runs[i].signal);
    const Trajectory tr = propagate(sys, 0.0, runs[i].x0, cls.T, 1e-3 * cls.T);
    double integral = 0.0;
    auto f = [&](const Vec& x, double a) { return a * (B.transpose() * x).squaredNorm() / (0.5 * x.squaredNorm()); };
    for (std::size_t s = 0; s < tr.segments(); ++s) {
      const double a = tr.alpha_values[s];
      integral += 0.5 * (tr.times[s + 1] - tr.times[s]) * (f(tr.states[s], a) + f(tr.states[s + 1], a));
    }
    const double v0 = 0.5 * tr.states.front().squaredNorm();
    const double v1 = 0.5 * tr.states.back().squaredNorm();
    res[i] = {integral, std::abs(std::log(v1 / v0) + integral)};
  });
  Certificate c;
  c.name = "claim1";
  c.tolerance = 1e-5;
  double eta = kInf;
  double worst_cons = 0.0;
  std::string worst;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (res[i].integral < eta) {
      eta = res[i].integral;
      worst = runs[i].label;
    }
    worst_cons = std::max(worst_cons, res[i].consistency);
  }
  c.measured["eta_hat"] = eta;
  c.measured["margin"] = eta - c.tolerance;
  c.measured["max_log_decay_mismatch"] = worst_cons;
  c.measured["runs"] = static_cast<double>(runs.size());
  c.pass = eta > c.tolerance && worst_cons <= c.tolerance;
  c.notes.push_back("minimizing run: " + worst);
  c.notes.push_back("eta_hat is a minimum over a finite battery, not a bound on the class infimum");
  return c;
}

// ---------------------------------------------------------------------------

std::vector<Sojourn> outer_sojourns(const Trajectory& traj, const ConeGeometry& geom) {
  if (traj.states.empty() || traj.states.front().size() != 2) throw ShapeError("outer_sojourns: planar only");
  return label_pieces(traj, {Line{geom.xi_s_plus}, Line{geom.xi_s_minus}},
                      [&](const Vec& x) { return !geom.in_Cs(x); });
}

std::vector<Sojourn> middle_sojourns(const Trajectory& traj, const ConeGeometry& geom) {
  if (traj.states.empty() || traj.states.front().size() != 2) throw ShapeError("middle_sojourns: planar only");
  return label_pieces(traj, {Line{geom.xi_s_plus}, Line{geom.xi_s_minus}},
                      [&](const Vec& x) { return geom.in_Cs(x); });
}

Certificate check_F_monotone(const Trajectory& traj, const ConeGeometry& geom, const PeClass& cls_lambda) {
  constexpr double angle_slack = 1e-9;
  for (const Vec& x : traj.states) {
    const double th = ConeGeometry::folded_angle(x);
    if (th > geom.theta_s_plus + angle_slack && th < geom.theta_s_minus - angle_slack) {
      throw PreconditionError("check_F_monotone: trajectory enters the interior of the middle cone");
    }
  }
  Certificate c;
  c.name = "F_monotone";
  c.tolerance = 1e-9;
  const Trajectory lifted = attach_F(polar_lift(traj), geom.k);
  const auto& F = *lifted.channels.F;
  const auto& theta = *lifted.channels.theta;
  int bad = 0;
  double max_step_rise = -kInf;
  for (std::size_t i = 0; i + 1 < F.size(); ++i) {
    const double d = F[i + 1] - F[i];
    max_step_rise = std::max(max_step_rise, d);
    if (d > c.tolerance) ++bad;
  }
  const double w = cls_lambda.T;
  double c_hat = kInf;
  int windows = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    if (t + w > traj.end()) break;
    const double drop = fmap_F(theta_at(traj, theta, t + w), geom.k) - F[i];
    c_hat = std::min(c_hat, -drop / (cls_lambda.mu * geom.k));
    ++windows;
  }
  const double c_closed = geom.c_rho();
  c.measured["violations"] = bad;
  c.measured["max_step_rise"] = max_step_rise;
  c.measured["windows"] = windows;
  c.measured["c_closed_form"] = c_closed;
  if (windows > 0) c.measured["c_hat"] = c_hat;
  const bool windows_ok = windows == 0 || (c_hat > 0.0 && c_hat >= c_closed * (1.0 - 1e-6) - 1e-9);
  c.pass = bad == 0 && windows_ok;
  if (windows > 0 && c_hat < c_closed) c.notes.push_back("measured window drop below the closed-form constant");
  return c;
}

Certificate dwell_times(const Trajectory& traj, const ConeGeometry& geom) {
  Certificate c;
  c.name = "finite";
  const auto soj = outer_sojourns(traj, geom);
  double max_dwell = 0.0;
  double max_closed = 0.0;
  bool whole = false;
  for (const Sojourn& s : soj) {
    max_dwell = std::max(max_dwell, s.length());
    if (!s.open_end) max_closed = std::max(max_closed, s.length());
    if (s.open_begin && s.open_end) whole = true;
  }
  c.measured["max_dwell"] = max_dwell;
  c.measured["max_closed_dwell"] = max_closed;
  c.measured["sojourns"] = static_cast<double>(soj.size());
  c.pass = !whole;
  if (whole) c.notes.push_back("trajectory never leaves C1 u C2 over the horizon");
  return c;
}

Certificate check_quadrant_V(const Trajectory& traj, double rho, double k) {
  Certificate c;
  c.name = "ff00";
  c.tolerance = 1e-10;
  auto V = [&](const Vec& x) { return x(0) * x(0) + 2.0 * x(1) * x(1) / (rho * k * k); };
  // x and -x are identified, so the fourth quadrant counts as well
  auto inside = [](const Vec& x) { return x(0) * x(1) <= 0.0; };
  int pairs = 0, bad = 0;
  double max_rise = 0.0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    if (!inside(traj.states[i]) || !inside(traj.states[i + 1])) continue;
    const double va = V(traj.states[i]);
    const double vb = V(traj.states[i + 1]);
    ++pairs;
    if (va > 0.0) max_rise = std::max(max_rise, (vb - va) / va);
    if (vb - va > c.tolerance * va) ++bad;
  }
  c.measured["checked_pairs"] = pairs;
  c.measured["max_relative_rise"] = max_rise;
  c.measured["violations"] = bad;
  c.pass = bad == 0;
  if (pairs == 0) c.notes.push_back("trajectory never enters the quadrant; check is vacuous");
  return c;
}

Certificate check_cs_decay(const Trajectory& traj, const ConeGeometry& geom, const PeClass& cls_lambda) {
  constexpr double angle_slack = 1e-9;
  Certificate c;
  c.name = "ff01";
  c.tolerance = 1e-9;
  const double k = geom.k;
  const double w_lo = 1.0 + geom.rho * k / (2.0 * geom.xi_s_minus);
  const double w_hi = 1.0 + geom.rho * k / (2.0 * geom.xi_s_plus);
  double w_min = kInf, w_max = -kInf;
  int bad = 0;
  for (const Vec& x : traj.states) {
    const double th = ConeGeometry::folded_angle(x);
    if (th < geom.theta_s_plus - angle_slack || th > geom.theta_s_minus + angle_slack) {
      throw PreconditionError("check_cs_decay: trajectory leaves the middle cone");
    }
    const double w = 1.0 + geom.rho * k / 2.0 * (x(0) / x(1));
    w_min = std::min(w_min, w);
    w_max = std::max(w_max, w);
    if (w < w_lo - c.tolerance || w > w_hi + c.tolerance) ++bad;
  }
  // ln|x2| changes by -k int alpha w, bracketed by the w-bounds.
  const double l0 = std::log(std::abs(traj.states.front()(1)));
  double integral = 0.0;
  for (std::size_t i = 0; i < traj.segments(); ++i) {
    integral += traj.alpha_values[i] * (traj.times[i + 1] - traj.times[i]);
    const double dl = std::log(std::abs(traj.states[i + 1](1))) - l0;
    const double slack = c.tolerance * (1.0 + k * integral);
    if (dl > -k * w_lo * integral + slack || dl < -k * w_hi * integral - slack) ++bad;
  }
  const double gamma = w_lo * cls_lambda.ratio();
  const double n0 = traj.states.front().norm();
  double c2 = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    c2 = std::max(c2, traj.states[i].norm() / n0 * std::exp(k * gamma * (traj.times[i] - traj.start())));
  }
  c.measured["w_min"] = w_min;
  c.measured["w_max"] = w_max;
  c.measured["w_lower_bound"] = w_lo;
  c.measured["w_upper_bound"] = w_hi;
  c.measured["gamma"] = gamma;
  c.measured["C2_hat"] = c2;
  c.measured["violations"] = bad;
  c.pass = bad == 0;
  return c;
}

Certificate comparison_final0(double rho, double k, double ratio) {
  const ConeGeometry g = cone_geometry(rho, k, ratio);
  Certificate c;
  c.name = "final0";
  c.tolerance = 1e-9;
  Mat K(1, 2);
  K << -rho * k * k / 2.0, -k;
  Vec x0 = vec2(-1.0, -g.xi_s_minus);
  x0 /= x0.norm();
  const double slow = std::abs(g.xi_ratio_minus);
  const double horizon = std::max(50.0 / k, 1.2 * std::log(1e6) / slow);
  const ClosedLoop sys = ClosedLoop::make(di_A(), di_B(), K, PwcSignal::constant(ratio));
  const Trajectory tr = propagate(sys, 0.0, x0, horizon, default_max_step(sys));
  const double th_lo = std::numbers::pi + std::atan(g.xi_ratio_minus);
  const double th_hi = g.theta_s_minus;
  int escapes = 0;
  double min_th = kInf, max_th = -kInf;
  for (const Vec& x : tr.states) {
    if (!(x(1) > 0.0 && x(0) < 0.0)) {
      ++escapes;
      continue;
    }
    const double th = std::atan2(x(1), x(0));
    min_th = std::min(min_th, th);
    max_th = std::max(max_th, th);
    if (th < th_lo - c.tolerance || th > th_hi + c.tolerance) ++escapes;
  }
  const double final_ratio = tr.states.back().norm() / x0.norm();
  c.measured["horizon"] = horizon;
  c.measured["final_norm_ratio"] = final_ratio;
  c.measured["escapes"] = escapes;
  c.measured["min_angle_margin"] = min_th - th_lo;
  c.measured["max_angle_margin"] = th_hi - max_th;
  c.pass = escapes == 0 && final_ratio <= 1e-6;
  return c;
}

Certificate comparison_c2(double rho, double k, double ratio) {
  const ConeGeometry g = cone_geometry(rho, k, ratio);
  Certificate c;
  c.name = "c2";
  c.tolerance = 1e-9;
  Mat K(1, 2);
  K << -rho * k * k / 2.0, -k;
  Vec x0 = vec2(-1.0, -g.xi_s_plus);
  x0 /= x0.norm();
  const Mat m = di_A() + ratio * di_B() * K;
  const auto hit = first_crossing(m, x0, HalfLine::positive_x1_axis(), 50.0 / k, 4096);
  if (!hit) {
    c.pass = false;
    c.notes.push_back("no crossing of the positive x1-axis within 50/k");
    return c;
  }
  // Path must stay in C2 until the crossing.
  const ClosedLoop sys = ClosedLoop::make(di_A(), di_B(), K, PwcSignal::constant(ratio));
  const Trajectory tr = propagate(sys, 0.0, x0, hit->t, default_max_step(sys));
  int outside = 0;
  for (std::size_t i = 0; i + 1 < tr.size(); ++i) {
    const Vec& x = tr.states[i];
    if (x(1) < -c.tolerance * x.norm() || std::atan2(x(1), x(0)) > g.theta_s_plus + c.tolerance) ++outside;
  }
  const double factor = hit->x.norm() / x0.norm();
  c.measured["contraction"] = factor;
  c.measured["crossing_time"] = hit->t;
  c.measured["crossing_x1"] = hit->x(0);
  c.measured["samples_outside_C2"] = outside;
  c.pass = factor < 1.0 && outside == 0;
  return c;
}

Certificate chain_contraction(const Trajectory& traj, double k, double min_excursion) {
  Certificate c;
  c.name = "ouf0";
  c.tolerance = 0.0;
  std::vector<double> tau;
  const Line axis{0.0};
  for (std::size_t i = 0; i < traj.segments(); ++i) {
    const Vec& xa = traj.states[i];
    const Vec& xb = traj.states[i + 1];
    if (sign_change(axis(xa), axis(xb))) {
      const double len = traj.times[i + 1] - traj.times[i];
      tau.push_back(traj.times[i] + segment_root(traj.generator(i), xa, len, axis));
    }
  }
  std::vector<double> norms;
  for (double t : tau) norms.push_back(state_at(traj, t).norm());

  double gamma_star = kInf;
  int long_exc = 0;
  for (std::size_t i = 1; i < tau.size(); ++i) {
    const double d = tau[i] - tau[i - 1];
    if (d < min_excursion) continue;
    ++long_exc;
    gamma_star = std::min(gamma_star, std::log(norms[i - 1] / (2.0 * norms[i])) / (k * d));
  }
  if (long_exc == 0) {
    const DecayFit fit = decay_rate(traj, traj.start());
    gamma_star = std::max(fit.gamma_hat, 0.0) / k;
    c.notes.push_back("no excursion of length >= " + fmt(min_excursion) +
                      "; gamma_star from the overall decay fit");
  }
  // C3: envelope on each inter-crossing interval relative to its start.
  std::vector<double> starts{traj.start()};
  std::vector<double> start_norms{traj.states.front().norm()};
  for (std::size_t i = 0; i < tau.size(); ++i) {
    starts.push_back(tau[i]);
    start_norms.push_back(norms[i]);
  }
  double c3 = 1.0;
  std::size_t piece = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    while (piece + 1 < starts.size() && starts[piece + 1] <= t) ++piece;
    const double ratio = traj.states[i].norm() / start_norms[piece] * std::exp(k * gamma_star * (t - starts[piece]));
    c3 = std::max(c3, ratio);
  }
  c.measured["crossings"] = static_cast<double>(tau.size());
  c.measured["long_excursions"] = long_exc;
  c.measured["gamma_star_hat"] = gamma_star;
  c.measured["C3_hat"] = c3;
  c.measured["C3_squared"] = c3 * c3;
  c.pass = long_exc == 0 || gamma_star > 0.0;
  if (tau.size() < 2) c.notes.push_back("fewer than two axis crossings: prefix-only certificate");
  return c;
}

std::vector<Trajectory> di_base_batch(double rho, double k, double lambda, const std::vector<BatteryMember>& battery,
                                      const std::vector<Vec>& x0s, double horizon, int workers) {
  Mat K(1, 2);
  K << -rho * k * k / 2.0, -k;
  std::vector<BatteryMember> fast;
  fast.reserve(battery.size());
  for (const auto& b : battery) fast.push_back({b.label, rescale_time(b.signal, lambda)});
  const auto runs = cross_runs(fast, x0s);
  const ClosedLoop probe = ClosedLoop::make(di_A(), di_B(), K, PwcSignal::constant(1.0));
  return simulate_batch(di_A(), di_B(), K, runs, horizon, default_max_step(probe), workers);
}

Certificate rescaling_identity(const Mat& K, const PwcSignal& alpha, const Vec& x0, double lambda, double horizon) {
  Certificate c;
  c.name = "multi";
  c.tolerance = 1e-9;
  const Mat Kl = rescale_gain(K, lambda);
  Mat D = Mat::Identity(2, 2);
  D(1, 1) = lambda;
  const ClosedLoop base = ClosedLoop::make(di_A(), di_B(), K, alpha);
  const ClosedLoop scaled = ClosedLoop::make(di_A(), di_B(), Kl, rescale_time(alpha, lambda));
  const Trajectory t1 = propagate(base, 0.0, x0, lambda * horizon, default_max_step(base));
  const Trajectory t2 = propagate(scaled, 0.0, D * x0, horizon, default_max_step(scaled));
  double worst = 0.0;
  for (std::size_t i = 0; i < t2.size(); ++i) {
    const double s = std::min(lambda * t2.times[i], t1.end());
    const Vec z = D * state_at(t1, s);
    worst = std::max(worst, (z - t2.states[i]).norm() / t2.states[i].norm());
  }
  c.measured["lambda"] = lambda;
  c.measured["max_relative_error"] = worst;
  c.measured["samples"] = static_cast<double>(t2.size());
  c.pass = worst <= c.tolerance;
  return c;
}

Certificate multi_input_check(const Mat& A, const Mat& B, double k, const std::vector<RunSpec>& runs, double horizon,
                              int workers) {
  const Mat K = multi_input_gain(B, k);
  Certificate c;
  c.name = "q1yes";
  c.tolerance = 1e-9;
  struct Out {
    double identity_err = 0.0;
    double bound_excess = -kInf;
  };
  std::vector<Out> res(runs.size());
  parallel_for(runs.size(), workers, [&](std::size_t i) {
    const ClosedLoop sys = ClosedLoop::make(A, B, K, runs[i].signal);
    const Trajectory tr = propagate(sys, 0.0, runs[i].x0, horizon, default_max_step(sys));
    const double n0 = runs[i].x0.norm();
    Out o;
    for (std::size_t s = 0; s < tr.size(); ++s) {
      const double t = tr.times[s];
      const double damp = std::exp(-k * runs[i].signal.cumulative(t));
      const Vec y = matkit::expm(A, -t) * tr.states[s];
      const double expected = damp * n0;
      o.identity_err = std::max(o.identity_err, std::abs(y.norm() - expected) / expected);
      const double bound = matkit::norm2(matkit::expm(A, t)) * damp * n0;
      o.bound_excess = std::max(o.bound_excess, tr.states[s].norm() / bound - 1.0);
    }
    res[i] = o;
  });
  double err = 0.0, excess = -kInf;
  for (const Out& o : res) {
    err = std::max(err, o.identity_err);
    excess = std::max(excess, o.bound_excess);
  }
  c.measured["max_identity_error"] = err;
  c.measured["max_bound_excess"] = excess;
  c.measured["runs"] = static_cast<double>(runs.size());
  c.pass = err <= c.tolerance && excess <= c.tolerance;
  return c;
}

// ---------------------------------------------------------------------------

Certificate di_stability_check(const PeClass& cls, const Mat& K, const std::vector<BatteryMember>& battery,
                               const TuneOptions& opt) {
  const Mat A = di_A();
  const Mat B = di_B();
  const SearchResult worst = worst_case_search(A, B * K, cls, opt.search_budget, opt.seed, opt.workers);
  std::vector<BatteryMember> signals = battery;
  signals.push_back({"worst_case:" + worst.label, worst.signal});
  const auto runs = cross_runs(signals, circle_grid(opt.x0_count, 0.1));
  const auto batch = simulate_batch(A, B, K, runs, opt.horizon * cls.T, cls.T / 100.0, opt.workers);
  Certificate c = kl_envelope(batch);
  c.name = "di_stability";
  c.measured["worst_case_decay"] = worst.decay;
  c.measured["k1"] = -K(0, 0);
  c.measured["k2"] = -K(0, 1);
  c.battery = {opt.seed, static_cast<int>(signals.size()), "battery + worst_case_search"};
  return c;
}

TuneResult tune(const PeClass& cls, double rho, const TuneOptions& opt) {
  TuneResult res;
  const auto battery = make_battery(cls, opt.battery_size, opt.seed);
  auto passes = [&](double k, double lambda) {
    const DIGain g = di_gain(cls, rho, k, lambda);
    const Certificate c = di_stability_check(cls, g.K, battery, opt);
    std::ostringstream os;
    os << "k=" << k << " lambda=" << lambda << " gamma_hat=" << c.measured.at("gamma_hat")
       << " worst_case_decay=" << c.measured.at("worst_case_decay") << (c.pass ? " pass" : " fail");
    res.log.push_back(os.str());
    return c.pass;
  };
  double k = 1.0;
  while (k <= opt.cap && !passes(k, k)) k *= 2.0;
  if (k > opt.cap) {
    res.log.push_back("search cap exceeded");
    return res;
  }
  res.k_pass = k;
  double lambda = 1.0;
  while (lambda < k && !passes(k, lambda)) lambda *= 2.0;
  res.lambda_pass = std::min(lambda, k);
  res.k_star_hat = 2.0 * res.k_pass;
  res.lambda_star_hat = 2.0 * res.lambda_pass;
  res.found = true;
  return res;
}

Certificate weak_star_demo(const Mat& A, const Mat& B, const Mat& K, const Vec& x0, double duty,
                           const std::vector<int>& indices, double horizon, std::vector<WeakStarRow>* rows) {
  if (!(duty > 0.0 && duty <= 1.0)) throw DomainError("weak_star_demo: duty must lie in (0, 1]");
  if (indices.empty()) throw InsufficientDataError("weak_star_demo: no indices");
  Certificate c;
  c.name = "technic";
  c.tolerance = 1e-2;
  const Mat m_star = A + duty * (B * K);
  std::vector<double> dist;
  for (int i : indices) {
    if (i < 1) throw DomainError("weak_star_demo: indices must be positive");
    const double period = 1.0 / i;
    const PwcSignal sq = duty < 1.0 ? PwcSignal({0.0, duty * period, period}, {1.0, 0.0}, Periodic{period})
                                    : PwcSignal::constant(1.0);
    const ClosedLoop sys = ClosedLoop::make(A, B, K, sq);
    const Trajectory tr = propagate(sys, 0.0, x0, horizon, std::min(1e-2, default_max_step(sys)));
    double sup = 0.0;
    for (std::size_t s = 0; s < tr.size(); ++s) {
      sup = std::max(sup, (tr.states[s] - matkit::expm(m_star, tr.times[s]) * x0).norm());
    }
    dist.push_back(sup);
    if (rows) rows->push_back({i, sup});
    c.measured["sup_distance_i" + std::to_string(i)] = sup;
  }
  bool decreasing = true;
  for (std::size_t j = 1; j < dist.size(); ++j) decreasing = decreasing && dist[j] <= dist[j - 1] + 1e-12;
  if (dist.size() >= 2 && dist.front() > 0.0 && dist.back() > 0.0 && indices.back() != indices.front()) {
    c.measured["rate"] = std::log(dist.front() / dist.back()) /
                         std::log(static_cast<double>(indices.back()) / indices.front());
  }
  c.measured["final_distance"] = dist.back();
  c.pass = decreasing && dist.back() <= c.tolerance;
  if (!decreasing) c.notes.push_back("sup distance is not monotone along the sequence");
  return c;
}

}  // namespace pestab
