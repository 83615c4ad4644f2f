#include "pestab/simcore.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pestab/error.hpp"

namespace pestab {

namespace {

constexpr double kZeroState = 1e-300;

double cross2(const Vec& a, const Vec& b) { return a(0) * b(1) - a(1) * b(0); }

// Shrinks [lo, hi] around a sign change of g(expm(M (t - t_base)) x_base).
template <typename G>
std::pair<double, double> bisect(const Mat& m, const Vec& x_base, double t_base, double lo, double hi, G&& g) {
  double g_lo = g(matkit::expm(m, lo - t_base) * x_base);
  const double width_goal = 1e-12 * (hi - lo);
  for (int iter = 0; iter < 200 && hi - lo > width_goal; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double g_mid = g(matkit::expm(m, mid - t_base) * x_base);
    if (g_mid == 0.0) return {mid, mid};
    if ((g_mid > 0.0) == (g_lo > 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  return {lo, hi};
}

}  // namespace

ClosedLoop ClosedLoop::make(Mat A, Mat B, Mat K, PwcSignal alpha) {
  matkit::require_square(A, "ClosedLoop A");
  const auto n = A.rows();
  if (B.rows() != n) throw ShapeError("ClosedLoop: B must have as many rows as A");
  if (K.rows() != B.cols() || K.cols() != n) {
    std::ostringstream os;
    os << "ClosedLoop: K must be " << B.cols() << "x" << n << ", got " << K.rows() << "x" << K.cols();
    throw ShapeError(os.str());
  }
  if (!A.allFinite() || !B.allFinite() || !K.allFinite()) throw DomainError("ClosedLoop: non-finite entries");
  return ClosedLoop{std::move(A), std::move(B), std::move(K), std::move(alpha)};
}

HalfLine HalfLine::along(double dx, double dy) {
  const double n = std::hypot(dx, dy);
  if (!(n > 0.0)) throw DomainError("HalfLine: zero direction");
  Vec d(2);
  d << dx / n, dy / n;
  return HalfLine{d};
}

HalfLine HalfLine::slope(double slope, double x1_sign) {
  const double s = x1_sign >= 0.0 ? 1.0 : -1.0;
  return along(s, s * slope);
}

double HalfLine::functional(const Vec& x) const { return cross2(direction, x); }

bool HalfLine::on_ray_side(const Vec& x) const { return direction.dot(x) > 0.0; }

double default_max_step(const ClosedLoop& sys) {
  const double nrm = matkit::norm2(sys.generator(1.0));
  return nrm > 0.0 ? 1e-2 / nrm : 1e-2;
}

double angle_safe_step(const ClosedLoop& sys) {
  const double bound = matkit::norm2(sys.A) + matkit::norm2(sys.gain_term()) + 1.0;
  return 0.999 * (std::numbers::pi / 4.0) / bound;
}

Trajectory propagate(const ClosedLoop& sys, double t0, const Vec& x0, double t1, double max_step) {
  if (!(t0 >= 0.0) || !(t1 > t0)) throw DomainError("propagate: need t1 > t0 >= 0");
  if (!(max_step > 0.0)) throw DomainError("propagate: max_step must be positive");
  if (x0.size() != sys.A.rows()) throw ShapeError("propagate: x0 dimension does not match A");
  const double h = std::min(max_step, angle_safe_step(sys));

  // Sample times: grid t0 + j h merged with every switch of alpha.
  const std::vector<double> switches = sys.alpha.switch_times(t0, t1);
  std::vector<double> times{t0};
  const double guard = 1e-13 * std::max(1.0, std::abs(t1));
  std::size_t si = 0;
  for (long long j = 1;; ++j) {
    const double g = t0 + static_cast<double>(j) * h;
    const double next_grid = g < t1 - guard ? g : t1;
    while (si < switches.size() && switches[si] < next_grid - guard) {
      if (switches[si] > times.back() + guard) times.push_back(switches[si]);
      ++si;
    }
    if (si < switches.size() && std::abs(switches[si] - next_grid) <= guard) ++si;
    times.push_back(next_grid);
    if (next_grid == t1) break;
  }

  Trajectory traj;
  traj.drift = sys.A;
  traj.gain_term = sys.gain_term();
  traj.times = std::move(times);
  const std::size_t count = traj.times.size();
  traj.states.reserve(count);
  traj.alpha_values.reserve(count - 1);
  traj.states.push_back(x0);

  std::map<double, Mat> full_step_cache;  // keyed by alpha
  for (std::size_t i = 0; i + 1 < count; ++i) {
    const double a = traj.times[i];
    const double b = traj.times[i + 1];
    const double value = sys.alpha(0.5 * (a + b));
    traj.alpha_values.push_back(value);
    const double len = b - a;
    if (std::abs(len - h) <= 1e-12 * h) {
      auto it = full_step_cache.find(value);
      if (it == full_step_cache.end()) {
        it = full_step_cache.emplace(value, matkit::expm(traj.generator(i), h)).first;
      }
      traj.states.push_back(it->second * traj.states.back());
    } else {
      traj.states.push_back(matkit::expm(traj.generator(i), len) * traj.states.back());
    }
  }
  return traj;
}

std::size_t segment_of(const Trajectory& traj, double t) {
  if (traj.size() < 2) throw InsufficientDataError("trajectory has no segments");
  if (t < traj.start() || t > traj.end()) throw DomainError("time outside the trajectory range");
  const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
  auto idx = static_cast<std::size_t>(std::distance(traj.times.begin(), it));
  idx = idx == 0 ? 0 : idx - 1;
  return std::min(idx, traj.segments() - 1);
}

Vec state_at(const Trajectory& traj, double t) {
  const std::size_t seg = segment_of(traj, t);
  const double dt = t - traj.times[seg];
  if (dt == 0.0) return traj.states[seg];
  return matkit::expm(traj.generator(seg), dt) * traj.states[seg];
}

std::optional<double> detect_crossing(const Trajectory& traj, std::size_t seg, const HalfLine& target) {
  if (seg >= traj.segments()) throw DomainError("detect_crossing: segment index out of range");
  const Vec& xa = traj.states[seg];
  const Vec& xb = traj.states[seg + 1];
  const double ga = target.functional(xa);
  const double gb = target.functional(xb);
  if (ga == 0.0) return std::nullopt;
  if (gb != 0.0 && (ga > 0.0) == (gb > 0.0)) return std::nullopt;
  const double ta = traj.times[seg];
  const double tb = traj.times[seg + 1];
  double t_cross = tb;
  if (gb != 0.0) {
    const Mat m = traj.generator(seg);
    const auto [lo, hi] = bisect(m, xa, ta, ta, tb, [&](const Vec& x) { return target.functional(x); });
    t_cross = 0.5 * (lo + hi);
  }
  const Vec x = t_cross == tb ? xb : Vec(matkit::expm(traj.generator(seg), t_cross - ta) * xa);
  if (!target.on_ray_side(x)) return std::nullopt;
  return t_cross;
}

std::optional<Crossing> first_crossing(const Mat& m, const Vec& x0, const HalfLine& target, double t_max,
                                       int grid) {
  if (!(t_max > 0.0) || grid < 1) throw DomainError("first_crossing: need t_max > 0 and grid >= 1");
  const double dt = t_max / grid;
  const Mat step = matkit::expm(m, dt);
  Vec x_prev = x0;
  double g_prev = target.functional(x0);
  for (int j = 1; j <= grid; ++j) {
    const double t_prev = (j - 1) * dt;
    Vec x = step * x_prev;
    const double g = target.functional(x);
    const bool straddles = g == 0.0 || (g_prev != 0.0 && (g > 0.0) != (g_prev > 0.0));
    if (straddles) {
      double t_hit = j * dt;
      Vec x_hit = x;
      if (g != 0.0) {
        const auto [lo, hi] =
            bisect(m, x_prev, t_prev, t_prev, j * dt, [&](const Vec& y) { return target.functional(y); });
        t_hit = hi;
        x_hit = matkit::expm(m, hi - t_prev) * x_prev;
        (void)lo;
      }
      if (target.on_ray_side(x_hit)) return Crossing{t_hit, x_hit};
    }
    x_prev = std::move(x);
    g_prev = g;
  }
  return std::nullopt;
}

Trajectory polar_lift(const Trajectory& traj) {
  if (traj.states.empty() || traj.states.front().size() != 2) {
    throw ShapeError("polar_lift: planar trajectory required");
  }
  Trajectory out = traj;
  std::vector<double> r(traj.size());
  std::vector<double> theta(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vec& x = traj.states[i];
    r[i] = x.norm();
    if (!(r[i] > kZeroState)) throw DegenerateStateError("polar_lift: zero state");
    if (i == 0) {
      theta[i] = std::atan2(x(1), x(0));
    } else {
      const Vec& p = traj.states[i - 1];
      theta[i] = theta[i - 1] + std::atan2(cross2(p, x), p.dot(x));
    }
  }
  out.channels.r = std::move(r);
  out.channels.theta = std::move(theta);
  return out;
}

Trajectory attach_F(const Trajectory& traj, double k) {
  if (!traj.channels.theta) throw PreconditionError("attach_F: theta channel missing, run polar_lift first");
  Trajectory out = traj;
  std::vector<double> f;
  f.reserve(traj.size());
  for (double th : *traj.channels.theta) f.push_back(fmap_F(th, k));
  out.channels.F = std::move(f);
  return out;
}

Trajectory attach_energy(const Trajectory& traj) {
  Trajectory out = traj;
  std::vector<double> v;
  v.reserve(traj.size());
  for (const Vec& x : traj.states) v.push_back(0.5 * x.squaredNorm());
  out.channels.V = std::move(v);
  return out;
}

double fmap_F(double theta, double k) {
  if (!(k > 0.0)) throw DomainError("fmap_F: k must be positive");
  constexpr double pi = std::numbers::pi;
  const double turns = std::floor(theta / pi);
  const double r = theta - turns * pi;
  double base;
  if (r == pi / 2.0) {
    base = pi / 2.0;
  } else {
    // atan2 with a non-negative first argument equals the three-branch arctan
    // formula on [0, pi) and stays finite near pi/2.
    base = std::atan2(std::sin(r), k * std::cos(r));
  }
  return base + turns * pi;
}

double di_angle_rate(double theta, double alpha, double k1, double k2) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return -s * s - alpha * c * (k1 * c + k2 * s);
}

void write_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t n = traj.states.empty() ? 0 : static_cast<std::size_t>(traj.states.front().size());
  os << "t";
  for (std::size_t j = 0; j < n; ++j) os << ",x" << (j + 1);
  os << ",alpha,V,r,theta,F_theta\n";
  char buf[40];
  auto num = [&](double v) {
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, r.ptr - buf);
  };
  auto channel = [&](const std::optional<std::vector<double>>& c, std::size_t i) {
    os << ',';
    if (c) num((*c)[i]);
  };
  for (std::size_t i = 0; i < traj.size(); ++i) {
    num(traj.times[i]);
    for (std::size_t j = 0; j < n; ++j) {
      os << ',';
      num(traj.states[i](static_cast<Eigen::Index>(j)));
    }
    os << ',';
    if (traj.segments() > 0) num(traj.alpha_values[std::min(i, traj.segments() - 1)]);
    channel(traj.channels.V, i);
    channel(traj.channels.r, i);
    channel(traj.channels.theta, i);
    channel(traj.channels.F, i);
    os << '\n';
  }
}

}  // namespace pestab
