#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pestab/matkit.hpp"
#include "pestab/signals.hpp"

namespace pestab {

/// x' = (A + alpha(t) B K) x
struct ClosedLoop {
  Mat A;
  Mat B;
  Mat K;
  PwcSignal alpha;

  /// Checks A square, B n x m, K m x n.
  static ClosedLoop make(Mat A, Mat B, Mat K, PwcSignal alpha);

  Mat gain_term() const { return B * K; }
  Mat generator(double a) const { return A + a * (B * K); }
};

struct Channels {
  std::optional<std::vector<double>> V;
  std::optional<std::vector<double>> r;
  std::optional<std::vector<double>> theta;
  std::optional<std::vector<double>> F;
};

/// Sampled solution. On segment i = [times[i], times[i+1]] the generator is
/// drift + alpha_values[i] * gain_term, so states between samples are exactly
/// recoverable by state_at().
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<double> alpha_values;
  Mat drift;
  Mat gain_term;
  Channels channels;
  std::string label;

  std::size_t size() const { return times.size(); }
  std::size_t segments() const { return alpha_values.size(); }
  Mat generator(std::size_t seg) const { return drift + alpha_values[seg] * gain_term; }
  double start() const { return times.front(); }
  double end() const { return times.back(); }
};

/// Half-line {s d : s > 0} of the plane.
struct HalfLine {
  Vec direction;  // unit, 2 entries

  static HalfLine along(double dx, double dy);
  /// x2 = slope * x1 on the side where x1 has the sign of `x1_sign`.
  static HalfLine slope(double slope, double x1_sign);
  static HalfLine positive_x1_axis() { return along(1.0, 0.0); }
  static HalfLine negative_x1_axis() { return along(-1.0, 0.0); }

  /// Linear functional vanishing on the supporting line (cross product d x x).
  double functional(const Vec& x) const;
  bool on_ray_side(const Vec& x) const;
};

/// Default sampling step 1e-2 / ||A + BK||.
double default_max_step(const ClosedLoop& sys);

/// Largest step keeping the per-sample polar angle increment below pi/4.
double angle_safe_step(const ClosedLoop& sys);

/// Exact piecewise-exponential propagation. Samples at every switch of alpha
/// and on a grid of spacing min(max_step, angle_safe_step(sys)).
Trajectory propagate(const ClosedLoop& sys, double t0, const Vec& x0, double t1, double max_step);

/// State at any t in [traj.start(), traj.end()], reconstructed by expm from the
/// enclosing segment's start sample.
Vec state_at(const Trajectory& traj, double t);

/// Index of the segment containing t (last segment for t == end()).
std::size_t segment_of(const Trajectory& traj, double t);

/// Crossing time of `target` on segment `seg`, or nullopt when the endpoints do
/// not straddle the supporting line or the crossing lies on the opposite ray.
std::optional<double> detect_crossing(const Trajectory& traj, std::size_t seg, const HalfLine& target);

struct Crossing {
  double t = 0.0;
  Vec x;
};

/// First crossing of `target` by t -> expm(M t) x0 on (0, t_max], located on a
/// `grid`-point grid and refined by bisection.
std::optional<Crossing> first_crossing(const Mat& m, const Vec& x0, const HalfLine& target, double t_max,
                                       int grid = 256);

/// Attaches r = |x| and the continuously unwrapped polar angle. Planar only.
Trajectory polar_lift(const Trajectory& traj);

/// Attaches F(theta) computed from the theta channel.
Trajectory attach_F(const Trajectory& traj, double k);

/// Attaches V = |x|^2 / 2.
Trajectory attach_energy(const Trajectory& traj);

/// Angle reparameterization: arctan(tan(theta)/k) on [0, pi/2), pi/2 at pi/2,
/// arctan(tan(theta)/k) + pi on (pi/2, pi], continued by F(theta+pi) = F(theta)+pi.
double fmap_F(double theta, double k);

/// Polar angle rate of the planar closed loop x1' = x2, x2' = -alpha(k1 x1 + k2 x2).
double di_angle_rate(double theta, double alpha, double k1, double k2);

/// CSV: t, x1..xn, alpha, V, r, theta, F_theta. The alpha column holds the
/// value on the segment that starts at the sample (the last sample repeats the
/// final segment's value); absent channels are empty cells.
void write_csv(std::ostream& os, const Trajectory& traj);

}  // namespace pestab
