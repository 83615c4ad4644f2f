#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pestab/signals.hpp"
#include "pestab/simcore.hpp"

namespace pestab {

/// Regions of the plane cut by D: x2 = -(k1/k2) x1 and the x1-axis, for K = (-k1, -k2).
///   Q1: g >= 0, x2 > 0    Q2: g > 0, x2 <= 0
///   Q3: g <= 0, x2 < 0    Q4: g < 0, x2 >= 0      with g = x2 + (k1/k2) x1.
struct QPartition {
  double k1 = 0.0;
  double k2 = 0.0;

  static QPartition from_gain(const Mat& K);
  double g(const Vec& x) const { return x(1) + (k1 / k2) * x(0); }
  int region(const Vec& x) const;  // 1..4
};

/// alpha = 1 on Q2 u Q4 and alpha = ratio on Q1 u Q3.
struct ZetaFeedback {
  Mat K;
  double ratio = 1.0;
};

double zeta(const ZetaFeedback& z, const Vec& x);

struct DestabilizerRun {
  Trajectory traj;
  PwcSignal induced_signal = PwcSignal::constant(1.0);
  double growth_per_rev = 0.0;
  std::vector<double> revolution_norms;  // |x| at the start and after each revolution
  PeCheck pe;
  PeClass cls;
  int revolutions = 0;
};

/// Closed loop with alpha = zeta(x), integrated region by region from x0.
DestabilizerRun run_destabilizer(const Mat& K, const PeClass& cls, const Vec& x0, int revolutions,
                                 double max_step = 0.0);

struct NuSearch {
  double nu_hat = 0.0;
  Vec x_bar;  // first crossing of D by the alpha = 1 flow from (-1, 0)
  int iterations = 0;
};

/// Abscissa where the alpha = nu flow from x_bar first meets the positive x1-axis.
double xi_of_nu(const Mat& K, const Vec& x_bar, double nu, int grid = 256);

/// Largest nu (to 1e-10) with xi(nu) > 1.
NuSearch find_nu(const Mat& K, int grid = 256);

struct SearchResult {
  PwcSignal signal = PwcSignal::constant(1.0);
  std::string label;
  double decay = 0.0;  // asymptotic rate -ln(spectral radius of the period map)/T
  int evaluated = 0;
};

/// Asymptotic decay rate of x' = (A + alpha BK) x for a periodic alpha.
double periodic_decay_rate(const Mat& A, const Mat& BK, const PwcSignal& alpha);

/// Random then coordinate search over duty phase, pattern and on-value for
/// the slowest decay.
SearchResult worst_case_search(const Mat& A, const Mat& BK, const PeClass& cls, int budget, std::uint64_t seed,
                               int workers = 1);

}  // namespace pestab
