#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pestab/gains.hpp"
#include "pestab/signals.hpp"
#include "pestab/simcore.hpp"

namespace pestab {

struct BatteryInfo {
  std::uint64_t seed = 0;
  int size = 0;
  std::string spec;
};

/// Outcome of one numerical check. `measured` holds estimated constants;
/// none of them is a proved bound.
struct Certificate {
  std::string name;
  bool pass = false;
  std::map<std::string, double> measured;
  double tolerance = 0.0;
  BatteryInfo battery;
  std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Batch simulation

struct RunSpec {
  std::string label;
  PwcSignal signal;
  Vec x0;
};

/// Propagates x' = (A + alpha B K) x for every run on [0, horizon], in parallel.
/// Output order follows `runs`.
std::vector<Trajectory> simulate_batch(const Mat& A, const Mat& B, const Mat& K, const std::vector<RunSpec>& runs,
                                       double horizon, double max_step, int workers);

/// n unit vectors evenly spaced on the circle, starting at angle offset.
std::vector<Vec> circle_grid(int n, double offset = 0.0);

/// Unit vectors (cos phi, k sin phi)/norm with phi evenly spaced: uniform in
/// the F-angle of gain parameter k.
std::vector<Vec> f_angle_grid(int n, double k);

/// Every (signal, x0) pair, labelled "<signal label>/x<j>".
std::vector<RunSpec> cross_runs(const std::vector<BatteryMember>& signals, const std::vector<Vec>& x0s);

/// Part of the trajectory on [t_a, t_b] with exact end states.
Trajectory slice(const Trajectory& traj, double t_a, double t_b);

// ---------------------------------------------------------------------------
// Decay and envelopes

struct DecayFit {
  double gamma_hat = 0.0;
  double C_hat = 0.0;
  double residual = 0.0;
  bool accepted = false;  // residual small enough for an exponential model
  int samples = 0;
};

/// Least squares ln|x(t)| ~ ln C - gamma (t - t_start) over samples at or after t_start.
DecayFit decay_rate(const Trajectory& traj, double t_start);

/// |x(t)| <= C |x0| e^{-gamma (t - t0)} fitted over a batch. Fails (naming
/// the worst trajectory) unless gamma > 0.
Certificate kl_envelope(const std::vector<Trajectory>& batch);

/// Checks a given (C, gamma) envelope against a batch.
Certificate kl_check(const std::vector<Trajectory>& batch, double C, double gamma);

// ---------------------------------------------------------------------------
// Neutrally stable case

/// V = |x|^2/2 non-increasing and V' = -r alpha |B^T x|^2 on constant pieces.
Certificate check_V_neutral(const Trajectory& traj, const Mat& B, double r = 1.0);

/// eta_hat = min over signals and x0 of int_0^T alpha |B^T x|^2 / v dt with
/// v = |x|^2/2, under K = -B^T. A must be skew-symmetric.
Certificate estimate_eta(const Mat& A, const Mat& B, const PeClass& cls, const std::vector<BatteryMember>& battery,
                         const std::vector<Vec>& x0_grid, int workers);

// ---------------------------------------------------------------------------
// Double integrator, base gain (-rho k^2/2, -k) with signals of class (T/lambda, mu/lambda)

/// Maximal time intervals during which x stays in C1 u C2 (x and -x identified).
struct Sojourn {
  double t_begin = 0.0;
  double t_end = 0.0;
  bool open_begin = false;  // starts at the trajectory start
  bool open_end = false;    // runs until the trajectory end
  double length() const { return t_end - t_begin; }
};
std::vector<Sojourn> outer_sojourns(const Trajectory& traj, const ConeGeometry& geom);

/// Maximal intervals inside the middle cone.
std::vector<Sojourn> middle_sojourns(const Trajectory& traj, const ConeGeometry& geom);

/// F(theta) non-increasing and window drops over T/lambda of at least
/// c mu k / lambda. `traj` must stay in C1 u C2.
Certificate check_F_monotone(const Trajectory& traj, const ConeGeometry& geom, const PeClass& cls_lambda);

/// Longest stay in C1 u C2.
Certificate dwell_times(const Trajectory& traj, const ConeGeometry& geom);

/// V = x1^2 + 2 x2^2/(rho k^2) non-increasing while x1 <= 0, x2 >= 0 (or the mirror quadrant).
Certificate check_quadrant_V(const Trajectory& traj, double rho, double k);

/// Inside the middle cone: w = 1 + (rho k/2) x1/x2 within its bounds, |x2|
/// non-increasing, and an exponential envelope for |x|.
Certificate check_cs_decay(const Trajectory& traj, const ConeGeometry& geom, const PeClass& cls_lambda);

/// Constant alpha = ratio from D^s_-: stays between D^s_- and D^ratio_- and decays.
Certificate comparison_final0(double rho, double k, double ratio);

/// Constant alpha = ratio from the unit point of D^s_+ to the positive x1-axis.
Certificate comparison_c2(double rho, double k, double ratio);

/// Crossings of the x1-axis and per-excursion contraction.
Certificate chain_contraction(const Trajectory& traj, double k, double min_excursion = 1.0);

/// Base-frame runs of the double integrator: signals rescaled by lambda.
std::vector<Trajectory> di_base_batch(double rho, double k, double lambda, const std::vector<BatteryMember>& battery,
                                      const std::vector<Vec>& x0s, double horizon, int workers);

/// Trajectory identity Diag(1,l) x(l t; K, alpha) = x(t; Diag(1,l) x0, K_l, alpha(l .)).
Certificate rescaling_identity(const Mat& K, const PwcSignal& alpha, const Vec& x0, double lambda, double horizon);

/// Rank-2 input: y = e^{-At} x has |y(t)| = exp(-k int alpha) |y(0)|.
Certificate multi_input_check(const Mat& A, const Mat& B, double k, const std::vector<RunSpec>& runs,
                              double horizon, int workers);

// ---------------------------------------------------------------------------
// Gain search and signal-limit demonstration

struct TuneOptions {
  int battery_size = 24;
  std::uint64_t seed = 1;
  int x0_count = 8;
  double horizon = 20.0;          // in units of T
  int search_budget = 64;         // worst_case_search budget per candidate gain
  double cap = 65536.0;           // 2^16
  int workers = 1;
};

struct TuneResult {
  bool found = false;
  double k_star_hat = 0.0;
  double lambda_star_hat = 0.0;
  double k_pass = 0.0;       // first passing k in the doubling search
  double lambda_pass = 0.0;  // first passing lambda with k = k_pass
  std::vector<std::string> log;
};

/// Does K stabilize the battery plus the worst duty signal found by search?
Certificate di_stability_check(const PeClass& cls, const Mat& K, const std::vector<BatteryMember>& battery,
                               const TuneOptions& opt);

/// Doubling search on k with lambda = k, then on lambda with that k; result carries a 2x margin.
TuneResult tune(const PeClass& cls, double rho, const TuneOptions& opt);

struct WeakStarRow {
  int i = 0;
  double sup_distance = 0.0;
};

/// Square waves of period 1/i and duty d against the constant-d limit on [0, horizon].
Certificate weak_star_demo(const Mat& A, const Mat& B, const Mat& K, const Vec& x0, double duty,
                           const std::vector<int>& indices, double horizon, std::vector<WeakStarRow>* rows = nullptr);

}  // namespace pestab
