#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace pestab {

/// Window length T and excitation bound mu of the class of signals alpha with
/// values in [0,1] and integral over every window of length T at least mu.
struct PeClass {
  double T = 1.0;
  double mu = 1.0;

  /// Validating constructor: 0 < mu <= T, both finite.
  static PeClass make(double T, double mu);

  /// mu / T, the smallest admissible window average.
  double ratio() const { return mu / T; }
};

struct Periodic {
  double period = 0.0;
};

struct Hold {
  double value = 0.0;
};

using Extension = std::variant<Periodic, Hold>;

/// Piecewise-constant signal alpha: [0, inf) -> [0, 1].
///
/// `breakpoints` has one more entry than `values`; segment i is
/// [breakpoints[i], breakpoints[i+1]) and carries values[i]. Past the last
/// breakpoint the signal either repeats with period breakpoints.back() or
/// holds a constant.
class PwcSignal {
 public:
  PwcSignal(std::vector<double> breakpoints, std::vector<double> values, Extension extension);

  static PwcSignal constant(double value);

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  const Extension& extension() const { return extension_; }
  bool is_periodic() const { return std::holds_alternative<Periodic>(extension_); }
  double period() const;
  double horizon() const { return breakpoints_.back(); }

  /// Right-continuous value at t >= 0.
  double operator()(double t) const;

  /// Integral over [0, t].
  double cumulative(double t) const;

  /// Times in the open interval (t0, t1) where a segment starts, ascending.
  std::vector<double> switch_times(double t0, double t1) const;

  bool operator==(const PwcSignal& other) const;

 private:
  double base_cumulative(double t) const;

  std::vector<double> breakpoints_;
  std::vector<double> values_;
  Extension extension_;
  std::vector<double> cum_;  // cum_[i] = integral over [0, breakpoints_[i]]
};

double integrate_signal(const PwcSignal& alpha, double t0, double t1);

struct PeCheck {
  bool ok = false;
  double worst_window_start = 0.0;
  double worst_integral = 0.0;
};

/// Exact minimum of the window integral over window starts. Periodic signals
/// are checked over one period; others over windows contained in [0, horizon].
PeCheck verify_pe(const PwcSignal& alpha, const PeClass& cls, double horizon);

double window_average(const PwcSignal& alpha, double t, double T);

struct DutyPattern {
  enum class Kind { front, back, split };
  Kind kind = Kind::front;
  int blocks = 1;  // only meaningful for split

  static DutyPattern front() { return {Kind::front, 1}; }
  static DutyPattern back() { return {Kind::back, 1}; }
  static DutyPattern split(int k) { return {Kind::split, k}; }
  std::string name() const;
};

/// Period-T signal with per-period integral exactly mu, value on_value on the
/// on-blocks and 0 elsewhere, shifted so that it starts `phase` into the base
/// pattern.
PwcSignal make_duty(const PeClass& cls, double phase, double on_value, DutyPattern pattern);

/// s -> alpha(t0 + s)
PwcSignal shift(const PwcSignal& alpha, double t0);

/// s -> alpha(lambda * s)
PwcSignal rescale_time(const PwcSignal& alpha, double lambda);

struct BatteryMember {
  std::string label;
  PwcSignal signal;
};

/// Seeded battery of (T,mu)-signals: duty signals of every pattern with random
/// phases and on-values, plus random multi-level period-T signals whose
/// per-period integral is exactly mu. Covers only a finite sample of the class.
std::vector<BatteryMember> make_battery(const PeClass& cls, int size, std::uint64_t seed);

/// alpha = 0 on [0, t], then period-T front duty with on-value 1 for
/// `periods` periods, then alpha = 1. Belongs to the class iff t <= T - mu.
PwcSignal make_zero_prefix(const PeClass& cls, double t, int periods = 4);

}  // namespace pestab
