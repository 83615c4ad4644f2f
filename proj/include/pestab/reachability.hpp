#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pestab/matkit.hpp"
#include "pestab/signals.hpp"

namespace pestab {

/// Gramian of x' = Ax + alpha(t) B u over [0, t].
struct GramianReport {
  double t = 0.0;
  Mat W;
  double min_sv = 0.0;
  bool controllable = false;
  std::optional<Vec> witness;  // unit near-kernel direction when not controllable
};

/// W = int_0^t alpha(s)^2 e^{A(t-s)} B B^T e^{A^T(t-s)} ds, one block
/// exponential per constant piece of alpha.
GramianReport gramian(const Mat& A, const Mat& B, const PwcSignal& alpha, double t);

/// Integral of e^{As} B B^T e^{A^T s} over [0, h].
Mat gramian_piece(const Mat& A, const Mat& B, double h);

/// Rank of [B, AB, ..., A^{n-1} B] at tolerance 1e-10 * sigma_max.
int kalman_rank(const Mat& A, const Mat& B);

struct ThresholdResult {
  double t = 0.0;
  PeClass cls;
  bool adversarial = false;   // t <= T - mu: zero-prefix signal was used
  bool claim = false;         // observed controllability matches the t > T - mu dichotomy
  double min_sv = 0.0;        // adversarial signal's, or the minimum over the battery
  double scale = 0.0;         // trace(W)/n for alpha = 1 on [0, t]
  std::string worst_label;
  std::optional<Vec> witness;
  int signals_checked = 0;
};

/// Controllability in time t over the class: singular for the zero-prefix
/// signal when t <= T - mu, nonsingular for every battery member otherwise.
ThresholdResult threshold_check(const Mat& A, const Mat& B, const PeClass& cls, double t,
                                const std::vector<BatteryMember>& battery);

}  // namespace pestab
