#include "pestab/signals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "pestab/error.hpp"

namespace pestab {

namespace {

constexpr double kPeSlack = 1e-12;

double wrap_into(double t, double period) {
  double local = t - std::floor(t / period) * period;
  if (local < 0.0) local = 0.0;
  if (local >= period) local = 0.0;
  return local;
}

// Drops zero-length segments and merges neighbours with equal values.
void normalize(std::vector<double>& bps, std::vector<double>& vals, double span) {
  const double eps = 1e-14 * std::max(1.0, span);
  std::vector<double> nb{bps.front()};
  std::vector<double> nv;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double len = bps[i + 1] - bps[i];
    if (len <= eps) continue;
    if (!nv.empty() && nv.back() == vals[i]) {
      nb.back() = bps[i + 1];
      continue;
    }
    nv.push_back(vals[i]);
    nb.push_back(bps[i + 1]);
  }
  if (nv.empty()) {
    nv.push_back(vals.front());
    nb.push_back(bps.back());
  }
  nb.back() = bps.back();
  bps = std::move(nb);
  vals = std::move(nv);
}

}  // namespace

PeClass PeClass::make(double T, double mu) {
  if (!std::isfinite(T) || !std::isfinite(mu) || !(mu > 0.0) || !(mu <= T)) {
    std::ostringstream os;
    os << "PE class requires 0 < mu <= T, got T=" << T << " mu=" << mu;
    throw DomainError(os.str());
  }
  return PeClass{T, mu};
}

PwcSignal::PwcSignal(std::vector<double> breakpoints, std::vector<double> values,
                     Extension extension)
    : breakpoints_(std::move(breakpoints)),
      values_(std::move(values)),
      extension_(extension) {
  if (values_.empty() || breakpoints_.size() != values_.size() + 1) {
    throw DomainError("PwcSignal: need n+1 breakpoints for n values");
  }
  if (breakpoints_.front() != 0.0) throw DomainError("PwcSignal: breakpoints must start at 0");
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i + 1]) || !(breakpoints_[i + 1] > breakpoints_[i])) {
      throw DomainError("PwcSignal: breakpoints must be finite and strictly increasing");
    }
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("PwcSignal: values must lie in [0,1]");
  }
  if (const auto* p = std::get_if<Periodic>(&extension_)) {
    const double last = breakpoints_.back();
    if (std::abs(p->period - last) > 1e-12 * std::max(1.0, last)) {
      throw DomainError("PwcSignal: period must equal the final breakpoint");
    }
    extension_ = Periodic{last};
  } else {
    const double h = std::get<Hold>(extension_).value;
    if (!(h >= 0.0 && h <= 1.0)) throw DomainError("PwcSignal: hold value must lie in [0,1]");
  }
  cum_.resize(breakpoints_.size());
  cum_[0] = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    cum_[i + 1] = cum_[i] + values_[i] * (breakpoints_[i + 1] - breakpoints_[i]);
  }
}

PwcSignal PwcSignal::constant(double value) { return PwcSignal({0.0, 1.0}, {value}, Periodic{1.0}); }

double PwcSignal::period() const {
  if (const auto* p = std::get_if<Periodic>(&extension_)) return p->period;
  throw DomainError("PwcSignal: signal is not periodic");
}

double PwcSignal::operator()(double t) const {
  if (!(t >= 0.0)) throw DomainError("PwcSignal: negative time");
  const double last = breakpoints_.back();
  if (t >= last) {
    if (const auto* h = std::get_if<Hold>(&extension_)) return h->value;
    t = wrap_into(t, last);
  }
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  const auto idx = static_cast<std::size_t>(std::distance(breakpoints_.begin(), it)) - 1;
  return values_[std::min(idx, values_.size() - 1)];
}

double PwcSignal::base_cumulative(double t) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  auto idx = static_cast<std::size_t>(std::distance(breakpoints_.begin(), it)) - 1;
  idx = std::min(idx, values_.size() - 1);
  return cum_[idx] + values_[idx] * (t - breakpoints_[idx]);
}

double PwcSignal::cumulative(double t) const {
  if (!(t >= 0.0)) throw DomainError("PwcSignal: negative time");
  const double last = breakpoints_.back();
  if (t <= last) return base_cumulative(t);
  if (const auto* h = std::get_if<Hold>(&extension_)) return cum_.back() + h->value * (t - last);
  const double periods = std::floor(t / last);
  const double local = t - periods * last;
  return periods * cum_.back() + base_cumulative(std::clamp(local, 0.0, last));
}

std::vector<double> PwcSignal::switch_times(double t0, double t1) const {
  std::vector<double> out;
  if (!(t1 > t0)) return out;
  const double guard = 1e-13 * std::max(1.0, std::abs(t1));
  auto push = [&](double s) {
    if (s > t0 + guard && s < t1 - guard) out.push_back(s);
  };
  const double last = breakpoints_.back();
  if (is_periodic()) {
    const double first_period = std::floor(std::max(t0, 0.0) / last);
    for (double m = first_period; m * last < t1; m += 1.0) {
      for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) push(m * last + breakpoints_[i]);
    }
  } else {
    for (double b : breakpoints_) push(b);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool PwcSignal::operator==(const PwcSignal& other) const {
  if (breakpoints_ != other.breakpoints_ || values_ != other.values_) return false;
  if (extension_.index() != other.extension_.index()) return false;
  if (is_periodic()) return true;
  return std::get<Hold>(extension_).value == std::get<Hold>(other.extension_).value;
}

double integrate_signal(const PwcSignal& alpha, double t0, double t1) {
  if (!(t0 >= 0.0) || !(t1 >= t0)) {
    std::ostringstream os;
    os << "integrate_signal: need 0 <= t0 <= t1, got (" << t0 << ", " << t1 << ")";
    throw DomainError(os.str());
  }
  return alpha.cumulative(t1) - alpha.cumulative(t0);
}

PeCheck verify_pe(const PwcSignal& alpha, const PeClass& cls, double horizon) {
  if (!(horizon >= cls.T)) throw DomainError("verify_pe: horizon shorter than the window T");
  // The window integral is piecewise linear in its start time with kinks
  // where either end crosses a breakpoint, so checking kinks is exact.
  std::vector<double> starts{0.0};
  if (alpha.is_periodic()) {
    const double p = alpha.period();
    for (double b : alpha.breakpoints()) {
      starts.push_back(wrap_into(b, p));
      starts.push_back(wrap_into(b - cls.T, p));
    }
  } else {
    const double last_start = horizon - cls.T;
    starts.push_back(last_start);
    for (double b : alpha.breakpoints()) {
      if (b <= last_start) starts.push_back(b);
      if (b - cls.T >= 0.0 && b - cls.T <= last_start) starts.push_back(b - cls.T);
    }
  }
  PeCheck out;
  out.worst_integral = std::numeric_limits<double>::infinity();
  for (double s : starts) {
    const double w = integrate_signal(alpha, s, s + cls.T);
    if (w < out.worst_integral) {
      out.worst_integral = w;
      out.worst_window_start = s;
    }
  }
  out.ok = out.worst_integral >= cls.mu - kPeSlack;
  return out;
}

double window_average(const PwcSignal& alpha, double t, double T) {
  if (!(T > 0.0)) throw DomainError("window_average: window length must be positive");
  return integrate_signal(alpha, t, t + T) / T;
}

std::string DutyPattern::name() const {
  switch (kind) {
    case Kind::front:
      return "front";
    case Kind::back:
      return "back";
    case Kind::split:
      return "split" + std::to_string(blocks);
  }
  return "?";
}

PwcSignal make_duty(const PeClass& cls, double phase, double on_value, DutyPattern pattern) {
  if (!(on_value > 0.0 && on_value <= 1.0)) throw DomainError("make_duty: on_value must lie in (0,1]");
  if (!std::isfinite(phase)) throw DomainError("make_duty: non-finite phase");
  if (pattern.kind == DutyPattern::Kind::split && pattern.blocks < 1) {
    throw DomainError("make_duty: split needs at least one block");
  }
  const double T = cls.T;
  double on_time = cls.mu / on_value;
  if (on_time > T * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "make_duty: on-time mu/on_value = " << on_time << " exceeds T = " << T;
    throw DomainError(os.str());
  }
  on_time = std::min(on_time, T);

  std::vector<double> bps{0.0};
  std::vector<double> vals;
  auto add = [&](double end, double v) {
    bps.push_back(end);
    vals.push_back(v);
  };
  switch (pattern.kind) {
    case DutyPattern::Kind::front:
      add(on_time, on_value);
      add(T, 0.0);
      break;
    case DutyPattern::Kind::back:
      add(T - on_time, 0.0);
      add(T, on_value);
      break;
    case DutyPattern::Kind::split: {
      const int k = pattern.blocks;
      for (int j = 0; j < k; ++j) {
        const double start = T * j / k;
        add(start + on_time / k, on_value);
        add(j + 1 == k ? T : T * (j + 1) / k, 0.0);
      }
      break;
    }
  }
  // Zero-length pieces appear when on_time == T; normalize drops them.
  std::vector<double> clean_b{0.0};
  std::vector<double> clean_v;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (bps[i + 1] > bps[i]) {
      clean_b.push_back(bps[i + 1]);
      clean_v.push_back(vals[i]);
    }
  }
  normalize(clean_b, clean_v, T);
  PwcSignal base(clean_b, clean_v, Periodic{T});
  PwcSignal out = shift(base, wrap_into(phase, T));
  if (!verify_pe(out, cls, T).ok) {
    throw ConstructionError("make_duty: constructed signal fails the PE check");
  }
  return out;
}

PwcSignal shift(const PwcSignal& alpha, double t0) {
  if (!(t0 >= 0.0)) throw DomainError("shift: t0 must be non-negative");
  const auto& b = alpha.breakpoints();
  const auto& v = alpha.values();
  std::vector<double> nb{0.0};
  std::vector<double> nv;
  if (alpha.is_periodic()) {
    const double p = alpha.period();
    const double local = wrap_into(t0, p);
    if (local == 0.0) return alpha;
    // Walk two copies of the base period starting at `local`.
    for (int copy = 0; copy < 2; ++copy) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double s = b[i] + copy * p - local;
        const double e = b[i + 1] + copy * p - local;
        if (e <= 0.0) continue;
        if (s >= p) break;
        nb.push_back(std::min(e, p));
        nv.push_back(v[i]);
      }
    }
    nb.back() = p;
    normalize(nb, nv, p);
    return PwcSignal(nb, nv, Periodic{p});
  }
  const double hold = std::get<Hold>(alpha.extension()).value;
  if (t0 >= b.back()) return PwcSignal({0.0, 1.0}, {hold}, Hold{hold});
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (b[i + 1] <= t0) continue;
    nb.push_back(b[i + 1] - t0);
    nv.push_back(v[i]);
  }
  normalize(nb, nv, b.back());
  return PwcSignal(nb, nv, Hold{hold});
}

PwcSignal rescale_time(const PwcSignal& alpha, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("rescale_time: lambda must be positive");
  if (lambda == 1.0) return alpha;
  std::vector<double> nb = alpha.breakpoints();
  for (double& x : nb) x /= lambda;
  nb.front() = 0.0;
  if (alpha.is_periodic()) return PwcSignal(nb, alpha.values(), Periodic{nb.back()});
  return PwcSignal(nb, alpha.values(), alpha.extension());
}

namespace {

PwcSignal random_multilevel(const PeClass& cls, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pieces_dist(3, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int pieces = pieces_dist(rng);
  std::vector<double> cuts{0.0, cls.T};
  for (int i = 1; i < pieces; ++i) cuts.push_back(cls.T * unit(rng));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<double> vals(cuts.size() - 1);
  for (double& v : vals) v = unit(rng) < 0.3 ? 0.0 : unit(rng);
  double integral = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) integral += vals[i] * (cuts[i + 1] - cuts[i]);
  // Bring the per-period integral to exactly mu, the tightest admissible level.
  if (integral < cls.mu) {
    const double c = (cls.mu - integral) / (cls.T - integral);
    for (double& v : vals) v = std::min(1.0, v + c * (1.0 - v));
  } else if (integral > 0.0) {
    for (double& v : vals) v *= cls.mu / integral;
  }
  normalize(cuts, vals, cls.T);
  return PwcSignal(cuts, vals, Periodic{cls.T});
}

}  // namespace

std::vector<BatteryMember> make_battery(const PeClass& cls, int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> blocks(2, 5);
  std::vector<BatteryMember> out;
  out.reserve(static_cast<std::size_t>(std::max(size, 0)));
  const double low = cls.ratio();
  for (int i = 0; i < size; ++i) {
    const double phase = cls.T * unit(rng);
    const double on_value = low + (1.0 - low) * unit(rng);
    std::ostringstream label;
    label.precision(6);
    switch (i % 4) {
      case 0: {
        label << "duty:front:on=1:phase=" << phase;
        out.push_back({label.str(), make_duty(cls, phase, 1.0, DutyPattern::front())});
        break;
      }
      case 1: {
        const auto pat = DutyPattern::split(blocks(rng));
        label << "duty:" << pat.name() << ":on=" << on_value << ":phase=" << phase;
        out.push_back({label.str(), make_duty(cls, phase, on_value, pat)});
        break;
      }
      case 2: {
        label << "duty:back:on=" << on_value << ":phase=" << phase;
        out.push_back({label.str(), make_duty(cls, phase, on_value, DutyPattern::back())});
        break;
      }
      default: {
        label << "multilevel:" << i;
        PwcSignal sig = random_multilevel(cls, rng);
        out.push_back({label.str(), shift(sig, phase)});
        break;
      }
    }
  }
  return out;
}

PwcSignal make_zero_prefix(const PeClass& cls, double t, int periods) {
  if (!(t >= 0.0)) throw DomainError("make_zero_prefix: negative length");
  std::vector<double> bps{0.0};
  std::vector<double> vals;
  if (t > 0.0) {
    bps.push_back(t);
    vals.push_back(0.0);
  }
  double start = t;
  for (int p = 0; p < std::max(periods, 1); ++p) {
    bps.push_back(start + cls.mu);
    vals.push_back(1.0);
    if (cls.mu < cls.T) {
      bps.push_back(start + cls.T);
      vals.push_back(0.0);
    }
    start += cls.T;
  }
  return PwcSignal(bps, vals, Hold{1.0});
}

}  // namespace pestab
