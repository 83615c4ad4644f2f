#include "pestab/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "pestab/error.hpp"
#include "pestab/gains.hpp"
#include "pestab/parallel.hpp"

namespace pestab {

namespace {

void require_positive_gain(const Mat& K) {
  if (K.rows() != 1 || K.cols() != 2) throw ShapeError("destabilizer: K must be 1x2");
  if (!(K(0, 0) < 0.0) || !(K(0, 1) < 0.0)) {
    throw PreconditionError("need k1, k2 > 0 in K = (-k1, -k2): otherwise A+bK is not Hurwitz");
  }
}

// Time within which a constant-matrix flow turns by pi, or a long fallback
// when the eigenvalues are real.
double half_turn_time(const Mat& m) {
  const auto ev = matkit::eig(m);
  double w = 0.0, re = 0.0;
  for (const auto& l : ev) {
    w = std::max(w, std::abs(l.imag()));
    re = std::max(re, std::abs(l.real()));
  }
  if (w > 0.0) return 1.05 * std::numbers::pi / w;
  return re > 0.0 ? 50.0 / re : 1e6;
}

Vec point(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

QPartition QPartition::from_gain(const Mat& K) {
  require_positive_gain(K);
  return QPartition{-K(0, 0), -K(0, 1)};
}

int QPartition::region(const Vec& x) const {
  if (x.size() != 2) throw ShapeError("QPartition: planar state required");
  if (x(0) == 0.0 && x(1) == 0.0) throw DegenerateStateError("QPartition: zero state");
  const double gx = g(x);
  if (gx >= 0.0 && x(1) > 0.0) return 1;
  if (gx > 0.0 && x(1) <= 0.0) return 2;
  if (gx <= 0.0 && x(1) < 0.0) return 3;
  return 4;
}

double zeta(const ZetaFeedback& z, const Vec& x) {
  const int r = QPartition::from_gain(z.K).region(x);
  return (r == 2 || r == 4) ? 1.0 : z.ratio;
}

DestabilizerRun run_destabilizer(const Mat& K, const PeClass& cls, const Vec& x0, int revolutions, double max_step) {
  const QPartition q = QPartition::from_gain(K);
  if (revolutions < 1) throw DomainError("run_destabilizer: revolutions must be >= 1");
  const ZetaFeedback zf{K, cls.ratio()};
  const Mat A = di_A();
  const Mat b = di_B();
  const double s = q.k1 / q.k2;
  // Exit ray of each region, in the order the flow visits them.
  const HalfLine exits[4] = {HalfLine::positive_x1_axis(), HalfLine::along(1.0, -s), HalfLine::negative_x1_axis(),
                             HalfLine::along(-1.0, s)};

  DestabilizerRun out;
  out.cls = cls;
  out.revolutions = revolutions;
  std::vector<double> bps{0.0};
  std::vector<double> vals;
  Vec x = x0;
  int region = q.region(x);
  double t = 0.0;
  out.revolution_norms.push_back(x.norm());
  int pieces = 0;
  const int start_region = region;
  while (static_cast<int>(out.revolution_norms.size()) <= revolutions) {
    const double a = zeta(zf, x);
    const Mat m = A + a * b * K;
    const auto hit = first_crossing(m, x, exits[region - 1], half_turn_time(m), 256);
    if (!hit) {
      std::ostringstream os;
      os << "run_destabilizer: trajectory stops revolving in region Q" << region << " at t = " << t;
      throw ConsistencyError(os.str());
    }
    if (hit->t < 1e-12) throw ConsistencyError("run_destabilizer: two switches within 1e-12");
    t += hit->t;
    x = hit->x;
    bps.push_back(t);
    vals.push_back(a);
    const int next = region % 4 + 1;
    if (q.region(x) != next) throw ConsistencyError("run_destabilizer: crossing did not enter the next region");
    region = next;
    ++pieces;
    if (region == start_region && pieces % 4 == 0) out.revolution_norms.push_back(x.norm());
  }
  out.induced_signal = PwcSignal(bps, vals, Hold{vals.back()});
  out.growth_per_rev = out.revolution_norms[1] / out.revolution_norms[0];
  const ClosedLoop sys = ClosedLoop::make(A, b, K, out.induced_signal);
  out.traj = propagate(sys, 0.0, x0, t, max_step > 0.0 ? max_step : default_max_step(sys));
  out.traj.label = "destabilizer";
  out.pe = verify_pe(out.induced_signal, cls, std::max(t, cls.T));
  return out;
}

double xi_of_nu(const Mat& K, const Vec& x_bar, double nu, int grid) {
  const Mat m = di_A() + nu * di_B() * K;
  const auto hit = first_crossing(m, x_bar, HalfLine::positive_x1_axis(), half_turn_time(m), grid);
  if (!hit) return -std::numeric_limits<double>::infinity();
  return hit->x(0);
}

NuSearch find_nu(const Mat& K, int grid) {
  const QPartition q = QPartition::from_gain(K);
  const Mat m1 = di_A() + di_B() * K;
  const auto bar = first_crossing(m1, point(-1.0, 0.0), HalfLine::along(-1.0, q.k1 / q.k2), half_turn_time(m1), grid);
  if (!bar) throw ConsistencyError("find_nu: the alpha = 1 flow from (-1, 0) never reaches D");
  NuSearch out;
  out.x_bar = bar->x;
  double lo = 1e-12;
  double hi = 1.0;
  if (!(xi_of_nu(K, out.x_bar, lo, grid) > 1.0)) {
    throw ConsistencyError("find_nu: xi(nu) <= 1 already at nu = 1e-12");
  }
  if (xi_of_nu(K, out.x_bar, hi, grid) > 1.0) {
    out.nu_hat = hi;
    return out;
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (xi_of_nu(K, out.x_bar, mid, grid) > 1.0) lo = mid;
    else hi = mid;
    ++out.iterations;
  }
  out.nu_hat = lo;
  return out;
}

double periodic_decay_rate(const Mat& A, const Mat& BK, const PwcSignal& alpha) {
  if (!alpha.is_periodic()) throw DomainError("periodic_decay_rate: periodic signal required");
  const auto& bps = alpha.breakpoints();
  const auto& vals = alpha.values();
  Mat phi = Mat::Identity(A.rows(), A.cols());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    phi = matkit::expm(A + vals[i] * BK, bps[i + 1] - bps[i]) * phi;
  }
  double radius = 0.0;
  for (const auto& l : matkit::eig(phi)) radius = std::max(radius, std::abs(l));
  if (radius == 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(radius) / alpha.period();
}

namespace {

struct Candidate {
  int kind = 0;  // 0 front, 1 back, 2..5 split into that many blocks
  double phase = 0.0;
  double on = 1.0;

  DutyPattern pattern() const {
    if (kind == 0) return DutyPattern::front();
    if (kind == 1) return DutyPattern::back();
    return DutyPattern::split(kind);
  }
  std::string label() const {
    std::ostringstream os;
    os << pattern().name() << "/phase=" << phase << "/on=" << on;
    return os.str();
  }
};

}  // namespace

SearchResult worst_case_search(const Mat& A, const Mat& BK, const PeClass& cls, int budget, std::uint64_t seed,
                               int workers) {
  if (budget < 1) throw DomainError("worst_case_search: budget must be >= 1");
  const double r = cls.ratio();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> kind_dist(0, 5);

  SearchResult best;
  best.decay = std::numeric_limits<double>::infinity();
  Candidate best_c;
  auto evaluate = [&](const std::vector<Candidate>& cands) {
    std::vector<double> decay(cands.size());
    std::vector<PwcSignal> sigs(cands.size(), PwcSignal::constant(1.0));
    parallel_for(cands.size(), workers, [&](std::size_t i) {
      sigs[i] = make_duty(cls, cands[i].phase, cands[i].on, cands[i].pattern());
      decay[i] = periodic_decay_rate(A, BK, sigs[i]);
    });
    bool improved = false;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      ++best.evaluated;
      if (decay[i] < best.decay) {
        best.decay = decay[i];
        best.signal = sigs[i];
        best.label = cands[i].label();
        best_c = cands[i];
        improved = true;
      }
    }
    return improved;
  };

  const int n_random = budget == 1 ? 1 : std::max(1, budget / 2);
  std::vector<Candidate> random;
  for (int i = 0; i < n_random; ++i) {
    Candidate c;
    c.kind = kind_dist(rng);
    c.phase = unit(rng) * cls.T;
    c.on = r + (1.0 - r) * unit(rng);
    random.push_back(c);
  }
  evaluate(random);

  double d_phase = cls.T / 8.0;
  double d_on = (1.0 - r) / 4.0;
  while (best.evaluated < budget) {
    std::vector<Candidate> moves;
    for (double dp : {-d_phase, d_phase}) {
      Candidate c = best_c;
      c.phase = std::fmod(c.phase + dp + cls.T, cls.T);
      moves.push_back(c);
    }
    for (double dv : {-d_on, d_on}) {
      Candidate c = best_c;
      c.on = std::clamp(c.on + dv, r, 1.0);
      moves.push_back(c);
    }
    for (int kind = 0; kind < 6; ++kind) {
      if (kind == best_c.kind) continue;
      Candidate c = best_c;
      c.kind = kind;
      moves.push_back(c);
    }
    const auto room = static_cast<std::size_t>(budget - best.evaluated);
    if (moves.size() > room) moves.resize(room);
    if (!evaluate(moves)) {
      d_phase /= 2.0;
      d_on /= 2.0;
    }
  }
  return best;
}

}  // namespace pestab
