#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "pestab/adversary.hpp"
#include "pestab/certify.hpp"
#include "pestab/error.hpp"
#include "pestab/gains.hpp"

using namespace pestab;
using Catch::Matchers::WithinAbs;

namespace {

Mat rot() {
  Mat a(2, 2);
  a << 0, 1, -1, 0;
  return a;
}
Mat bcol() { return (Vec(2) << 0, 1).finished(); }
Vec vec2(double a, double b) { return (Vec(2) << a, b).finished(); }
Mat row(double a, double b) { return (Mat(1, 2) << a, b).finished(); }
Mat di_base(double rho, double k) { return row(-rho * k * k / 2, -k); }

Trajectory run(const Mat& A, const Mat& B, const Mat& K, const PwcSignal& a, const Vec& x0, double horizon,
               double step = 0.0) {
  const auto sys = ClosedLoop::make(A, B, K, a);
  return propagate(sys, 0.0, x0, horizon, step > 0 ? step : default_max_step(sys));
}

// Simpson quadrature of |B^T x|^2 / (|x|^2/2) along x(t) = expm(M t) x0.
double eta_alpha_one(const Mat& A, const Mat& B, const Vec& x0, double T, int n = 20000) {
  const Mat M = A - B * B.transpose();
  const double h = T / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const Vec x = matkit::expm(M, i * h) * x0;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * (B.transpose() * x).squaredNorm() / (0.5 * x.squaredNorm());
  }
  return s * h / 3.0;
}

// First root of x2 - xi x1 along the closed form of a diagonalizable constant flow.
double closed_form_crossing(const Mat& M, const Vec& x0, double xi, double t_max) {
  Eigen::EigenSolver<Mat> es(M);
  const Eigen::MatrixXcd V = es.eigenvectors();
  const Eigen::VectorXcd c = V.fullPivLu().solve(x0.cast<std::complex<double>>());
  auto f = [&](double t) {
    Eigen::VectorXcd x = V * (c.array() * (es.eigenvalues().array() * t).exp()).matrix();
    return x(1).real() - xi * x(0).real();
  };
  double lo = 0.0, step = t_max / 20000;
  const double f0 = f(1e-12);
  double hi = lo;
  while (hi < t_max) {
    hi += step;
    if ((f(hi) > 0) != (f0 > 0)) break;
    lo = hi;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) > 0) == (f0 > 0)) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("decay_rate") {
  const auto tr = run(Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Constant(1, 1, -3.0), PwcSignal::constant(0.5),
                      Vec::Constant(1, 2.0), 10.0);
  const auto fit = decay_rate(tr, 0.0);
  CHECK_THAT(fit.gamma_hat, WithinAbs(0.5, 1e-8));
  CHECK_THAT(fit.C_hat, WithinAbs(2.0, 1e-8));
  CHECK(fit.residual <= 1e-8);
  CHECK(fit.accepted);

  const auto later = decay_rate(tr, 4.0);
  CHECK_THAT(later.C_hat, WithinAbs(2.0 * std::exp(-2.0), 1e-8));

  const auto skew = decay_rate(run(rot(), bcol(), row(0, 0), PwcSignal::constant(0), vec2(1, 2), 10.0), 0.0);
  CHECK_THAT(skew.gamma_hat, WithinAbs(0.0, 1e-10));

  const auto lin = decay_rate(run(di_A(), di_B(), row(0, 0), PwcSignal::constant(0), vec2(0, 1), 10.0), 0.0);
  CHECK_FALSE(lin.accepted);
  CHECK(lin.gamma_hat <= 0.0);

  const auto shortrun = run(di_A(), di_B(), row(-1, -1), PwcSignal::constant(1), vec2(0, 1), 0.01, 0.002);
  CHECK_THROWS_AS(decay_rate(shortrun, 0.0), InsufficientDataError);
}

TEST_CASE("check_V_neutral") {
  const Mat K = -bcol().transpose();
  const auto zero = check_V_neutral(run(rot(), bcol(), K, PwcSignal::constant(0), vec2(1, 0), 10.0), bcol());
  CHECK(zero.pass);
  const auto one = run(rot(), bcol(), K, PwcSignal::constant(1), vec2(1, 0), 10.0, 1e-3);
  CHECK(check_V_neutral(one, bcol()).pass);
  // strictly decreasing except where B^T x = 0
  for (std::size_t i = 0; i + 1 < one.size(); ++i) {
    const double v0 = one.states[i].squaredNorm(), v1 = one.states[i + 1].squaredNorm();
    if (std::abs(one.states[i](1)) > 1e-3) CHECK(v1 < v0);
  }
  const PeClass cls = PeClass::make(1.0, 0.5);
  for (const auto& m : make_battery(cls, 50, 3)) {
    CHECK(check_V_neutral(run(rot(), bcol(), K, m.signal, vec2(0.6, 0.8), 6.0, 1e-2), bcol()).pass);
  }
  // wrong sign: energy grows
  CHECK_FALSE(check_V_neutral(run(rot(), bcol(), -K, PwcSignal::constant(1), vec2(1, 0), 2.0), bcol()).pass);
}

TEST_CASE("estimate_eta") {
  const PeClass cls = PeClass::make(1.0, 1.0);
  const auto grid = circle_grid(16);
  const auto cert = estimate_eta(rot(), bcol(), cls, {{"one", PwcSignal::constant(1.0)}}, grid, 2);
  double oracle = 1e300;
  for (const auto& x0 : grid) oracle = std::min(oracle, eta_alpha_one(rot(), bcol(), x0, 1.0));
  CHECK_THAT(cert.measured.at("eta_hat"), WithinAbs(oracle, 1e-5));
  CHECK(cert.pass);

  // x0 in ker B^T, excitation early: rotation still excites
  const PeClass half = PeClass::make(1.0, 0.5);
  const auto early = estimate_eta(rot(), bcol(), half, {{"front", make_duty(half, 0.0, 1.0, DutyPattern::front())}},
                                  {vec2(1, 0)}, 1);
  CHECK(early.measured.at("eta_hat") > 0.0);
  CHECK(early.pass);

  // square invertible B: integrand >= 2 sigma_min(B)^2 alpha
  const Mat Bsq = (Mat(2, 2) << 1.0, 0.2, -0.3, 0.8).finished();
  const auto sq = estimate_eta(rot(), Bsq, cls, {{"one", PwcSignal::constant(1.0)}}, circle_grid(8), 1);
  CHECK(sq.measured.at("eta_hat") >= 2.0 * std::pow(matkit::min_sv(Bsq), 2) * (1.0 - 1e-3));

  CHECK_THROWS_AS(estimate_eta(di_A(), di_B(), cls, {{"one", PwcSignal::constant(1.0)}}, grid, 1), PreconditionError);
  CHECK_THROWS_AS(estimate_eta(rot(), Mat::Zero(2, 1), cls, {{"one", PwcSignal::constant(1.0)}}, grid, 1),
                  PreconditionError);
  CHECK_THROWS_AS(estimate_eta(rot(), bcol(), cls, {}, grid, 1), InsufficientDataError);
}

TEST_CASE("check_F_monotone") {
  const double rho = 0.2, k = 4.0;
  const auto g = cone_geometry(rho, k, 0.5);
  const PeClass cls = PeClass::make(1.0, 0.5);
  // alpha = 0 from inside C1: theta' = -sin^2 theta
  const auto free_run = run(di_A(), di_B(), di_base(rho, k), PwcSignal::constant(0), vec2(-1, 0.05), 0.5);
  const auto sojourn = outer_sojourns(free_run, g).front();
  const auto c0 = check_F_monotone(slice(free_run, sojourn.t_begin, sojourn.t_end), g, cls);
  CHECK(c0.measured.at("violations") == 0.0);

  // alpha = 1 from D^s_+ toward the positive axis: strict decrease and a positive window drop
  const auto tr = run(di_A(), di_B(), di_base(rho, k), PwcSignal::constant(1.0), vec2(-1, -g.xi_s_plus), 2.0);
  const auto soj = outer_sojourns(tr, g);
  REQUIRE_FALSE(soj.empty());
  const auto piece = slice(tr, soj.front().t_begin, soj.front().t_end);
  const auto c1 = check_F_monotone(piece, g, PeClass::make(0.05, 0.025));
  CHECK(c1.pass);
  CHECK(c1.measured.at("c_hat") > 0.0);

  // window drops under a fast duty battery
  const double lambda = 8.0;
  const PeClass cl = PeClass::make(1.0 / lambda, 0.5 / lambda);
  for (const auto& m : make_battery(cls, 8, 5)) {
    const auto t = run(di_A(), di_B(), di_base(rho, k), rescale_time(m.signal, lambda), vec2(-1, 0.05), 3.0);
    for (const auto& s : outer_sojourns(t, g)) {
      if (s.length() < 2 * cl.T) continue;
      const auto c = check_F_monotone(slice(t, s.t_begin, s.t_end), g, cl);
      CHECK(c.pass);
      CHECK(c.measured.at("c_hat") > 0.0);
    }
  }

  // precondition: interior of the middle cone
  const Vec mid = vec2(-1, -0.5 * (g.xi_s_plus + g.xi_s_minus));
  CHECK_THROWS_AS(check_F_monotone(run(di_A(), di_B(), di_base(rho, k), PwcSignal::constant(1), mid, 0.1), g, cls),
                  PreconditionError);
}

TEST_CASE("dwell_times") {
  const double rho = 0.2, k = 4.0, ratio = 0.5;
  const auto g = cone_geometry(rho, k, ratio);
  // on the slow eigenline inside C^s: never in C1 u C2
  const auto stay = run(di_A(), di_B(), di_base(rho, k), PwcSignal::constant(ratio), vec2(-1, -g.xi_ratio_minus), 5.0);
  const auto c = dwell_times(stay, g);
  CHECK(c.measured.at("max_dwell") == 0.0);
  CHECK(c.pass);

  // from the negative x1-axis into C^s: dwell equals the closed-form crossing time of D^s_-
  const Mat M = di_A() + ratio * di_B() * di_base(rho, k);
  const auto tr = run(di_A(), di_B(), di_base(rho, k), PwcSignal::constant(ratio), vec2(-1, 0), 5.0);
  const auto d = dwell_times(tr, g);
  CHECK_THAT(d.measured.at("max_dwell"), WithinAbs(closed_form_crossing(M, vec2(-1, 0), g.xi_s_minus, 5.0), 1e-9));
  CHECK(d.pass);

  // a trajectory that never leaves C1 u C2 fails the finiteness check
  const auto stuck = run(di_A(), di_B(), di_base(rho, k), PwcSignal::constant(0), vec2(0, 1), 3.0);
  CHECK_FALSE(dwell_times(stuck, g).pass);
}

TEST_CASE("check_quadrant_V") {
  const auto free_run = run(di_A(), di_B(), row(0, 0), PwcSignal::constant(0), vec2(-1, 0.5), 1.9);
  const auto c = check_quadrant_V(free_run, 0.2, 4.0);
  CHECK(c.pass);
  CHECK(c.measured.at("checked_pairs") > 0.0);

  const auto boundary = run(di_A(), di_B(), row(0, 0), PwcSignal::constant(0), vec2(0, 1), 1.0);
  CHECK(check_quadrant_V(boundary, 0.2, 4.0).pass);

  for (const auto& m : make_battery(PeClass::make(1.0, 0.5), 12, 6)) {
    const auto t = run(di_A(), di_B(), di_base(0.2, 4.0), m.signal, vec2(-1, 1), 6.0);
    CHECK(check_quadrant_V(t, 0.2, 4.0).pass);
  }
  const auto one = run(di_A(), di_B(), di_base(0.2, 4.0), PwcSignal::constant(1), vec2(-1, 2), 3.0);
  const auto c1 = check_quadrant_V(one, 0.2, 4.0);
  CHECK(c1.pass);
  CHECK(c1.measured.at("checked_pairs") > 0.0);
}

TEST_CASE("check_cs_decay") {
  const double rho = 0.2, k = 4.0, ratio = 0.5;
  const auto g = cone_geometry(rho, k, ratio);
  const PeClass cls = PeClass::make(1.0, ratio);
  // on the eigenline x2 = xi x1, x2 decays at rate -xi = k ratio (1 + rho k / (2 xi))
  const double xi = g.xi_ratio_minus;
  const auto tr = run(di_A(), di_B(), di_base(rho, k), PwcSignal::constant(ratio), vec2(-1, -xi), 3.0);
  const auto c = check_cs_decay(tr, g, cls);
  CHECK(c.pass);
  const double w = 1 + rho * k / (2 * xi);
  CHECK_THAT(c.measured.at("w_min"), WithinAbs(w, 1e-9));
  CHECK_THAT(c.measured.at("w_max"), WithinAbs(w, 1e-9));
  CHECK_THAT(-xi, WithinAbs(k * ratio * w, 1e-12));
  const double lo = 1 + rho * k / (2 * g.xi_s_minus), hi = 1 + rho * k / (2 * g.xi_s_plus);
  CHECK(w >= lo);
  CHECK(w <= hi);

  // k-independent bounds
  const auto g8 = cone_geometry(rho, 8.0, ratio);
  CHECK_THAT(1 + rho * 8.0 / (2 * g8.xi_s_minus), WithinAbs(lo, 1e-12));
  CHECK_THAT(1 + rho * 8.0 / (2 * g8.xi_s_plus), WithinAbs(hi, 1e-12));

  // battery at lambda = k
  const PeClass cl = PeClass::make(1.0 / k, ratio / k);
  for (const auto& m : make_battery(cls, 8, 9)) {
    const auto t = run(di_A(), di_B(), di_base(rho, k), rescale_time(m.signal, k), vec2(-1, -g.xi_s_minus), 4.0);
    for (const auto& s : middle_sojourns(t, g)) {
      if (s.length() > 0) CHECK(check_cs_decay(slice(t, s.t_begin, s.t_end), g, cl).pass);
    }
  }
}

TEST_CASE("comparison_final0") {
  const auto c = comparison_final0(0.2, 4.0, 0.5);
  CHECK(c.pass);
  CHECK(c.measured.at("final_norm_ratio") <= 1e-6);
  CHECK(c.measured.at("escapes") == 0.0);
  CHECK(comparison_final0(0.2, 4.0, 0.99).pass);

  // straight-line decay along the slow eigendirection
  const auto g = cone_geometry(0.2, 4.0, 0.5);
  const Vec x0 = vec2(-1, -g.xi_ratio_minus);
  const auto tr = run(di_A(), di_B(), di_base(0.2, 4.0), PwcSignal::constant(0.5), x0, 5.0);
  for (const auto& x : tr.states) CHECK(std::abs(x(1) - g.xi_ratio_minus * x(0)) <= 1e-12 * x0.norm());

  CHECK_THROWS_AS(comparison_final0(0.3, 4.0, 0.5), DomainError);
}

TEST_CASE("comparison_c2") {
  const auto c = comparison_c2(0.2, 4.0, 0.5);
  CHECK(c.pass);
  const double f = c.measured.at("contraction");
  CHECK(f < 1.0);

  // oracle: closed-form flow of the constant matrix
  const auto g = cone_geometry(0.2, 4.0, 0.5);
  const Mat M = di_A() + 0.5 * di_B() * di_base(0.2, 4.0);
  const Vec x0 = vec2(-1, -g.xi_s_plus).normalized();
  const double t = closed_form_crossing(M, x0, 0.0, 50.0 / 4.0);
  CHECK_THAT(c.measured.at("crossing_time"), WithinAbs(t, 1e-9));
  CHECK_THAT(f, WithinAbs((matkit::expm(M, t) * x0).norm(), 1e-9));

  // k -> 2k is conjugate through Diag(1, 2) with time halved
  const auto c8 = comparison_c2(0.2, 8.0, 0.5);
  CHECK_THAT(c8.measured.at("crossing_time"), WithinAbs(0.5 * t, 1e-9));
  CHECK_THAT(c8.measured.at("crossing_x1"), WithinAbs(c.measured.at("crossing_x1") *
                                                          vec2(-1, -cone_geometry(0.2, 8.0, 0.5).xi_s_plus).normalized()(0) / x0(0),
                                                      1e-9));

  CHECK(comparison_c2(0.2, 4.0, 1.0).measured.at("contraction") <= f);
}

TEST_CASE("chain_contraction") {
  const PeClass cls = PeClass::make(1.0, 0.5);
  const double rho = 0.2, k = 2.0, lambda = 2.0;
  const Mat K = di_gain(cls, rho, k, lambda).K;
  for (const auto& m : make_battery(cls, 8, 12)) {
    const auto a = run(di_A(), di_B(), K, m.signal, vec2(1, 0.3), 30.0);
    const auto b = run(di_A(), di_B(), K, m.signal, vec2(-1, -0.3), 30.0);
    const auto ca = chain_contraction(a, k * lambda), cb = chain_contraction(b, k * lambda);
    CHECK(ca.pass);
    CHECK(ca.measured == cb.measured);
  }
  // alpha = 1: the node has at most one axis crossing
  const auto node = run(di_A(), di_B(), K, PwcSignal::constant(1), vec2(1, 2), 20.0);
  const Mat M = di_A() + di_B() * K;
  int crossings = 0;
  double prev = 2.0;
  for (int i = 1; i <= 20000; ++i) {
    const double x2 = (matkit::expm(M, 20.0 * i / 20000.0) * vec2(1, 2))(1);
    if ((x2 > 0) != (prev > 0)) ++crossings;
    prev = x2;
  }
  CHECK(chain_contraction(node, k * lambda).measured.at("crossings") == crossings);
}

TEST_CASE("kl_envelope") {
  const PeClass cls = PeClass::make(1.0, 0.5);
  const auto bat = make_battery(cls, 12, 2);
  const auto runs = cross_runs(bat, {vec2(1, 0)});
  const auto batch = simulate_batch(rot(), bcol(), -bcol().transpose(), runs, 30.0, 0.02, 2);
  const auto c = kl_envelope(batch);
  CHECK(c.pass);
  CHECK(c.measured.at("gamma_hat") > 0.0);
  const auto again = kl_check(batch, c.measured.at("C_hat"), c.measured.at("gamma_hat"));
  CHECK(again.pass);

  // destabilized trajectory in the batch
  auto bad = batch;
  const PeClass small = PeClass::make(1.0, 0.07);
  auto d = run_destabilizer(row(-1, -1), small, vec2(-1, 0), 6).traj;
  d.label = "destabilizer";
  bad.push_back(d);
  const auto cb = kl_envelope(bad);
  CHECK_FALSE(cb.pass);
  bool named = false;
  for (const auto& n : cb.notes) named = named || n.find("destabilizer") != std::string::npos;
  CHECK(named);

  // Hurwitz loop: rate close to the slowest eigenvalue
  const Mat K = row(-1, -3);
  const Mat M = di_A() + di_B() * K;
  double slow = 1e300;
  for (const auto& e : matkit::eig(M)) slow = std::min(slow, -e.real());
  std::vector<RunSpec> hr;
  for (const auto& x0 : circle_grid(10)) hr.push_back({"one", PwcSignal::constant(1.0), x0});
  const auto hb = simulate_batch(di_A(), di_B(), K, hr, 200.0, 0.05, 2);
  CHECK(kl_envelope(hb).measured.at("gamma_hat") >= 0.9 * slow * (1 - 1e-3));

  CHECK_THROWS_AS(kl_envelope({batch.begin(), batch.begin() + 5}), InsufficientDataError);
}

TEST_CASE("rescaling identity and multi-input checks") {
  const PeClass cls = PeClass::make(1.0, 0.5);
  const Mat K = di_base(0.2, 2.0);
  for (const auto& m : make_battery(cls, 4, 1)) {
    for (double l : {0.5, 2.0, 8.0}) CHECK(rescaling_identity(K, m.signal, vec2(0.4, -1), l, 4.0).pass);
  }
  const Mat A = (Mat(2, 2) << 0.1, 1, -2, 0.3).finished();
  const Mat B = (Mat(2, 2) << 1, 0.5, 0, 1).finished();
  const auto runs = cross_runs(make_battery(cls, 10, 4), circle_grid(2));
  const auto c = multi_input_check(A, B, 1.5, runs, 5.0, 2);
  CHECK(c.pass);
  CHECK(c.measured.at("max_identity_error") <= 1e-9);
}

TEST_CASE("weak-star demo") {
  const Mat K = row(-1, -1);
  std::vector<int> idx{1, 2, 4, 8, 16, 32, 64};
  std::vector<WeakStarRow> rows;
  const auto c = weak_star_demo(di_A(), di_B(), K, vec2(1, 0), 0.5, idx, 10.0, &rows);
  REQUIRE(rows.size() == idx.size());
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].sup_distance < rows[i - 1].sup_distance);
  // duty 1: every square wave is the constant 1
  std::vector<WeakStarRow> ones;
  weak_star_demo(di_A(), di_B(), K, vec2(1, 0), 1.0, idx, 10.0, &ones);
  for (const auto& r : ones) CHECK(r.sup_distance <= 1e-12);
  (void)c;
}

TEST_CASE("certificates are reproducible") {
  const PeClass cls = PeClass::make(1.0, 0.5);
  const auto a = di_base_batch(0.2, 2.0, 2.0, make_battery(cls, 6, 7), f_angle_grid(3, 2.0), 5.0, 3);
  const auto b = di_base_batch(0.2, 2.0, 2.0, make_battery(cls, 6, 7), f_angle_grid(3, 2.0), 5.0, 1);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].times == b[i].times);
    CHECK(chain_contraction(a[i], 2.0).measured == chain_contraction(b[i], 2.0).measured);
  }
}
