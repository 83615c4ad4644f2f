#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pestab/error.hpp"
#include "pestab/gains.hpp"
#include "pestab/reachability.hpp"

using namespace pestab;
using Catch::Matchers::WithinAbs;

namespace {

// Composite Simpson rule on the Gramian integrand, split at the signal's switches.
Mat simpson_gramian(const Mat& A, const Mat& B, const PwcSignal& a, double t, int per_piece = 400) {
  std::vector<double> cuts{0.0};
  for (double s : a.switch_times(0.0, t)) cuts.push_back(s);
  cuts.push_back(t);
  Mat W = Mat::Zero(A.rows(), A.rows());
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double lo = cuts[p], hi = cuts[p + 1], h = (hi - lo) / per_piece;
    const double v = a(0.5 * (lo + hi));
    for (int i = 0; i <= per_piece; ++i) {
      const double s = lo + i * h;
      const double w = (i == 0 || i == per_piece) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      const Mat e = matkit::expm(A, t - s) * B;
      W += w * h / 3.0 * v * v * e * e.transpose();
    }
  }
  return W;
}

bool psd(const Mat& m, double tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().minCoeff() >= -tol;
}

}  // namespace

TEST_CASE("double integrator Gramian, alpha = 1") {
  const auto r = gramian(di_A(), di_B(), PwcSignal::constant(1.0), 1.0);
  Mat ref(2, 2);
  ref << 1.0 / 3, 0.5, 0.5, 1.0;
  CHECK((r.W - ref).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK_THAT(r.W.determinant(), WithinAbs(1.0 / 12, 1e-14));
  CHECK(r.controllable);
  CHECK_FALSE(r.witness);
  for (double t : {0.01, 0.5, 3.0, 20.0}) CHECK(gramian(di_A(), di_B(), PwcSignal::constant(1.0), t).controllable);
}

TEST_CASE("alpha = 0 gives a zero Gramian with a witness") {
  const auto r = gramian(di_A(), di_B(), PwcSignal::constant(0.0), 2.0);
  CHECK(r.W.norm() == 0.0);
  CHECK_FALSE(r.controllable);
  REQUIRE(r.witness);
  CHECK_THAT(r.witness->norm(), WithinAbs(1.0, 1e-15));
  CHECK_THROWS_AS(gramian(di_A(), di_B(), PwcSignal::constant(1.0), 0.0), DomainError);
}

TEST_CASE("zero prefix: singular at 0.4, nonsingular at 0.6") {
  const PwcSignal a({0.0, 0.4}, {0.0}, Hold{1.0});
  const auto r4 = gramian(di_A(), di_B(), a, 0.4);
  const auto r6 = gramian(di_A(), di_B(), a, 0.6);
  CHECK_FALSE(r4.controllable);
  CHECK(r6.controllable);
  CHECK((r6.W - simpson_gramian(di_A(), di_B(), a, 0.6)).norm() <= 1e-10);
}

TEST_CASE("Gramian agrees with quadrature on random systems and signals") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  const PeClass cls = PeClass::make(1.0, 0.4);
  const auto bat = make_battery(cls, 8, 5);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 2 + trial % 3;
    Mat A(n, n), B(n, 1 + trial % 2);
    for (int i = 0; i < A.size(); ++i) A.data()[i] = 0.5 * g(rng);
    for (int i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
    const double t = 0.7 + 0.3 * trial;
    const auto r = gramian(A, B, bat[static_cast<std::size_t>(trial)].signal, t);
    const Mat ref = simpson_gramian(A, B, bat[static_cast<std::size_t>(trial)].signal, t);
    CHECK((r.W - ref).norm() <= 1e-9 * std::max(1.0, ref.norm()));
    CHECK((r.W - r.W.transpose()).norm() <= 1e-12 * std::max(1.0, r.W.norm()));
    CHECK(psd(r.W, 1e-10));
  }
}

TEST_CASE("Gramian is monotone in the signal and composes over time") {
  const PeClass cls = PeClass::make(1.0, 0.5);
  Mat A(2, 2);
  A << 0, 1, -1, -0.2;
  for (const auto& b : make_battery(cls, 8, 31)) {
    const double t = 2.3;
    const auto big = gramian(A, di_B(), PwcSignal::constant(1.0), t);
    const auto small = gramian(A, di_B(), b.signal, t);
    CHECK(psd(big.W - small.W, 1e-10));

    const double h = 0.8;
    const auto head = gramian(A, di_B(), b.signal, t - h);
    const Mat E = matkit::expm(A, h);
    const Mat tail = simpson_gramian(A, di_B(), shift(b.signal, t - h), h, 2000);
    CHECK((E * head.W * E.transpose() + tail - small.W).norm() <= 1e-9);
  }
}

TEST_CASE("gramian_piece") {
  const Mat p = gramian_piece(di_A(), di_B(), 1.0);
  CHECK_THAT(p(0, 0), WithinAbs(1.0 / 3, 1e-14));
  CHECK_THAT(p(0, 1), WithinAbs(0.5, 1e-14));
  CHECK_THAT(p(1, 1), WithinAbs(1.0, 1e-14));
}

TEST_CASE("kalman_rank") {
  CHECK(kalman_rank(di_A(), di_B()) == 2);
  CHECK(kalman_rank(di_A(), Mat::Zero(2, 1)) == 0);
  CHECK(kalman_rank(Mat::Identity(2, 2), Mat::Ones(2, 1)) == 1);
}

TEST_CASE("threshold dichotomy for the double integrator") {
  const PeClass cls = PeClass::make(1.0, 0.5);
  const auto bat = make_battery(cls, 50, 1);
  const auto r4 = threshold_check(di_A(), di_B(), cls, 0.4, bat);
  CHECK(r4.adversarial);
  CHECK(r4.claim);
  REQUIRE(r4.witness);

  // witness annihilates alpha(s) p^T e^{A(t-s)} B on a fine grid
  const PwcSignal adv = make_zero_prefix(cls, 0.4);
  double worst = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double s = 0.4 * i / 4000.0;
    worst = std::max(worst, std::abs(adv(s) * (r4.witness->transpose() * matkit::expm(di_A(), 0.4 - s) * di_B())(0, 0)));
  }
  CHECK(worst <= 1e-8);

  const auto boundary = threshold_check(di_A(), di_B(), cls, 0.5, bat);
  CHECK(boundary.adversarial);
  CHECK(boundary.min_sv <= 1e-12 * boundary.scale);

  const auto r6 = threshold_check(di_A(), di_B(), cls, 0.6, bat);
  CHECK_FALSE(r6.adversarial);
  CHECK(r6.claim);
  CHECK(r6.signals_checked == 50);
  CHECK(r6.min_sv > 1e-6 * r6.scale);

  CHECK_THROWS_AS(threshold_check(Mat::Identity(2, 2), Mat::Ones(2, 1), cls, 0.6, bat), PreconditionError);
}
