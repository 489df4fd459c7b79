#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hbf/oracles.hpp"
#include "hbf/precoding.hpp"

using namespace hbf;

namespace {

ChannelMatrix random_channel(int k, int n_tx, Rng& rng) {
  CMatrix h(k, n_tx);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < n_tx; ++c) h(r, c) = rng.cnormal(1.0);
  return ChannelMatrix{std::move(h)};
}

AnalogPrecoder random_analog(int n_tx, int n_rf, Rng& rng) {
  RMatrix phases(n_tx, n_rf);
  for (int r = 0; r < n_tx; ++r)
    for (int c = 0; c < n_rf; ++c) phases(r, c) = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return AnalogPrecoder(std::move(phases));
}

}  // namespace

TEST_CASE("phase wrap convention") {
  CHECK(wrap_phase(std::numbers::pi + 0.1) == doctest::Approx(-std::numbers::pi + 0.1));
  CHECK(wrap_phase(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_phase(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_phase(0.25) == doctest::Approx(0.25));
}

TEST_CASE("analog precoder has exactly unit modulus entries") {
  Rng rng(1);
  AnalogPrecoder f = random_analog(8, 3, rng);
  CMatrix m = f.matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) CHECK(std::abs(m(r, c)) == doctest::Approx(1.0));
  // phase-vector round trip (column-major)
  AnalogPrecoder back = AnalogPrecoder::from_phase_vector(f.phase_vector(), 8, 3);
  CHECK((back.phases() - f.phases()).norm() == doctest::Approx(0.0));
}

TEST_CASE("zf_digital nulls interference") {
  Rng rng(2);
  ChannelMatrix h = random_channel(4, 16, rng);
  AnalogPrecoder f = random_analog(16, 4, rng);
  CMatrix f_tilde = zf_digital(h, f);
  CMatrix eff = h.h * f.matrix() * f_tilde;
  CHECK((eff - CMatrix::Identity(4, 4)).norm() < 1e-8);
}

TEST_CASE("zf_digital single-user closed form") {
  Rng rng(3);
  ChannelMatrix h = random_channel(1, 8, rng);
  AnalogPrecoder f = random_analog(8, 2, rng);
  CMatrix f_tilde = zf_digital(h, f);
  // f_tilde proportional to (F_RF)^H h1, scaled so h1^H F_RF f_tilde = 1
  CVector expected = f.matrix().adjoint() * h.user_channel(0);
  Complex gain = (h.h * f.matrix() * expected)(0, 0);
  expected /= gain;
  CHECK((f_tilde.col(0) - expected).norm() < 1e-10);
}

TEST_CASE("zf_digital homogeneity: scaling H halves the precoder") {
  Rng rng(4);
  ChannelMatrix h = random_channel(3, 12, rng);
  AnalogPrecoder f = random_analog(12, 3, rng);
  CMatrix f1 = zf_digital(h, f);
  ChannelMatrix h2{2.0 * h.h};
  CMatrix f2 = zf_digital(h2, f);
  CHECK((f2 - 0.5 * f1).norm() < 1e-9);
}

TEST_CASE("zf_digital rejects rank-deficient effective channels") {
  Rng rng(5);
  ChannelMatrix h = random_channel(2, 8, rng);
  // all-equal phases make every analog column identical: rank 1 < K
  AnalogPrecoder f(RMatrix::Zero(8, 2));
  CHECK_THROWS_AS(zf_digital(h, f), DegenerateGeometryError);
}

TEST_CASE("water filling hand-solved examples") {
  // single user takes the whole budget
  RVector y1(1), s1(1);
  y1 << 2.0;
  s1 << 1.0;
  PowerAllocation a = water_filling(y1, s1, 4.0);
  CHECK(a.powers(0) == doctest::Approx(2.0));
  CHECK(a.effective_gains(0) * a.powers(0) == doctest::Approx(4.0));
  CHECK(zf_sum_rate(a) == doctest::Approx(std::log2(3.0)));

  // symmetric two-user case
  RVector y2(2), s2(2);
  y2 << 1.0, 1.0;
  s2 << 1.0, 1.0;
  PowerAllocation b = water_filling(y2, s2, 2.0);
  CHECK(b.powers(0) == doctest::Approx(1.0));
  CHECK(b.powers(1) == doctest::Approx(1.0));

  // user 2 sits below the water level: mu = 2, mu/4 - 1 < 0
  RVector y3(2), s3(2);
  y3 << 1.0, 4.0;
  s3 << 1.0, 1.0;
  PowerAllocation c = water_filling(y3, s3, 1.0);
  CHECK(c.mu == doctest::Approx(2.0));
  CHECK(c.powers(0) == doctest::Approx(1.0));
  CHECK(c.powers(1) == doctest::Approx(0.0));
}

TEST_CASE("water filling matches bisection oracle and beats random points") {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    int k = 2 + static_cast<int>(rng.uniform() * 6);
    RVector gains(k), noise(k);
    for (int j = 0; j < k; ++j) {
      gains(j) = 0.1 + rng.uniform() * 5.0;
      noise(j) = 0.2 + rng.uniform() * 2.0;
    }
    double p_total = 0.5 + rng.uniform() * 20.0;
    PowerAllocation pa = water_filling(gains, noise, p_total);

    // KKT form and exact budget
    double spent = 0.0;
    for (int j = 0; j < k; ++j) {
      CHECK(pa.powers(j) == doctest::Approx(std::max(pa.mu / gains(j) - noise(j), 0.0)));
      spent += gains(j) * pa.powers(j);
    }
    CHECK(spent == doctest::Approx(p_total).epsilon(1e-9));

    RVector pb = oracles::waterfill_bisection(gains, noise, p_total);
    CHECK((pa.powers - pb).cwiseAbs().maxCoeff() < 1e-9);

    double rate = zf_sum_rate(pa);
    for (int t = 0; t < 200; ++t) {
      RVector pr = oracles::random_feasible_allocation(gains, p_total, rng);
      double r = 0.0;
      for (int j = 0; j < k; ++j) r += std::log2(1.0 + pr(j) / noise(j));
      CHECK(r <= rate + 1e-9);
    }
  }
}

TEST_CASE("water filling monotone in the budget") {
  Rng rng(7);
  RVector gains(4), noise(4);
  for (int j = 0; j < 4; ++j) {
    gains(j) = 0.2 + rng.uniform() * 3.0;
    noise(j) = 0.3 + rng.uniform();
  }
  double prev = 0.0;
  for (double p_total : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    double rate = zf_sum_rate(water_filling(gains, noise, p_total));
    CHECK(rate >= prev - 1e-12);
    prev = rate;
  }
}

TEST_CASE("assemble digital scales columns by sqrt power") {
  Rng rng(8);
  CMatrix f_tilde(3, 2);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 2; ++c) f_tilde(r, c) = rng.cnormal(1.0);

  PowerAllocation pa;
  pa.powers = RVector(2);
  pa.powers << 4.0, 9.0;
  pa.effective_gains = RVector::Ones(2);
  pa.noise_powers = RVector::Ones(2);
  CMatrix f_d = assemble_digital(f_tilde, pa);
  CHECK((f_d.col(0) - 2.0 * f_tilde.col(0)).norm() == doctest::Approx(0.0));
  CHECK((f_d.col(1) - 3.0 * f_tilde.col(1)).norm() == doctest::Approx(0.0));

  pa.powers << 1.0, 1.0;
  CHECK((assemble_digital(f_tilde, pa) - f_tilde).norm() == doctest::Approx(0.0));
  pa.powers << 0.0, 0.0;
  CHECK(assemble_digital(f_tilde, pa).norm() == doctest::Approx(0.0));
}

TEST_CASE("effective gains identities and oracle") {
  Rng rng(9);
  // phase ramp makes the two analog columns orthogonal (alternating signs);
  // scaling the digital identity by 1/sqrt(N_t) normalizes them, and the
  // Gram diagonal of an orthonormal set is all ones
  RMatrix ramp(4, 2);
  for (int r = 0; r < 4; ++r) {
    ramp(r, 0) = 0.0;
    ramp(r, 1) = std::numbers::pi * r;
  }
  AnalogPrecoder f(ramp);
  CMatrix q = f.matrix() / 2.0;
  CHECK(std::abs((q.adjoint() * q - CMatrix::Identity(2, 2)).norm()) < 1e-12);
  RVector y = effective_gains(CMatrix::Identity(2, 2) / 2.0, f);
  CHECK(y(0) == doctest::Approx(1.0));
  CHECK(y(1) == doctest::Approx(1.0));

  // single column: y = ||F_RF f||^2
  CMatrix f_tilde(2, 1);
  f_tilde(0, 0) = rng.cnormal(1.0);
  f_tilde(1, 0) = rng.cnormal(1.0);
  RVector y1 = effective_gains(f_tilde, f);
  CHECK(y1(0) == doctest::Approx((f.matrix() * f_tilde).squaredNorm()));

  // random instance vs direct matmul-diagonal oracle
  CMatrix ft(2, 3);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) ft(r, c) = rng.cnormal(1.0);
  RVector y2 = effective_gains(ft, f);
  CMatrix yfull = ft.adjoint() * f.matrix().adjoint() * f.matrix() * ft;
  for (int c = 0; c < 3; ++c) CHECK(std::abs(y2(c) - yfull(c, c).real()) < 1e-12);
}

TEST_CASE("zf sum rate basics") {
  PowerAllocation pa;
  pa.powers = RVector(2);
  pa.powers << 1.0, 1.0;
  pa.noise_powers = RVector::Ones(2);
  pa.effective_gains = RVector::Ones(2);
  CHECK(zf_sum_rate(pa) == doctest::Approx(2.0));

  pa.powers << 0.0, 0.0;
  CHECK(zf_sum_rate(pa) == doctest::Approx(0.0));

  PowerAllocation single;
  single.powers = RVector(1);
  single.powers << 3.0;
  single.noise_powers = RVector::Ones(1);
  single.effective_gains = RVector::Ones(1);
  CHECK(zf_sum_rate(single) == doctest::Approx(2.0));
  // p-squared variant: log2(1 + 9)
  CHECK(zf_sum_rate(single, true) == doctest::Approx(std::log2(10.0)));
}

TEST_CASE("general sum rate agrees with zf rate on the assembled solution") {
  Rng rng(10);
  for (int i = 0; i < 20; ++i) {
    ChannelMatrix h = random_channel(4, 16, rng);
    AnalogPrecoder f = random_analog(16, 4, rng);
    CMatrix f_tilde = zf_digital(h, f);
    RVector gains = effective_gains(f_tilde, f);
    RVector noise = RVector::Ones(4);
    PowerAllocation pa = water_filling(gains, noise, 3.162);
    CMatrix f_d = assemble_digital(f_tilde, pa);
    CHECK(std::abs(general_sum_rate(h, f, f_d, noise) - zf_sum_rate(pa)) < 1e-8);
  }
}

TEST_CASE("general sum rate of zero precoder is zero and matches scalar oracle") {
  Rng rng(11);
  ChannelMatrix h = random_channel(3, 8, rng);
  AnalogPrecoder f = random_analog(8, 3, rng);
  RVector noise = RVector::Ones(3);
  CHECK(general_sum_rate(h, f, CMatrix::Zero(3, 3), noise) == doctest::Approx(0.0));

  // random non-ZF digital precoder vs the scalar-loop oracle
  for (int i = 0; i < 20; ++i) {
    CMatrix f_d(3, 3);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) f_d(r, c) = rng.cnormal(1.0);
    double lib = general_sum_rate(h, f, f_d, noise);
    double oracle = oracles::sinr_sum_rate_loop(h.h, f.matrix(), f_d, noise);
    CHECK(std::abs(lib - oracle) < 1e-10);
  }
}

TEST_CASE("full digital zf closed form for one user") {
  Rng rng(12);
  ChannelMatrix h = random_channel(1, 8, rng);
  double g = h.h.squaredNorm();
  RVector noise = RVector::Ones(1);
  double p_total = 2.5;
  CHECK(full_digital_zf_rate(h, noise, p_total) ==
        doctest::Approx(std::log2(1.0 + g * p_total)).epsilon(1e-10));
}

TEST_CASE("full digital zf decouples for orthogonal user channels") {
  // rows scaled orthogonal: per-user water-filling over gains 1/||h_k||^2
  CMatrix h = CMatrix::Zero(2, 4);
  h(0, 0) = 2.0;
  h(1, 1) = 1.0;
  ChannelMatrix ch{h};
  RVector noise = RVector::Ones(2);
  double p_total = 3.0;
  double lib = full_digital_zf_rate(ch, noise, p_total);
  RVector gains(2);
  gains << 0.25, 1.0;  // ((HH^H)^{-1})_kk
  double expect = zf_sum_rate(water_filling(gains, noise, p_total));
  CHECK(lib == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("full digital zf upper-bounds the hybrid solution") {
  Rng rng(13);
  RVector noise = RVector::Ones(4);
  for (int i = 0; i < 100; ++i) {
    ChannelMatrix h = random_channel(4, 16, rng);
    double p_total = 0.5 + rng.uniform() * 10.0;
    HybridSolution sol = random_phase_baseline(h, 4, noise, p_total, rng);
    double full = full_digital_zf_rate(h, noise, p_total);
    CHECK(full >= sol.sum_rate - 1e-9);
  }
}

TEST_CASE("random phase baseline determinism and positivity") {
  Rng a(99), b(99);
  Rng chan(1);
  ChannelMatrix h = random_channel(4, 16, chan);
  RVector noise = RVector::Ones(4);
  double p_total = std::pow(10.0, 0.5);  // 5 dB
  HybridSolution s1 = random_phase_baseline(h, 4, noise, p_total, a);
  HybridSolution s2 = random_phase_baseline(h, 4, noise, p_total, b);
  CHECK(s1.sum_rate == s2.sum_rate);

  double mean = 0.0;
  Rng rng(7);
  for (int i = 0; i < 100; ++i) mean += random_phase_baseline(h, 4, noise, p_total, rng).sum_rate;
  CHECK(mean / 100.0 > 0.0);
}

TEST_CASE("hybrid solution respects the power constraint") {
  Rng rng(14);
  ChannelMatrix h = random_channel(4, 16, rng);
  RVector noise = RVector::Ones(4);
  HybridSolution sol = random_phase_baseline(h, 4, noise, 3.0, rng);
  CMatrix frf = sol.analog.matrix();
  double trace = (frf.adjoint() * frf * sol.digital * sol.digital.adjoint()).trace().real();
  CHECK(trace <= 3.0 + 1e-6);
  // solution serializes
  nlohmann::json j = solution_to_json(sol);
  CHECK(j.contains("phases"));
  CHECK(j.at("sum_rate").get<double>() == doctest::Approx(sol.sum_rate));
}

TEST_CASE("zf residual bound across 500 desk-scale instances") {
  Rng rng(15);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    ChannelMatrix h = random_channel(4, 16, rng);
    AnalogPrecoder f = random_analog(16, 4, rng);
    CMatrix f_tilde = zf_digital(h, f);
    worst = std::max(worst, (h.h * f.matrix() * f_tilde - CMatrix::Identity(4, 4)).norm());
  }
  CHECK(worst < 1e-8);
}
