#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>
#include <unsupported/Eigen/MatrixFunctions>

#include "rxnsens/oracles.hpp"

using namespace rxnsens;

namespace {

using AD = Eigen::AutoDiffScalar<Eigen::Vector2d>;

const auto kIso = parse_network("S1 -> S2 @ 0.3\nS2 -> S1 @ 0.2\n");
const auto kBirthDeath = parse_network("0 -> S @ 1\nS -> 0 @ 1\n");
const auto kDimer = parse_network("S1 -> 0 @ 1.0\n2*S1 -> S2 @ 0.002\nS2 -> 2*S1 @ 0.5\nS2 -> S3 @ 0.04\n");

BirthDeathParams<double> bd(double c1, double c2, double x0, double N, double t) { return {c1, c2, x0, N, t}; }

/// P(X1(t) = k) for isomerization from the generator of the X1 chain.
Eigen::VectorXd iso_pmf_expm(int x10, int x20, double c1, double c2, double t) {
  const int total = x10 + x20;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(total + 1, total + 1);
  for (int k = 0; k <= total; ++k) {
    if (k > 0) q(k, k - 1) = c1 * k;
    if (k < total) q(k, k + 1) = c2 * (total - k);
    q(k, k) = -q.row(k).sum();
  }
  const Eigen::MatrixXd p = (q * t).exp();
  return p.row(x10).transpose();
}

}  // namespace

TEST_CASE("birth-death mean and variance") {
  CHECK(bd_mean(bd(1, 1, 1, 10, 2)) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(bd_mean(bd(1.3, 0.7, 0.4, 25, 0)) == doctest::Approx(10.0));
  CHECK(bd_mean(bd(1.3, 0.7, 0.4, 25, 500)) == doctest::Approx(25 * 1.3 / 0.7));
  CHECK(bd_var_x(bd(1.3, 0.7, 0.4, 25, 0)) == 0.0);
  CHECK(bd_var_x(bd(0.0, 0.7, 0.4, 25, 500)) == doctest::Approx(0.0));
  // Poisson-binomial law of X(t): Bin(N x0, e^{-c2 t}) + Poisson(N c1 (1 - e^{-c2 t}) / c2).
  const double e = std::exp(-0.7 * 1.5);
  CHECK(bd_var_x(bd(1.3, 0.7, 0.4, 25, 1.5)) == doctest::Approx(10 * e * (1 - e) + 25 * 1.3 / 0.7 * (1 - e)));
}

TEST_CASE("birth-death sensitivities") {
  CHECK(bd_sens_c1(bd(1, 1, 1, 10, 0)) == 0.0);
  CHECK(bd_sens_c1(bd(1, 1, 1, 10, 100)) == doctest::Approx(10.0));
  CHECK(bd_sens_c1(bd(1, 1, 1, 10, 2)) == doctest::Approx(8.646647167633873).epsilon(1e-14));

  // Central differences of the mean.
  for (const auto p : {bd(1, 1, 1, 10, 2), bd(2.5, 0.4, 2, 3, 3), bd(0.3, 1.7, 0.2, 50, 0.8)}) {
    const double h = 1e-6;
    auto q = p, r = p;
    q.c2 += h;
    r.c2 -= h;
    CHECK(bd_sens_c2(p) == doctest::Approx((bd_mean(q) - bd_mean(r)) / (2 * h)).epsilon(1e-6));
    q = p;
    r = p;
    q.c1 += h;
    r.c1 -= h;
    CHECK(bd_sens_c1(p) == doctest::Approx((bd_mean(q) - bd_mean(r)) / (2 * h)).epsilon(1e-6));

    // Forward-mode derivatives of the same template.
    BirthDeathParams<AD> a{AD(p.c1, 2, 0), AD(p.c2, 2, 1), AD(p.x0), AD(p.N), AD(p.t)};
    const AD m = bd_mean(a);
    CHECK(m.derivatives()(0) == doctest::Approx(bd_sens_c1(p)).epsilon(1e-13));
    CHECK(m.derivatives()(1) == doctest::Approx(bd_sens_c2(p)).epsilon(1e-13));
  }
}

TEST_CASE("birth-death estimator variances match exact moment computations") {
  // Reference values from an independent moment-generating-function computation.
  CHECK(bd_var_gt_c1(bd(1, 1, 1, 10, 2)) == doctest::Approx(2452.6809699841156).epsilon(1e-12));
  CHECK(bd_var_cgt_c1(bd(1, 1, 1, 10, 2)) == doctest::Approx(279.74802663143794).epsilon(1e-12));
  CHECK(bd_var_gt_c1(bd(2.5, 0.4, 2, 3, 3)) == doctest::Approx(944.0797256140012).epsilon(1e-12));
  CHECK(bd_var_cgt_c1(bd(2.5, 0.4, 2, 3, 3)) == doctest::Approx(81.28063127884873).epsilon(1e-12));

  CHECK(pd_var_gt_c2(bd(0, 1, 1, 10, 1)) == doctest::Approx(121.38965697286748).epsilon(1e-12));
  CHECK(pd_var_cgt_c2(bd(0, 1, 1, 10, 1)) == doctest::Approx(25.88402843054595).epsilon(1e-12));
  CHECK(pd_var_gt_c2(bd(0, 1.3, 0.5, 6, 0.7)) == doctest::Approx(2.980132190050303).epsilon(1e-12));
  CHECK(pd_var_cgt_c2(bd(0, 1.3, 0.5, 6, 0.7)) == doctest::Approx(1.0355276991260316).epsilon(1e-12));
  CHECK(pd_var_gt_c2(bd(0, 0.5, 2, 4, 2)) == doctest::Approx(265.4534155499184).epsilon(1e-12));
  CHECK(pd_var_cgt_c2(bd(0, 0.5, 2, 4, 2)) == doctest::Approx(64.75969249437466).epsilon(1e-12));
}

TEST_CASE("estimator variances vanish at t = 0") {
  const auto p = bd(1.2, 0.8, 1.5, 20, 0.0);
  const double scale = 20.0 * 20.0 * 20.0;
  CHECK(std::abs(bd_var_gt_c1(p)) < 1e-12 * scale);
  CHECK(std::abs(bd_var_cgt_c1(p)) < 1e-12 * scale);
  CHECK(std::abs(pd_var_gt_c2(p)) < 1e-12 * scale);
  CHECK(std::abs(pd_var_cgt_c2(p)) < 1e-12 * scale);
  auto q = p;
  q.t = 1e-12;
  CHECK(std::abs(bd_var_gt_c1(q)) < 1e-6);
  CHECK(std::abs(pd_var_gt_c2(q)) < 1e-6);
}

TEST_CASE("estimator variances grow as N^3 (GT) and N^2 (CGT)") {
  auto ratio = [](auto fn, double power) {
    const double a = fn(bd(1, 1, 1, 1e5, 2)) / std::pow(1e5, power);
    const double b = fn(bd(1, 1, 1, 1e6, 2)) / std::pow(1e6, power);
    return std::pair{a, b};
  };
  const auto check = [](std::pair<double, double> r) {
    CHECK(r.second > 0.0);
    CHECK(std::abs(r.first / r.second - 1.0) < 1e-3);
  };
  check(ratio([](auto p) { return bd_var_gt_c1(p); }, 3));
  check(ratio([](auto p) { return bd_var_cgt_c1(p); }, 2));
  check(ratio([](auto p) { p.c1 = 0; return pd_var_gt_c2(p); }, 3));
  check(ratio([](auto p) { p.c1 = 0; return pd_var_cgt_c2(p); }, 2));
}

TEST_CASE("isomerization mean and sensitivities") {
  const auto m0 = iso_mean<double>(7, 3, 0.3, 0.2, 0.0);
  CHECK(m0(0) == 7.0);
  CHECK(m0(1) == 3.0);
  const auto inf = iso_mean<double>(7, 3, 0.3, 0.2, 200.0);
  CHECK(inf(0) == doctest::Approx(10 * 0.2 / 0.5));
  CHECK(inf(1) == doctest::Approx(10 * 0.3 / 0.5));
  for (double t : {0.1, 1.0, 10.0}) CHECK(iso_mean<double>(7, 3, 0.3, 0.2, t).sum() == doctest::Approx(10.0));

  CHECK(iso_sens_c1<double>(10, 10, 0.3, 0.2, 0.0) == 0.0);
  CHECK(iso_sens_c2<double>(10, 10, 0.3, 0.2, 0.0) == 0.0);
  const double h = 1e-6;
  for (double t : {0.5, 3.0, 10.0}) {
    const double d1 = (iso_mean<double>(10, 10, 0.3 + h, 0.2, t)(0) - iso_mean<double>(10, 10, 0.3 - h, 0.2, t)(0)) / (2 * h);
    const double d2 = (iso_mean<double>(10, 10, 0.3, 0.2 + h, t)(0) - iso_mean<double>(10, 10, 0.3, 0.2 - h, t)(0)) / (2 * h);
    CHECK(iso_sens_c1<double>(10, 10, 0.3, 0.2, t) == doctest::Approx(d1).epsilon(1e-6));
    CHECK(iso_sens_c2<double>(10, 10, 0.3, 0.2, t) == doctest::Approx(d2).epsilon(1e-6));
  }
  const double one = iso_sens_c1<double>(1, 1, 0.3, 0.2, 10.0);
  for (double N : {10.0, 100.0, 500.0}) CHECK(iso_sens_c1<double>(N, N, 0.3, 0.2, 10.0) == doctest::Approx(N * one).epsilon(1e-13));
}

TEST_CASE("exact isomerization law") {
  const int x10 = 4, x20 = 3;
  const double c1 = 0.3, c2 = 0.2, t = 1.7;
  const auto law = iso_law(x10, x20, c1, c2, t, 0);
  const auto expm = iso_pmf_expm(x10, x20, c1, c2, t);
  REQUIRE(law.pmf.size() == 8);
  double total = 0, dtotal = 0;
  for (int k = 0; k <= 7; ++k) {
    CHECK(law.pmf[k] == doctest::Approx(expm(k)).epsilon(1e-10));
    total += law.pmf[k];
    dtotal += law.dpmf[k];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(dtotal) < 1e-13);

  const double h = 1e-6;
  for (int param : {0, 1}) {
    const auto l = iso_law(x10, x20, c1, c2, t, param);
    const auto up = param == 0 ? iso_pmf_expm(x10, x20, c1 + h, c2, t) : iso_pmf_expm(x10, x20, c1, c2 + h, t);
    const auto dn = param == 0 ? iso_pmf_expm(x10, x20, c1 - h, c2, t) : iso_pmf_expm(x10, x20, c1, c2 - h, t);
    for (int k = 0; k <= 7; ++k) CHECK(l.dpmf[k] == doctest::Approx((up(k) - dn(k)) / (2 * h)).epsilon(1e-6));
  }

  const auto x1 = [](std::int64_t a, std::int64_t) { return static_cast<double>(a); };
  CHECK(iso_expectation(x1, x10, x20, c1, c2, t) == doctest::Approx(iso_mean<double>(x10, x20, c1, c2, t)(0)));
  CHECK(iso_sensitivity(x1, x10, x20, c1, c2, t, 0) == doctest::Approx(iso_sens_c1<double>(x10, x20, c1, c2, t)));
  CHECK(iso_sensitivity(x1, x10, x20, c1, c2, t, 1) == doctest::Approx(iso_sens_c2<double>(x10, x20, c1, c2, t)));
}

TEST_CASE("fluid limit of linear networks") {
  const auto sol = fluid_solve(kIso, Eigen::Vector2d(1, 1), kIso.rates(), 10.0, 0.01);
  REQUIRE(sol.grid.back() == 10.0);
  for (std::size_t k = 0; k < sol.grid.size(); k += 100) {
    const double t = sol.grid[k];
    CHECK((sol.states[k] - iso_mean<double>(1, 1, 0.3, 0.2, t)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(sol.sensitivities[k](0, 0) == doctest::Approx(iso_sens_c1<double>(1, 1, 0.3, 0.2, t)).epsilon(1e-8));
    CHECK(sol.sensitivities[k](0, 1) == doctest::Approx(iso_sens_c2<double>(1, 1, 0.3, 0.2, t)).epsilon(1e-8));
  }

  const auto b = fluid_solve(kBirthDeath, Eigen::VectorXd::Constant(1, 1.0), kBirthDeath.rates(), 2.0, 0.01);
  CHECK(b.states.back()(0) == doctest::Approx(bd_mean(bd(1, 1, 1, 1, 2))).epsilon(1e-10));
  CHECK(b.sensitivities.back()(0, 0) == doctest::Approx(bd_sens_c1(bd(1, 1, 1, 1, 2))).epsilon(1e-10));
  CHECK(b.sensitivities.back()(0, 1) == doctest::Approx(bd_sens_c2(bd(1, 1, 1, 1, 2))).epsilon(1e-10));

  const auto zero = parse_network("A -> B @ 0\n", ParseOptions{true});
  const auto z = fluid_solve(zero, Eigen::Vector2d(0.4, 0.6), zero.rates(), 3.0, 0.1);
  CHECK(z.states.back() == Eigen::Vector2d(0.4, 0.6));
}

TEST_CASE("fluid limit of the nonlinear network") {
  const Eigen::Vector3d x0(10, 0, 0);
  const auto coarse = fluid_solve(kDimer, x0, kDimer.rates(), 5.0, 0.01);
  const auto fine = fluid_solve(kDimer, x0, kDimer.rates(), 5.0, 0.005);
  const Eigen::VectorXd a = coarse.states.back(), b = fine.states.back();
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8 * b.cwiseAbs().maxCoeff());
  for (const auto& s : coarse.states) CHECK((s.array() >= 0).all());

  // Forward sensitivities against central differences of the solution.
  const double h = 1e-6;
  for (Index j = 0; j < 4; ++j) {
    RateVector up = kDimer.rates(), dn = kDimer.rates();
    up(j) += h;
    dn(j) -= h;
    const Eigen::VectorXd d = (fluid_solve(kDimer, x0, up, 5.0, 0.01).states.back() -
                               fluid_solve(kDimer, x0, dn, 5.0, 0.01).states.back()) / (2 * h);
    for (Index i = 0; i < 3; ++i)
      CHECK(coarse.sensitivities.back()(i, j) == doctest::Approx(d(i)).epsilon(1e-5).scale(1e-3));
  }
}

TEST_CASE("fluid field and Jacobian") {
  const Eigen::Vector3d x(1.3, 0.4, 0.2);
  const auto f = fluid_field(kDimer, kDimer.rates(), x);
  CHECK(f(0) == doctest::Approx(-1.3 - 2 * 0.002 * 1.3 * 1.3 / 2 + 2 * 0.5 * 0.4));
  CHECK(f(2) == doctest::Approx(0.04 * 0.4));
  const auto jac = fluid_jacobian(kDimer, kDimer.rates(), x);
  const double h = 1e-7;
  for (Index i = 0; i < 3; ++i) {
    Eigen::Vector3d xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const Eigen::Vector3d col = (fluid_field(kDimer, kDimer.rates(), xp) - fluid_field(kDimer, kDimer.rates(), xm)) / (2 * h);
    for (Index k = 0; k < 3; ++k) CHECK(jac(k, i) == doctest::Approx(col(k)).epsilon(1e-6).scale(1e-6));
  }
}

TEST_CASE("model recognition and exact sensitivities") {
  CHECK(identify_model(kIso).kind == KnownModel::reversible_isomerization);
  CHECK(identify_model(kBirthDeath).kind == KnownModel::birth_death);
  CHECK(identify_model(kDimer).kind == KnownModel::none);
  const auto flipped = parse_network("species: A B\nB -> A @ 0.2\nA -> B @ 0.3\n");
  const auto m = identify_model(flipped);
  REQUIRE(m.kind == KnownModel::reversible_isomerization);
  CHECK(m.first_channel == 0);
  CHECK(m.species_a == 1);
  CHECK(m.species_b == 0);

  const SystemInstance iso(kIso, 10, Eigen::Vector2d(1, 1));
  const auto s1 = parse_output("component(S1)", kIso);
  const auto s2 = parse_output("component(S2)", kIso);
  const auto sq = parse_output("square(S1)", kIso);
  const auto sn = parse_output("sin_scaled(S1)", kIso);
  CHECK(*exact_sensitivity(iso, s1, 0, 10.0) == doctest::Approx(iso_sens_c1<double>(10, 10, 0.3, 0.2, 10.0)));
  CHECK(*exact_sensitivity(iso, s2, 0, 10.0) == doctest::Approx(-iso_sens_c1<double>(10, 10, 0.3, 0.2, 10.0)));
  CHECK(*exact_sensitivity(iso, s1, 1, 10.0) == doctest::Approx(iso_sens_c2<double>(10, 10, 0.3, 0.2, 10.0)));
  const auto g2 = [](std::int64_t a, std::int64_t) { return static_cast<double>(a * a); };
  CHECK(*exact_sensitivity(iso, sq, 0, 10.0) == doctest::Approx(iso_sensitivity(g2, 10, 10, 0.3, 0.2, 10.0, 0)));
  // square(S1): d E X1^2 = d Var X1 + 2 E X1 d E X1; check against central differences of the law.
  const double h = 1e-6;
  const double up = iso_expectation(g2, 10, 10, 0.3 + h, 0.2, 10.0), dn = iso_expectation(g2, 10, 10, 0.3 - h, 0.2, 10.0);
  CHECK(*exact_sensitivity(iso, sq, 0, 10.0) == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
  const auto gs = [](std::int64_t a, std::int64_t) { return std::sin(static_cast<double>(a) / 10.0); };
  CHECK(*exact_sensitivity(iso, sn, 0, 10.0) == doctest::Approx(iso_sensitivity(gs, 10, 10, 0.3, 0.2, 10.0, 0)));

  const SystemInstance b(kBirthDeath, 10, Eigen::VectorXd::Constant(1, 1.0));
  const auto bs = parse_output("component(S)", kBirthDeath);
  CHECK(*exact_sensitivity(b, bs, 0, 2.0) == doctest::Approx(bd_sens_c1(bd(1, 1, 1, 10, 2))));
  CHECK(*exact_sensitivity(b, bs, 1, 2.0) == doctest::Approx(bd_sens_c2(bd(1, 1, 1, 10, 2))));
  CHECK_FALSE(exact_sensitivity(b, parse_output("square(S)", kBirthDeath), 0, 2.0).has_value());

  const SystemInstance d(kDimer, 10, Eigen::Vector3d(10, 0, 0));
  CHECK_FALSE(exact_sensitivity(d, parse_output("component(S1)", kDimer), 0, 5.0).has_value());
}

TEST_CASE("sup deviation from the fluid trajectory") {
  const auto net = parse_network("S -> 0 @ 1\n");
  Trajectory p;
  p.initial_state = State::Constant(1, 2);
  p.events = {{0.5, 0}, {1.5, 0}};
  p.t_final = 2.0;
  // N = 2: X/N is 1, 0.5, 0 on the three pieces; fluid x(t) = e^{-t}.
  const auto fluid = [](double t) { return Eigen::VectorXd::Constant(1, std::exp(-t)); };
  const double expected = std::max({1.0 - std::exp(-0.5), std::exp(-0.5) - 0.5, std::abs(0.5 - std::exp(-1.5)),
                                    std::exp(-1.5), std::exp(-2.0)});
  CHECK(fluid_sup_deviation(p, net, 2, fluid) == doctest::Approx(expected));
}
