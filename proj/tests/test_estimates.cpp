#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hsgs/error.hpp"
#include "hsgs/estimates.hpp"

using namespace hsgs;

namespace {

BasisPtr basis() {
  static BasisPtr b = build_basis(CylinderDomain{1.0, 0.8, 1.1, 12, 10, 8}, 14, 4);
  return b;
}

std::vector<GridComponent> constant_center(const TensorBasis& b, double c) {
  return {{Stagger::Center, Mat::Constant(b.n_center(), b.zq.size(), c)}};
}

}  // namespace

TEST_CASE("norm spec validation") {
  CHECK_THROWS_AS((NormSpec{0.5, 2, 0, 0}.validate()), RangeError);
  CHECK_THROWS_AS((NormSpec{2, 2, 3, 0}.validate()), RangeError);
  CHECK_NOTHROW((NormSpec{kInf, kInf, 2, 2}.validate()));
}

TEST_CASE("constant field norms") {
  auto b = basis();
  NormEngine ne(b);
  const double c = 1.7, area = 0.8, h = 1.1;
  for (double p : {1.0, 2.0, 4.0, kInf})
    for (double q : {1.0, 3.0, 6.0, kInf}) {
      const double expect = c * (std::isinf(p) ? 1.0 : std::pow(h, 1 / p)) * (std::isinf(q) ? 1.0 : std::pow(area, 1 / q));
      CHECK(ne.mixed(constant_center(*b, c), p, q) == doctest::Approx(expect).epsilon(1e-12));
    }
  CHECK(ne.mixed(constant_center(*b, 0.0), 2, 2) == 0.0);
}

TEST_CASE("L2 norms agree with coefficient norms") {
  auto b = basis();
  NormEngine ne(b);
  std::mt19937_64 rng(1);
  State e = State::zero(b);
  e.v(2, 3) = 1.0;
  CHECK(ne.l2(e) == doctest::Approx(1.0).epsilon(1e-12));
  for (int t = 0; t < 5; ++t) {
    const State s = random_state(b, rng);
    CHECK(ne.l2(s) == doctest::Approx(s.norm()).epsilon(1e-11));
    // gradient: sum lambda c^2 (summation by parts on the eigenbasis)
    CHECK(ne.norm(s, {2, 2, 0, 1}) == doctest::Approx(spectral_alpha_norm(s, 0.5)).epsilon(1e-10));
    // vertical derivative: sum kappa^2 c^2
    const DzState d = dz_coefficients(s);
    CHECK(ne.norm(s, {2, 2, 1, 0}) == doctest::Approx(std::sqrt(d.dot(d))).epsilon(1e-11));
    // Laplacian on baroclinic velocity and temperature: sum lambda^2 c^2
    const State r = baroclinic_remainder(s);
    CHECK(ne.norm(r, {2, 2, 0, 2}) == doctest::Approx(spectral_alpha_norm(r, 1.0)).epsilon(1e-9));
    // parts
    CHECK(ne.l2(s, Part::Temperature) == doctest::Approx(s.T.norm()).epsilon(1e-11));
    CHECK(ne.l2(s, Part::Barotropic) == doctest::Approx(s.v.col(0).norm()).epsilon(1e-11));
  }
}

TEST_CASE("L^inf_z L^4_xy against brute force") {
  auto b = basis();
  NormEngine ne(b);
  const DiscreteGrid& g = *b->grid;
  std::mt19937_64 rng(2);
  const State s = random_state(b, rng);
  auto brute = [&](const GridField& v, const GridField& T) {
    double best = 0;
    for (int l = 0; l < v.nz(); ++l) {
      double acc = 0;
      for (const auto* f : {&v, &T})
        for (const auto& c : f->comps)
          for (int i = 0; i < c.values.rows(); ++i) acc += g.weights(c.stagger)[i] * std::pow(c.values(i, l), 4);
      best = std::max(best, std::pow(acc, 0.25));
    }
    return best;
  };
  const double engine = ne.linf_l4(s);
  CHECK(engine == doctest::Approx(brute(velocity_field(s, b->zq, b->wq), temperature_field(s, b->zq, b->wq))).epsilon(1e-12));
  Vec zd, wd;
  trapezoid(b->grid->domain().h, 1001, zd, wd);
  const double dense = brute(velocity_field(s, zd, wd), temperature_field(s, zd, wd));
  CHECK(engine <= dense * (1 + 1e-12));
  CHECK(engine >= 0.9 * dense);
}

TEST_CASE("homogeneity and exponent monotonicity") {
  auto b = basis();
  NormEngine ne(b);
  std::mt19937_64 rng(3);
  const State s = random_state(b, rng);
  const std::vector<NormSpec> specs = {{2, 2, 0, 0}, {kInf, 4, 0, 0}, {2, 6, 1, 1}, {132, 132, 0, 0}, {3, kInf, 2, 2}};
  for (const auto& sp : specs)
    for (double a : {-3.0, 0.01, 250.0})
      CHECK(ne.norm(a * s, sp) == doctest::Approx(std::abs(a) * ne.norm(s, sp)).epsilon(1e-12));
  // components are summed inside the norm, so the measure space is three copies of the cylinder
  const double vol = 3 * 0.8 * 1.1;
  for (double p1 : {1.0, 2.0, 4.0})
    for (double p2 : {2.0, 6.0, 132.0}) {
      if (p1 > p2) continue;
      const double lhs = ne.norm(s, {p1, p1, 0, 0}), rhs = std::pow(vol, 1 / p1 - 1 / p2) * ne.norm(s, {p2, p2, 0, 0});
      CHECK(lhs <= rhs * (1 + 1e-12));
    }
}

TEST_CASE("Hoelder suite") {
  auto b = basis();
  NormEngine ne(b);
  // equality for constants with p = q = 1 and p1 = q1 = p2 = q2 = 2
  const auto f = constant_center(*b, 2.0), g = constant_center(*b, 0.5);
  const std::vector<GridComponent> fg{{Stagger::Center, f[0].values.cwiseProduct(g[0].values)}};
  CHECK(ne.mixed(fg, 1, 1) == doctest::Approx(ne.mixed(f, 2, 2) * ne.mixed(g, 2, 2)).epsilon(1e-12));
  const auto rep = check_holder(ne, sample_family(b, 5, 60), 5);
  CHECK(rep.pass());
  for (const auto& r : rep.results) CHECK(r.constant <= 1.0 + 1e-8);
}

TEST_CASE("interpolation and log-Sobolev suites") {
  auto b = basis();
  NormEngine ne(b);
  SUBCASE("zero field passes") {
    std::vector<State> zero{State::zero(b)};
    CHECK(check_interpolations(ne, zero, 0).pass());
    CHECK(check_log_sobolev(ne, zero, 0).pass());
  }
  SUBCASE("calibration then check against itself") {
    const auto fam = sample_family(b, 6, 80);
    const auto cal = check_interpolations(ne, fam, 6);
    ConstantTable t = constants_of({cal});
    CHECK(t.size() == 4);
    CHECK(check_interpolations(ne, fam, 6, &t).pass());
    ConstantTable tight = t;
    for (auto& [k, v] : tight) v *= 0.5;
    CHECK_FALSE(check_interpolations(ne, fam, 6, &tight).pass());
  }
  SUBCASE("log-Sobolev scaling sweep stays finite") {
    const auto rep = check_log_sobolev(ne, sample_family(b, 7, 20), 7);
    CHECK(rep.pass());
    const auto& sweep = rep.results.back();
    CHECK(sweep.informational);
    CHECK(sweep.violations == 0);
    CHECK(std::isfinite(sweep.constant));
  }
}

TEST_CASE("nonlinearity suite basics") {
  auto b = basis();
  NormEngine ne(b);
  auto ctx = OperatorContext::make(b, PhysicalConstants{});
  std::vector<State> zero(3, State::zero(b));
  CHECK(check_nonlinearity_suite(*ctx, ne, zero, 0).pass());
  // single-mode state: <B(U,U),U> vanishes, so the first estimate has zero LHS with U = U♭ = U♯
  State u = State::zero(b);
  u.v(1, 1) = 1.0;
  u.T(0, 0) = 0.5;
  const auto rep = check_nonlinearity_suite(*ctx, ne, {u}, 0);
  CHECK(rep.results[0].name == "nonlinear_first");
  CHECK(rep.results[0].constant <= 1e-12);
}

TEST_CASE("calibration fixture regression at base resolution") {
  const auto fx = CalibrationFixture::load(std::string(HSGS_FIXTURE_DIR) + "/calibration.json");
  REQUIRE(fx.samples > 0);
  auto b = build_basis(fx.base_domain, fx.base_n, fx.base_nz);
  const auto reps = run_calibrated_suites(b, fx.seed, fx.samples, &fx.base, 1.1);
  for (const auto& r : reps) {
    CHECK_MESSAGE(r.pass(), r.to_json());
  }
  for (const auto& [name, c] : fx.base) {
    REQUIRE(fx.doubled.count(name));
    const double ratio = fx.doubled.at(name) / c;
    CHECK_MESSAGE((ratio <= 2.0 && ratio >= 0.5), name << " ratio " << ratio);
  }
  // fixture round trip
  const auto again = CalibrationFixture::from_json(fx.to_json());
  CHECK(again.base == fx.base);
  CHECK(again.doubled_domain == fx.doubled_domain);
  CHECK_THROWS_AS(CalibrationFixture::from_json("{\"version\": 1}"), ConfigError);
}

TEST_CASE("Poincare inequalities") {
  auto b = build_basis(CylinderDomain{1, 1, 1, 12, 12, 6}, 30, 2);
  const auto fam = sample_family(b, 8, 50);
  const auto rep = check_poincare(fam, {5, 20}, {{0.0, 0.5}, {0.0, 1.0}, {0.5, 1.0}}, 8);
  for (const auto& r : rep.results) {
    MESSAGE(r.name << " violations " << r.violations << "/" << r.samples << " constant " << r.constant);
    if (r.name.find("_P_") != std::string::npos || r.informational) CHECK(r.violations == 0);
  }
  CHECK_THROWS_AS(check_poincare(fam, {31}, {{0, 1}}, 8), RangeError);
}
