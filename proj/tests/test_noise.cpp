#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hsgs/error.hpp"
#include "hsgs/estimates.hpp"
#include "hsgs/noise.hpp"

using namespace hsgs;

namespace {

ContextPtr context() {
  static ContextPtr c = OperatorContext::make(build_basis(CylinderDomain{1.0, 1.2, 1.0, 12, 12, 6}, 16, 3), {});
  return c;
}

NoiseParams rich_params(int K) {
  NoiseParams p;
  p.family = "trig";
  p.K = K;
  p.decay = 1.0;
  p.psi = 0.4;
  p.phi = 0.3;
  p.phi_var = 0.5;
  p.psiT = 0.2;
  p.zeta = 0.3;
  p.nu = 0.2;
  p.chi = 0.1;
  p.gamma = 0.3;
  p.theta = 0.1;
  p.zeta_hat = 0.2;
  p.nu_hat = 0.2;
  p.chi_hat = 0.1;
  return p;
}

double field_max(const GridField& f) {
  double m = 0;
  for (const auto& c : f.comps) m = std::max(m, c.values.cwiseAbs().maxCoeff());
  return m;
}

double max_diff(const GridField& a, const GridField& b) {
  double m = 0;
  for (size_t c = 0; c < a.comps.size(); ++c) m = std::max(m, (a.comps[c].values - b.comps[c].values).cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

TEST_CASE("profiles") {
  const double h = 1.3;
  const Profile c{Parity::Cos, h, {0.7, -0.4, 0.25}};
  const Profile s{Parity::Sin, h, {0.0, 1.0, 0.5}};
  // derivatives against central differences
  const double e = 1e-5;
  for (double z : {-1.1, -0.6, -0.2}) {
    for (const Profile* p : {&c, &s}) {
      CHECK(p->eval(z, 1) == doctest::Approx((p->eval(z + e) - p->eval(z - e)) / (2 * e)).epsilon(1e-8));
      CHECK(p->eval(z, 2) == doctest::Approx((p->eval(z + e, 1) - p->eval(z - e, 1)) / (2 * e)).epsilon(1e-7));
    }
  }
  // lid conditions
  for (double z : {-h, 0.0}) {
    CHECK(std::abs(c.eval(z, 1)) < 1e-14);
    CHECK(std::abs(s.eval(z, 0)) < 1e-14);
  }
  // means against a fine midpoint rule
  for (const Profile* p : {&c, &s}) {
    const int n = 20000;
    double acc = 0;
    for (int i = 0; i < n; ++i) acc += p->eval(-h + h * (i + 0.5) / n);
    CHECK(p->mean() == doctest::Approx(acc / n).epsilon(1e-8));
  }
  CHECK(Profile::constant(h, 0.3).sup() == doctest::Approx(0.3));
  CHECK(Profile::zero(h).is_zero());
}

TEST_CASE("model validation") {
  auto ctx = context();
  const DiscreteGrid& g = *ctx->basis->grid;
  NoiseMode m = NoiseMode::zero(g);
  m.phi_x = Profile{Parity::Sin, 1.0, {0, 1}};
  CHECK_THROWS_AS(NoiseModel(ctx, {m}), ConfigError);
  m = NoiseMode::zero(g);
  m.theta_profile = Profile{Parity::Cos, 1.0, {1}};
  CHECK_THROWS_AS(NoiseModel(ctx, {m}), ConfigError);
  m = NoiseMode::zero(g);
  m.psi.x[kSlotU] = Vec::Zero(3);
  CHECK_THROWS_AS(NoiseModel(ctx, {m}), ConfigError);
  m = NoiseMode::zero(g);
  m.zeta = Profile{Parity::Cos, 2.0, {1}};
  CHECK_THROWS_AS(NoiseModel(ctx, {m}), ConfigError);
  const NoiseModel ok(ctx, {NoiseMode::zero(g)});
  CHECK_THROWS_AS(ok.mode(1), RangeError);
  CHECK_THROWS_AS(sigma1_apply(ok, State::zero(ctx->basis), -1), RangeError);
  NoiseParams p;
  p.family = "bogus";
  CHECK_THROWS_AS(make_noise(ctx, p), ConfigError);
  p.family = "trig";
  p.K = -1;
  CHECK_THROWS_AS(make_noise(ctx, p), RangeError);
}

TEST_CASE("sigma_1 examples") {
  auto ctx = context();
  auto b = ctx->basis;
  std::mt19937_64 rng(11);
  SUBCASE("zero velocity without chi gives zero") {
    NoiseParams p = rich_params(6);
    p.chi = 0;
    const NoiseModel m = make_noise(ctx, p);
    State s = State::zero(b);
    s.T = random_state(b, rng).T;
    for (int k = 0; k < m.K(); ++k) CHECK(field_max(sigma1_apply(m, s, k)) == 0.0);
  }
  SUBCASE("z-independent zeta on vbar has no baroclinic part") {
    std::vector<NoiseMode> modes;
    for (int k = 0; k < 3; ++k) {
      NoiseMode md = NoiseMode::zero(*b->grid);
      md.zeta = Profile::constant(1.0, 0.5 + k);
      modes.push_back(md);
    }
    const NoiseModel m(ctx, modes);
    const State s = random_state(b, rng);
    for (int k = 0; k < 3; ++k) {
      const State out = sigma1_projected(m, s, k);
      CHECK(out.v.rightCols(b->n_z).cwiseAbs().maxCoeff() < 1e-13);
      CHECK(out.v.col(0).isApprox((0.5 + k) * s.v.col(0), 1e-12));
      CHECK(out.T.isZero(0.0));
    }
  }
  SUBCASE("A/R split agrees with quadrature averaging") {
    const NoiseModel m = make_noise(ctx, rich_params(8));
    for (int t = 0; t < 4; ++t) {
      const State s = random_state(b, rng);
      for (int k = 0; k < m.K(); ++k) {
        const GridField full = sigma1_apply(m, s, k);
        const SigmaSplit sp = sigma1_split(m, s, k);
        const double h = b->grid->domain().h;
        const GridField A = vertical_average(full, h), R = baroclinic_remainder(full, h);
        const double scale = std::max(1.0, field_max(full));
        CHECK(max_diff(A, sp.A) <= 1e-12 * scale);
        CHECK(max_diff(R, sp.R) <= 1e-12 * scale);
      }
    }
  }
  SUBCASE("linear in v up to the affine part") {
    const NoiseModel m = make_noise(ctx, rich_params(5));
    const State a = random_state(b, rng), c = random_state(b, rng), z = State::zero(b);
    for (int k = 0; k < m.K(); ++k) {
      const GridField lhs = sigma1_apply(m, 2.0 * a + c, k) - sigma1_apply(m, z, k);
      const GridField rhs = 2.0 * (sigma1_apply(m, a, k) - sigma1_apply(m, z, k)) + (sigma1_apply(m, c, k) - sigma1_apply(m, z, k));
      CHECK(max_diff(lhs, rhs) <= 1e-12 * std::max(1.0, field_max(lhs)));
    }
  }
}

TEST_CASE("d_z commutation against the differentiated formula") {
  auto ctx = context();
  auto b = ctx->basis;
  const NoiseModel m = make_noise(ctx, rich_params(6));
  std::mt19937_64 rng(12);
  const State s = random_state(b, rng);
  // d_z v from the d_z coefficients (Dirichlet x sin), independent of the cos-table derivative.
  const DzState dz = dz_coefficients(s);
  const Mat ts = m.ts(0);
  const Mat& D = b->dirichlet.modes;
  const Mat uz = D.topRows(b->n_xface()) * (dz.v * ts), vz = D.bottomRows(b->n_yface()) * (dz.v * ts);
  Mat Cb = Mat::Zero(b->n, b->n_z + 1);
  Cb.col(0) = s.v.col(0);
  Mat ub, vb;
  synth_velocity(*b, Cb, m.tc(0), ub, vb);
  const Vec& z = m.z();
  const NoiseEvaluator ev(m, s, 1);
  for (int k = 0; k < m.K(); ++k) {
    const NoiseMode& md = m.mode(k);
    const Vec px = md.phi_x.eval(z, 1), py = md.phi_y.eval(z, 1), pz = md.zeta.eval(z, 1), pc = md.chi_profile.eval(z, 1);
    Mat eu = md.psi.x[kSlotU].asDiagonal() * (ctx->dx_u * uz) + md.psi.y[kSlotU].asDiagonal() * (ctx->dy_u * uz);
    eu += (ctx->dx_u * ub) * px.asDiagonal() + (ctx->dy_u * ub) * py.asDiagonal() + ub * pz.asDiagonal();
    eu += md.nu.a[kSlotU].asDiagonal() * uz + md.chi.x[kSlotU] * pc.transpose();
    Mat evv = md.psi.x[kSlotV].asDiagonal() * (ctx->dx_v * vz) + md.psi.y[kSlotV].asDiagonal() * (ctx->dy_v * vz);
    evv += (ctx->dx_v * vb) * px.asDiagonal() + (ctx->dy_v * vb) * py.asDiagonal() + vb * pz.asDiagonal();
    evv += md.nu.a[kSlotV].asDiagonal() * vz + md.chi.y[kSlotV] * pc.transpose();
    const SigmaFields f = ev.fields(k, 1);
    const double scale = std::max({1.0, eu.cwiseAbs().maxCoeff(), evv.cwiseAbs().maxCoeff()});
    CHECK((f.u - eu).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((f.v - evv).cwiseAbs().maxCoeff() <= 1e-10 * scale);
  }
}

TEST_CASE("Leray compatibility and divergence of h") {
  auto ctx = context();
  auto b = ctx->basis;
  const NoiseModel m = make_noise(ctx, rich_params(24));
  CHECK(h_div_defect(m) < 1e-12);
  std::mt19937_64 rng(13);
  double worst = 0;
  for (int t = 0; t < 10; ++t) worst = std::max(worst, leray_defect(m, random_state(b, rng)));
  MESSAGE("worst Leray defect " << worst);
  CHECK(worst <= 1e-10);
  // A user chi with a non-solenoidal barotropic part is accepted and flagged by the checker.
  NoiseMode md = NoiseMode::zero(*b->grid);
  md.chi = PlanarVector::sample(*b->grid, [](double x, double) { return std::array<double, 2>{x, 0.0}; });
  md.chi_profile = Profile::constant(1.0, 1.0);
  const NoiseModel bad(ctx, {md});
  CHECK(h_div_defect(bad) > 0.1);
  CHECK(leray_defect(bad, State::zero(b)) > 1e-3);
}

TEST_CASE("sigma_2 examples") {
  auto ctx = context();
  auto b = ctx->basis;
  std::mt19937_64 rng(14);
  SUBCASE("horizontally constant T with pure transport gives zero") {
    NoiseParams p;
    p.family = "trig";
    p.K = 5;
    p.psiT = 0.7;
    const NoiseModel m = make_noise(ctx, p);
    State s = State::zero(b);
    s.T(0, 0) = 1.3;
    s.T(0, 2) = -0.4;
    for (int k = 0; k < m.K(); ++k) CHECK(field_max(sigma2_apply(m, s, k)) < 1e-13);
  }
  SUBCASE("gamma-only model gives gamma T") {
    NoiseParams p;
    p.family = "trig";
    p.K = 4;
    p.gamma = 0.6;
    const NoiseModel m = make_noise(ctx, p);
    const State s = random_state(b, rng);
    const GridField T = temperature_field(s, m.z(), m.wz());
    for (int k = 0; k < m.K(); ++k) {
      const GridField out = sigma2_apply(m, s, k);
      CHECK((out.comps[0].values - m.mode(k).gamma * T.comps[0].values).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("affine growth constant against the triangle-inequality bound") {
    NoiseParams p = rich_params(6);
    p.psi = p.phi = p.psiT = 0;
    const NoiseModel m = make_noise(ctx, p);
    NormEngine ne(b);
    double c = 0;
    for (const State& s : sample_family(b, 15, 40)) {
      const NoiseEvaluator ev(m, s);
      double lhs = 0;
      for (int k = 0; k < m.K(); ++k) {
        SigmaFields f = ev.fields(k);
        f.u.setZero();
        f.v.setZero();
        lhs += f.norm2(*b->grid, m.wz());
      }
      const double rhs = 1 + spectral_norm2(s, 0, 0) + spectral_alpha_norm(vertical_average(s), 0.5) * spectral_alpha_norm(vertical_average(s), 0.5);
      c = std::max(c, lhs / rhs);
    }
    // sum_k ||g_k||^2 <= 5 sum_k (gamma^2 + |Theta|^2 + |zeta_hat|^2 + |nu_hat|^2 + |chi_hat|^2)(1 + ...)
    double bound = 0;
    for (int k = 0; k < m.K(); ++k) {
      const NoiseMode& md = m.mode(k);
      const double th = std::hypot(md.theta_u.sup(), md.theta_v.sup()) * md.theta_profile.sup();
      const double zh = std::hypot(md.zeta_hat[0], md.zeta_hat[1]) * md.zeta_hat_profile.sup();
      const double nh = std::hypot(md.nu_hat[0], md.nu_hat[1]) * md.nu_hat_profile.sup();
      const double ch = md.chi_hat.sup() * md.chi_hat_profile.sup() * std::sqrt(b->grid->area() * 1.0);
      bound += 5 * (md.gamma * md.gamma + th * th + zh * zh + nh * nh + ch * ch);
    }
    MESSAGE("calibrated c " << c << " analytic bound " << bound);
    CHECK(c > 0);
    CHECK(c <= bound);
  }
}

TEST_CASE("eta and gamma") {
  auto ctx = context();
  auto b = ctx->basis;
  const DiscreteGrid& g = *b->grid;
  CHECK(compute_eta(NoiseModel(ctx, {NoiseMode::zero(g), NoiseMode::zero(g)})).eta == 0.0);
  NoiseMode md = NoiseMode::zero(g);
  md.psiT = PlanarVector::constant(g, 0.3 * 0.6, 0.3 * 0.8);
  md.psiT_profile = Profile::constant(1.0, 1.0);
  const NoiseModel one(ctx, {md, NoiseMode::zero(g)});
  CHECK(one.eta() == doctest::Approx(0.3).epsilon(1e-14));

  // gamma-only model: the L2-type Lipschitz constant is sqrt(sum gamma_k^2), attained by the
  // horizontally constant temperature mode (zero horizontal gradient).
  NoiseParams p;
  p.family = "trig";
  p.K = 5;
  p.gamma = 0.8;
  const NoiseModel gm = make_noise(ctx, p);
  double g2 = 0;
  for (int k = 0; k < gm.K(); ++k) g2 += gm.mode(k).gamma * gm.mode(k).gamma;
  std::vector<State> pairs = sample_family(b, 16, 30);
  State e = State::zero(b);
  e.T(0, 1) = 2.0;
  pairs.push_back(State::zero(b));
  pairs.push_back(e);
  const GammaReport gr = compute_gamma(gm, pairs);
  CHECK(gr.pairs == 31);
  CHECK(gr.L2 == doctest::Approx(std::sqrt(g2)).epsilon(1e-12));

  // differences do not see the affine parts
  NoiseParams q = rich_params(4);
  const NoiseModel with = make_noise(ctx, q);
  q.chi = q.chi_hat = 0;
  const NoiseModel without = make_noise(ctx, q);
  std::mt19937_64 rng(17);
  const State u = random_state(b, rng), us = random_state(b, rng);
  for (int k = 0; k < 4; ++k) {
    CHECK(max_diff(sigma1_apply(with, u, k) - sigma1_apply(with, us, k), sigma1_apply(without, u, k) - sigma1_apply(without, us, k)) < 1e-12);
    CHECK(max_diff(sigma2_apply(with, u, k) - sigma2_apply(with, us, k), sigma2_apply(without, u, k) - sigma2_apply(without, us, k)) < 1e-12);
  }
  const GammaReport ga = compute_gamma(with, {u, us}), gb = compute_gamma(without, {u, us});
  CHECK(ga.L2 == doctest::Approx(gb.L2).epsilon(1e-10));
  CHECK(ga.H2L2 == doctest::Approx(gb.H2L2).epsilon(1e-10));
}

TEST_CASE("growth conditions") {
  std::mt19937_64 rng(18);
  SUBCASE("zero model") {
    auto ctx = context();
    const NoiseModel m = make_noise(ctx, NoiseParams{"none", 3});
    const GrowthReport r = check_growth(m, 5, rng);
    CHECK(r.pass());
    CHECK(r.eta == 0.0);
    for (const auto& c : r.conditions) CHECK(c.eta2_fit == 0.0);
  }
  SUBCASE("transport-only fit recovers eta^2") {
    // Long y side: modes varying along x dominate the gradient.
    auto ctx = OperatorContext::make(build_basis(CylinderDomain{1.0, 3.0, 1.0, 24, 24, 5}, 30, 2), {});
    NoiseParams p;
    p.family = "constant";
    p.K = 8;
    p.decay = 1.0;
    p.psi = 0.5;
    const NoiseModel m = make_noise(ctx, p);
    const GrowthReport r = check_growth(m, 4, rng);
    const double sum = m.eta_report().rpsi2;
    MESSAGE(r.to_json());
    CHECK(r.conditions[0].eta2_fit <= sum * (1 + 1e-12));
    CHECK(r.conditions[0].eta2_fit >= 0.9 * sum);
    CHECK(r.pass());
  }
  SUBCASE("default family passes, lids included") {
    auto ctx = context();
    NoiseParams p = rich_params(6);
    p.phi_var = 0;
    p.theta = 0;
    const GrowthReport r = check_growth(make_noise(ctx, p), 6, rng);
    MESSAGE(r.to_json());
    CHECK(r.pass());
    CHECK(r.conditions[4].name == "lid_sigma1");
  }
  SUBCASE("Theta vanishing on the lids breaks the d_z growth condition") {
    // d_z (Theta : grad vbar) = Theta' : grad vbar, and grad vbar is absent from both sides.
    auto ctx = context();
    NoiseParams p;
    p.family = "constant";
    p.K = 2;
    p.theta = 0.5;
    const GrowthReport r = check_growth(make_noise(ctx, p), 2, rng);
    CHECK(r.conditions[0].pass);
    CHECK_FALSE(r.conditions[1].pass);
  }
  SUBCASE("z-dependent Phi breaks the d_z growth condition") {
    auto ctx = context();
    NoiseParams p;
    p.family = "constant";
    p.K = 2;
    p.phi = 0.5;
    p.phi_var = 0.5;
    const GrowthReport r = check_growth(make_noise(ctx, p), 2, rng);
    CHECK(r.conditions[0].pass);
    CHECK_FALSE(r.conditions[1].pass);
    CHECK(r.conditions[1].c_growth > 2.0);
  }
}

TEST_CASE("projected increments") {
  auto ctx = context();
  auto b = ctx->basis;
  const NoiseModel m = make_noise(ctx, rich_params(7));
  std::mt19937_64 rng(19);
  const State s = random_state(b, rng);
  const Vec dW = wiener_increments(rng, m.K(), 0.01);
  State sum = State::zero(b);
  for (int k = 0; k < m.K(); ++k) sum += dW[k] * sigma_projected(m, s, k);
  const State inc = sigma_increment(m, s, dW);
  CHECK((inc - sum).norm() <= 1e-12 * std::max(1.0, sum.norm()));
  // velocity part of the projection is sigma1_projected
  const State v0 = sigma1_projected(m, s, 0);
  CHECK((v0.v - sigma_projected(m, s, 0).v).cwiseAbs().maxCoeff() < 1e-14);
  // d_z of the projected increment equals the projection of d_z sigma
  const DzState a = dz_coefficients(inc), d = sigma_increment_dz(m, s, dW);
  CHECK((a.v - d.v).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, a.v.cwiseAbs().maxCoeff()));
  CHECK((a.T - d.T).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, a.T.cwiseAbs().maxCoeff()));
  CHECK_THROWS_AS(sigma_increment(m, s, Vec::Zero(3)), ConfigError);
  // the barotropic part of the projection is discretely solenoidal
  const GridField vb = barotropic_field(inc);
  const Vec div = horizontal_divergence(*b->grid, vb, 0);
  CHECK(div.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Wiener increments") {
  std::mt19937_64 a(5), c(5);
  CHECK_THROWS_AS(wiener_increments(a, 3, 0.0), RangeError);
  CHECK_THROWS_AS(wiener_increments(a, 3, -1e-3), RangeError);
  CHECK(wiener_increments(a, 0, 0.1).size() == 0);
  const Vec x = wiener_increments(a, 16, 0.01), y = wiener_increments(c, 16, 0.01);
  CHECK(x == y);
  std::mt19937_64 r(99);
  const double dt = 0.004;
  const Vec big = wiener_increments(r, 1000000, dt);
  const double mean = big.mean();
  const double var = (big.array() - mean).square().sum() / (big.size() - 1);
  CHECK(std::abs(var / dt - 1) < 0.01);
  CHECK(std::abs(mean) < 5 * std::sqrt(dt / big.size()));
  // path streams: deterministic and distinct
  auto p0 = path_rng(7, 0), p0b = path_rng(7, 0), p1 = path_rng(7, 1), q0 = path_rng(8, 0);
  const auto v0 = p0();
  CHECK(v0 == p0b());
  CHECK(v0 != p1());
  CHECK(v0 != q0());
}
