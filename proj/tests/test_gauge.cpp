#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "holonomy/gauge.hpp"
#include "support.hpp"

using namespace holonomy;
namespace ht = holonomy::testing;

namespace {

Vec4 random_point(std::mt19937_64& gen, double box = 0.7) {
  std::uniform_real_distribution<double> dist(-box, box);
  return Vec4(dist(gen), dist(gen), dist(gen), dist(gen));
}

double block_max(const TwoFormBlock& b) {
  double m = 0.0;
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu) m = std::max(m, b.at(mu, nu).cwiseAbs().maxCoeff());
  return m;
}

double bianchi_defect(const ConnectionField& f, const MetricChart& chart, const Vec4& x) {
  const auto cov = covariant_curvature_derivative(f, chart, x);
  double worst = 0.0, scale = 1.0;
  for (int la = 0; la < 4; ++la) scale = std::max(scale, block_max(cov[la]));
  for (int la = 0; la < 4; ++la)
    for (int mu = 0; mu < 4; ++mu)
      for (int nu = 0; nu < 4; ++nu) {
        const GaugeMatrix sum =
            cov[la].at(mu, nu) + cov[mu].at(nu, la) + cov[nu].at(la, mu);
        worst = std::max(worst, sum.cwiseAbs().maxCoeff());
      }
  return worst / scale;
}

}  // namespace

TEST_CASE("zero field: vanishing curvature and residual") {
  const ConnectionField f = zero_connection();
  const Vec4 x(0.3, -0.1, 0.2, 0.5);
  CHECK(curvature(f, x).norm() == 0.0);
  for (const auto& r : ym_residual(f, flat_chart(), x)) CHECK(r.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("abelian constant-curvature field: closed forms") {
  const double c0 = 0.37;
  const ConnectionField f = abelian_constant(left_basis()[0] * c0);
  auto gen = ht::rng(20);
  const Vec4 x = random_point(gen);
  const TwoFormBlock F = curvature(f, x);
  // F_{mu nu} = -2i c_{mu nu} sigma_3: constant, x-independent
  const Mat4 pat = (left_basis()[0] * c0).matrix();
  GaugeMatrix s3 = GaugeMatrix::Zero(2, 2);
  s3(0, 0) = 1.0;
  s3(1, 1) = -1.0;
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu)
      CHECK(ht::inf_diff(F.at(mu, nu),
                         GaugeMatrix(std::complex<double>(0, -2.0) * pat(mu, nu) * s3)) <= 1e-13);
  // flat covariant derivative and Yang-Mills residual vanish
  for (const auto& d : covariant_curvature_derivative(f, flat_chart(), x))
    CHECK(block_max(d) <= 1e-10);
  for (const auto& r : ym_residual(f, flat_chart(), x)) CHECK(r.cwiseAbs().maxCoeff() <= 1e-9);
  // c = e1 is a +1 Hodge eigenvector: the anti-self-dual half vanishes
  const auto [fp, fm] = sd_split(f, flat_chart(), x);
  CHECK(fm.norm() <= 1e-13);
  CHECK((fp - F).norm() <= 1e-13);
}

TEST_CASE("BPST: frozen density 48 at the center and duality on both charts") {
  const ConnectionField f = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  const TwoFormBlock F0 = curvature(f, Vec4::Zero());
  double dens = 0.0;
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu) dens += -0.5 * (F0.at(mu, nu) * F0.at(mu, nu)).trace().real();
  CHECK(dens == doctest::Approx(48.0).epsilon(1e-10));

  auto gen = ht::rng(21);
  const MetricChart flat = flat_chart(), sphere = s4_chart();
  for (int i = 0; i < 50; ++i) {
    const Vec4 x = random_point(gen);
    const auto [fp_flat, fm_flat] = sd_split(f, flat, x);
    CHECK(fp_flat.norm() / curvature(f, x).norm() <= 1e-10);
    const auto [fp_s4, fm_s4] = sd_split(f, sphere, x);
    CHECK(fp_s4.norm() / curvature(f, x).norm() <= 1e-8);
  }
  // the dual variant has the opposite half vanishing
  const ConnectionField fd = bpst(0.8, Vec4(0.1, 0, -0.2, 0), Orientation::dual);
  const Vec4 x = random_point(gen);
  const auto [fp, fm] = sd_split(fd, flat, x);
  CHECK(fm.norm() / curvature(fd, x).norm() <= 1e-10);
}

TEST_CASE("BPST: Yang-Mills residual vanishes on both charts") {
  const ConnectionField f = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  auto gen = ht::rng(22);
  for (const MetricChart& chart : {flat_chart(), s4_chart()}) {
    for (int i = 0; i < 20; ++i) {
      const Vec4 x = random_point(gen);
      const double fscale = block_max(curvature(f, x));
      double r = 0.0;
      for (const auto& comp : ym_residual(f, chart, x))
        r = std::max(r, comp.cwiseAbs().maxCoeff());
      CHECK(r <= 1e-9 * fscale);
    }
  }
}

TEST_CASE("Bianchi cyclic identity at random points, both charts") {
  auto gen = ht::rng(23);
  const ConnectionField f = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  const ConnectionField p = perturbed(f, 0.3, default_bump());
  for (const MetricChart& chart : {flat_chart(), s4_chart()})
    for (int i = 0; i < 5; ++i) {
      const Vec4 x = random_point(gen);
      CHECK(bianchi_defect(f, chart, x) <= 1e-8);
      CHECK(bianchi_defect(p, chart, x) <= 1e-8);
    }
}

TEST_CASE("analytic derivative closures agree with finite differences") {
  auto gen = ht::rng(24);
  const ConnectionField fields[] = {bpst(1.0, Vec4::Zero(), Orientation::antidual),
                                    abelian_constant(left_basis()[0] * 0.37),
                                    perturbed(bpst(1.0, Vec4::Zero(), Orientation::antidual),
                                              0.3, default_bump())};
  for (const auto& f : fields)
    for (int i = 0; i < 10; ++i) CHECK(derivative_defect(f, random_point(gen)) <= 1e-6);
}

TEST_CASE("self-dual split: reassembly, eigenproperty, metric orthogonality") {
  const ConnectionField f = perturbed(bpst(1.0, Vec4::Zero(), Orientation::antidual), 0.4,
                                      default_bump());
  auto gen = ht::rng(25);
  const Vec4 x = random_point(gen);
  for (const MetricChart& chart : {flat_chart(), s4_chart()}) {
    const auto [fp, fm] = sd_split(f, chart, x);
    CHECK((fp + fm - curvature(f, x)).norm() <= 1e-12);
    CHECK((metric_hodge(chart, x, fp) - fp).norm() <= 1e-12);
    CHECK((metric_hodge(chart, x, fm) + fm).norm() <= 1e-12);
    // <F+, F->_g = 0 with both index pairs raised by g^{-1}
    const Mat4 ginv = metric_at(chart, x).inverse();
    std::complex<double> pairing = 0.0;
    for (int mu = 0; mu < 4; ++mu)
      for (int nu = 0; nu < 4; ++nu)
        for (int al = 0; al < 4; ++al)
          for (int be = 0; be < 4; ++be)
            pairing += ginv(mu, al) * ginv(nu, be) * (fp.at(mu, nu) * fm.at(al, be)).trace();
    CHECK(std::abs(pairing) <= 1e-10);
  }
}

TEST_CASE("action: frozen instanton value 8 pi^2 and gauge invariance") {
  const ConnectionField f = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  BallSpec spec;
  spec.radius = 20.0;
  const ActionEstimate est = ym_action(f, flat_chart(), spec);
  const double exact = 8.0 * std::numbers::pi * std::numbers::pi;
  CHECK(std::abs(est.value - exact) / exact <= 1e-2);
  // tail continuation ~ 24 pi^2 rho^4 / R^4 for the instanton profile
  const double tail_exact = 24.0 * std::numbers::pi * std::numbers::pi / std::pow(20.0, 4);
  CHECK(est.tail_estimate == doctest::Approx(tail_exact).epsilon(0.5));
  CHECK(ym_action(zero_connection(), flat_chart(), spec).value == 0.0);

  // conjugated field has identical action (small ball keeps this test fast)
  GaugeMatrix gen2 = GaugeMatrix::Zero(2, 2);
  gen2(0, 1) = std::complex<double>(0.3, 0.4);
  gen2(1, 0) = std::complex<double>(-0.3, 0.4);
  const GaugeTransform t = sine_gauge_transform(make_algebra(gen2).entries,
                                                Vec4(0.7, -0.3, 0.5, 0.2), 0.8);
  BallSpec small;
  small.radius = 2.0;
  small.n_radial = 12;
  small.n_psi = 8;
  small.n_theta = 6;
  small.n_phi = 10;
  const double base = ym_action(f, flat_chart(), small).value;
  const double conj = ym_action(gauge_transformed(f, t), flat_chart(), small).value;
  CHECK(std::abs(base - conj) <= 1e-8 * std::abs(base));
}

TEST_CASE("gauge transform: curvature conjugation and residual covariance") {
  const ConnectionField f = perturbed(bpst(1.0, Vec4::Zero(), Orientation::antidual), 0.25,
                                      default_bump());
  GaugeMatrix gen2 = GaugeMatrix::Zero(2, 2);
  gen2(0, 0) = std::complex<double>(0, 0.6);
  gen2(1, 1) = std::complex<double>(0, -0.6);
  gen2(0, 1) = std::complex<double>(0.2, -0.1);
  gen2(1, 0) = std::complex<double>(-0.2, -0.1);
  const GaugeTransform t = sine_gauge_transform(make_algebra(gen2).entries,
                                                Vec4(0.4, 0.9, -0.6, 0.3), 1.1);
  const ConnectionField g = gauge_transformed(f, t);
  auto gen = ht::rng(26);
  for (int i = 0; i < 5; ++i) {
    const Vec4 x = random_point(gen);
    const GaugeMatrix psi = transform_at(t, x);
    const TwoFormBlock F = curvature(f, x);
    const TwoFormBlock Fp = curvature(g, x);
    double worst = 0.0;
    for (int mu = 0; mu < 4; ++mu)
      for (int nu = 0; nu < 4; ++nu)
        worst = std::max(worst, (Fp.at(mu, nu) - GaugeMatrix(psi.adjoint() * F.at(mu, nu) * psi))
                                    .cwiseAbs()
                                    .maxCoeff());
    CHECK(worst <= 1e-9);
    const auto res = ym_residual(f, s4_chart(), x);
    const auto resp = ym_residual(g, s4_chart(), x);
    for (int nu = 0; nu < 4; ++nu)
      CHECK(ht::inf_diff(resp[nu], GaugeMatrix(psi.adjoint() * res[nu] * psi)) <= 1e-8);
  }
  // pure gauge: transforming the zero field gives zero curvature
  const ConnectionField pure = gauge_transformed(zero_connection(), t);
  CHECK(block_max(curvature(pure, Vec4(0.2, 0.1, -0.3, 0.4))) <= 1e-9);
}

TEST_CASE("perturbed field: compact support and smoothness of the bump") {
  const ConnectionField base = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  BumpSpec bump = default_bump();
  bump.radius = 1.5;
  const ConnectionField p = perturbed(base, 0.5, bump);
  const Vec4 inside(0.3, 0.2, -0.1, 0.4), outside(1.2, 1.1, -0.9, 0.8);
  CHECK((outside).norm() > bump.radius);
  const auto a_out = p.A(outside);
  const auto b_out = base.A(outside);
  for (int mu = 0; mu < 4; ++mu) CHECK(ht::inf_diff(a_out[mu], b_out[mu]) == 0.0);
  double diff = 0.0;
  const auto a_in = p.A(inside);
  const auto b_in = base.A(inside);
  for (int mu = 0; mu < 4; ++mu) diff = std::max(diff, ht::inf_diff(a_in[mu], b_in[mu]));
  CHECK(diff > 1e-3);
  CHECK(derivative_defect(p, inside) <= 1e-6);
}

TEST_CASE("builtin field lookup") {
  CHECK_THROWS_AS(builtin_field("instanton", 1.0, Vec4::Zero(), Orientation::antidual,
                                So4Element(), 0.1),
                  UnknownNameError);
  const ConnectionField f =
      builtin_field("bpst", 1.0, Vec4::Zero(), Orientation::antidual, So4Element(), 0.0);
  CHECK(f.n_color == 2);
  CHECK(f.name == "bpst-antidual");
}
