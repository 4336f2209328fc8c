#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "holonomy/transport.hpp"
#include "support.hpp"

using namespace holonomy;
namespace ht = holonomy::testing;

namespace {

// independent scalar quadrature of the abelian exponent int <c gamma, gammadot> dt
double abelian_phase(const So4Element& c, const Curve& curve, int n = 20000) {
  auto f = [&](double t) {
    const Vec4 x = curve.position(t);
    const Vec4 v = curve.velocity(t);
    return v.dot(c.matrix() * x);
  };
  const double h = 1.0 / n;
  double acc = f(0.0) + f(1.0);
  for (int k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * f(k * h);
  return acc * h / 3.0;
}

GaugeMatrix abelian_holonomy(double phase) {
  GaugeMatrix u(2, 2);
  u.setZero();
  u(0, 0) = std::exp(std::complex<double>(0.0, -phase));
  u(1, 1) = std::exp(std::complex<double>(0.0, phase));
  return u;
}

GaugeMatrix identity2() { return GaugeMatrix::Identity(2, 2); }

}  // namespace

TEST_CASE("transport in the zero field is the identity") {
  const ConnectionField field = zero_connection();
  for (const Curve& curve : ht::curve_zoo()) {
    CAPTURE(curve.label());
    const TransportResult res = parallel_transport(field, curve);
    CHECK(ht::inf_diff(res.U.back(), identity2()) <= 1e-14);
    CHECK(res.max_unitarity_defect <= 1e-14);
  }
}

TEST_CASE("abelian holonomy matches the scalar phase") {
  const So4Element c = left_basis()[0] * 0.37 + right_basis()[1] * 0.11;
  const ConnectionField field = abelian_constant(c);

  SUBCASE("line: exact exponent") {
    const Vec4 p(0.2, -0.1, 0.3, 0.1);
    const Vec4 d(-0.3, 0.4, -0.2, 0.5);
    const Curve curve = Curve::line(p, d);
    // int_0^1 <c (p + t d), d> dt = <c p, d> because <c d, d> = 0
    const double phase = d.dot(c.matrix() * p);
    const GaugeMatrix expected = abelian_holonomy(phase);

    TransportOptions opts;
    CHECK(ht::inf_diff(parallel_transport(field, curve, opts).U.back(), expected) <= 1e-12);
    opts.scheme = TransportOptions::Scheme::magnus2;
    CHECK(ht::inf_diff(parallel_transport(field, curve, opts).U.back(), expected) <= 1e-7);
  }

  SUBCASE("circle: quadrature exponent") {
    const Curve curve = Curve::circle({0.1, 0.2, -0.1, 0.3}, 0.4, ht::axis(0), ht::axis(2));
    const GaugeMatrix expected = abelian_holonomy(abelian_phase(c, curve));

    TransportOptions opts;
    CHECK(ht::inf_diff(parallel_transport(field, curve, opts).U.back(), expected) <= 1e-10);
    opts.scheme = TransportOptions::Scheme::magnus2;
    CHECK(ht::inf_diff(parallel_transport(field, curve, opts).U.back(), expected) <= 1e-6);
  }
}

TEST_CASE("holonomy is multiplicative across intermediate nodes") {
  const ConnectionField field = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  for (const Curve& curve : ht::curve_zoo()) {
    CAPTURE(curve.label());
    const TransportResult res = parallel_transport(field, curve);
    const int k0 = res.grid.nodes() / 5;
    const int k1 = res.grid.nodes() / 2;
    const int k2 = 4 * res.grid.nodes() / 5;
    const GaugeMatrix chained = res.between(k2, k1) * res.between(k1, k0);
    CHECK(ht::inf_diff(res.between(k2, k0), chained) <= 1e-9);
    CHECK(ht::inf_diff(res.between(k1, k1), identity2()) == 0.0);
  }
}

TEST_CASE("transport stays unitary along instanton curves") {
  const ConnectionField field = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  for (const Curve& curve : ht::curve_zoo()) {
    CAPTURE(curve.label());
    TransportOptions opts;
    CHECK(parallel_transport(field, curve, opts).max_unitarity_defect <= 1e-9);
    opts.scheme = TransportOptions::Scheme::magnus2;
    CHECK(parallel_transport(field, curve, opts).max_unitarity_defect <= 1e-12);
  }
}

TEST_CASE("holonomy transforms by conjugation under gauge changes") {
  const ConnectionField field = bpst(0.9, Vec4(0.1, 0.0, -0.1, 0.2), Orientation::antidual);
  auto gen = ht::rng(7);
  const GaugeTransform tr =
      sine_gauge_transform(ht::random_algebra(2, gen), Vec4(0.6, -0.3, 0.8, 0.2), 0.7);
  const ConnectionField moved = gauge_transformed(field, tr);
  for (const Curve& curve : ht::curve_zoo()) {
    CAPTURE(curve.label());
    const GaugeMatrix u = parallel_transport(field, curve).U.back();
    const GaugeMatrix u_moved = parallel_transport(moved, curve).U.back();
    const GaugeMatrix expected =
        tr.psi(curve.position(1.0)).adjoint() * u * tr.psi(curve.position(0.0));
    CHECK(ht::inf_diff(u_moved, expected) <= 1e-8);
  }
}

TEST_CASE("the fourth-order scheme converges at fourth order") {
  const ConnectionField field = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  const Curve curve = Curve::circle({0.1, 0.2, -0.1, 0.3}, 0.4, ht::axis(0), ht::axis(2));
  TransportOptions opts;
  opts.n = 3200;
  const GaugeMatrix ref = parallel_transport(field, curve, opts).U.back();
  opts.n = 100;
  const double e100 = ht::inf_diff(parallel_transport(field, curve, opts).U.back(), ref);
  opts.n = 200;
  const double e200 = ht::inf_diff(parallel_transport(field, curve, opts).U.back(), ref);
  const double ratio = e100 / e200;
  CAPTURE(e100);
  CAPTURE(e200);
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("the midpoint-exponential scheme agrees with the fourth-order one") {
  const ConnectionField field = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  const Curve curve = Curve::circle({0.1, 0.2, -0.1, 0.3}, 0.4, ht::axis(0), ht::axis(2));
  TransportOptions opts;
  const GaugeMatrix u4 = parallel_transport(field, curve, opts).U.back();
  opts.scheme = TransportOptions::Scheme::magnus2;
  const GaugeMatrix u2 = parallel_transport(field, curve, opts).U.back();
  CHECK(ht::inf_diff(u4, u2) <= 1e-5);
}

TEST_CASE("a coarse grid over a strong field raises step-failure") {
  const ConnectionField field = abelian_constant(left_basis()[0] * 40.0);
  const Curve curve = Curve::line(Vec4(2.0, 0.0, 0.0, 0.0), Vec4(0.0, 2.0, 0.0, 0.0));
  TransportOptions opts;
  opts.n = 4;
  opts.reproject_every = 1;
  CHECK_THROWS_AS(parallel_transport(field, curve, opts), StepError);
}

TEST_CASE("holonomy is parametrization invariant") {
  const ConnectionField field = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  const std::vector<Curve> curves = {
      Curve::line({0.2, -0.1, 0.3, 0.1}, {-0.3, 0.4, -0.2, 0.5}),
      Curve::circle({0.1, 0.2, -0.1, 0.3}, 0.4, ht::axis(0), ht::axis(2)),
  };
  const std::vector<TimeChange> sigmas = {identity_time_change(), square_time_change(),
                                          split_linear_time_change(0.3)};
  for (const Curve& curve : curves)
    for (const TimeChange& sigma : sigmas) {
      CAPTURE(curve.label());
      CAPTURE(sigma.label);
      CHECK(reparametrize_check(field, curve, sigma) <= 1e-8);
    }
}

TEST_CASE("the derivative formula matches finite differences") {
  const ConnectionField field = bpst(1.0, Vec4(0.05, -0.1, 0.0, 0.1), Orientation::antidual);
  const MetricChart chart = flat_chart();
  const std::vector<Curve> curves = {
      Curve::line({0.2, -0.1, 0.3, 0.1}, {-0.3, 0.4, -0.2, 0.5}),
      Curve::circle({0.1, 0.2, -0.1, 0.3}, 0.4, ht::axis(0), ht::axis(2)),
  };
  const std::vector<DirectionField> dirs = {sine_direction(1, 0, 0.4), sine_direction(2, 2, 0.3),
                                            poly_direction(1, 3, 0.5)};
  for (const Curve& curve : curves)
    for (const DirectionField& h : dirs) {
      CAPTURE(curve.label());
      CAPTURE(h.label);
      const GaugeMatrix analytic = first_derivative(field, chart, curve, h);
      const FdDerivative fd = fd_directional_derivative(field, curve, h);
      CHECK(ht::inf_diff(analytic, fd.value) <= 1e-5);
      CHECK(ht::inf_diff(analytic, fd.value) <= std::max(50.0 * fd.noise_floor, 1e-7));
    }
}

TEST_CASE("mixed second differences are symmetric in the direction pair") {
  const ConnectionField field = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  const Curve curve = Curve::circle({0.1, 0.2, -0.1, 0.3}, 0.4, ht::axis(0), ht::axis(2));
  const DirectionField h1 = sine_direction(1, 0, 0.4);
  const DirectionField h2 = sine_direction(2, 2, 0.3);
  TransportOptions opts;
  opts.n = 400;  // the FD probe re-solves eight transports; keep the grid modest
  const FdDerivative d12 = fd_directional_derivative(field, curve, h1, 2, &h2, 1e-3, opts);
  const FdDerivative d21 = fd_directional_derivative(field, curve, h2, 2, &h1, 1e-3, opts);
  CHECK(ht::inf_diff(d12.value, d21.value) <= 1e-10);
  CHECK(d12.value.cwiseAbs().maxCoeff() > 1e-4);  // the probe measures something nonzero
}

TEST_CASE("co-integration reproduces node-wise quadrature") {
  const ConnectionField field = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  const MetricChart chart = flat_chart();
  const Curve curve = Curve::circle({0.1, 0.2, -0.1, 0.3}, 0.4, ht::axis(0), ht::axis(2));
  const DirectionField h = sine_direction(1, 1, 0.5);

  SandwichTerm term;
  term.factor = [&field, &h](const CurveSegment& seg, double t) {
    const TwoFormBlock f = curvature(field, seg.pos(t));
    const Vec4 hv = h.value(t);
    const Vec4 v = seg.vel(t);
    return [f, hv, v](const Mat4& frame) {
      const Vec4 hw = frame * hv;
      GaugeMatrix acc = GaugeMatrix::Zero(2, 2);
      for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) acc += (hw[mu] * v[nu]) * f.at(mu, nu);
      return acc;
    };
  };
  TransportResult res;
  const GaugeMatrix direct = sandwich_integrals(field, chart, curve, {term}, {}, &res)[0];

  GaugeMatrix simpson = GaugeMatrix::Zero(2, 2);
  for (int k = 0; k < res.grid.nodes(); ++k) {
    const double t = res.grid.t[k];
    const TwoFormBlock f = curvature(field, curve.position(t));
    const Vec4 hw = res.Z[k] * h.value(t);
    const Vec4 v = curve.velocity(t);
    GaugeMatrix g = GaugeMatrix::Zero(2, 2);
    for (int mu = 0; mu < 4; ++mu)
      for (int nu = 0; nu < 4; ++nu) g += (hw[mu] * v[nu]) * f.at(mu, nu);
    simpson += res.grid.simpson[k] * (res.between(res.grid.last(), k) * g * res.at(k));
  }
  CHECK(ht::inf_diff(direct, simpson) <= 1e-8);
}

TEST_CASE("nested accumulators integrate iterated integrals") {
  const ConnectionField field = zero_connection();
  const MetricChart chart = flat_chart();
  const Curve curve = Curve::line({0.0, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0, 0.0});

  SandwichTerm inner;  // Y_0(t) = int_0^t 1 ds = t
  inner.factor = [](const CurveSegment&, double) {
    return [](const Mat4&) { return GaugeMatrix::Identity(2, 2); };
  };
  SandwichTerm outer;  // Y_1(1) = int_0^1 t Y_0(t) dt = 1/3
  outer.factor = [](const CurveSegment&, double t) {
    return [t](const Mat4&) { return GaugeMatrix(t * GaugeMatrix::Identity(2, 2)); };
  };
  outer.source = 0;

  const auto values = sandwich_integrals(field, chart, curve, {inner, outer});
  CHECK(ht::inf_diff(values[0], identity2()) <= 1e-13);
  CHECK(ht::inf_diff(values[1], GaugeMatrix(identity2() / 3.0)) <= 1e-13);
}

TEST_CASE("framed transport keeps the frame orthonormal on the round chart") {
  const MetricChart chart = s4_chart();
  const Curve curve = Curve::circle({0.1, 0.2, -0.1, 0.3}, 0.4, ht::axis(0), ht::axis(2));

  const TransportResult zero = parallel_transport_framed(zero_connection(), chart, curve);
  CHECK(ht::inf_diff(zero.U.back(), identity2()) <= 1e-14);
  CHECK(zero.max_gram_defect <= 1e-9);

  const ConnectionField field = bpst(1.0, Vec4::Zero(), Orientation::antidual);
  const TransportResult res = parallel_transport_framed(field, chart, curve);
  CHECK(res.max_gram_defect <= 1e-9);
  CHECK(res.max_unitarity_defect <= 1e-9);
}
