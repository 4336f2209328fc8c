#include "holonomy/transport.hpp"

#include <cassert>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>
#include <utility>

namespace holonomy {

namespace {

// frozen coefficients of the linear augmented system at one quadrature time
struct StagePoint {
  GaugeMatrix M;  // A_mu(gamma(t)) gammadot^mu(t)
  Mat4 C = Mat4::Zero();  // C^ka_la = Gamma^ka_{la nu} v^nu
  std::vector<std::function<GaugeMatrix(const Mat4&)>> G;
};

struct AugmentedState {
  GaugeMatrix U;
  Mat4 Z;
  std::vector<GaugeMatrix> Y;
};

struct Workspace {
  const ConnectionField* field;
  const MetricChart* chart;  // null: no frame integration
  const std::vector<SandwichTerm>* terms;
};

StagePoint make_stage(const Workspace& w, const CurveSegment& seg, double t) {
  StagePoint p;
  const Vec4 x = seg.pos(t);
  const Vec4 v = seg.vel(t);
  const ConnectionValue a = w.field->A(x);
  p.M = GaugeMatrix::Zero(w.field->n_color, w.field->n_color);
  for (int mu = 0; mu < 4; ++mu)
    if (v[mu] != 0.0) p.M += v[mu] * a[mu];
  if (w.chart && !w.chart->flat) {
    const auto gamma = christoffel(*w.chart, x);
    for (int ka = 0; ka < 4; ++ka)
      for (int la = 0; la < 4; ++la) {
        double s = 0.0;
        for (int nu = 0; nu < 4; ++nu) s += gamma[ka](la, nu) * v[nu];
        p.C(ka, la) = s;
      }
  }
  p.G.reserve(w.terms->size());
  for (const auto& term : *w.terms) p.G.push_back(term.factor(seg, t));
  return p;
}

AugmentedState derivative(const Workspace& w, const StagePoint& p, const AugmentedState& s) {
  AugmentedState d;
  d.U = -p.M * s.U;
  d.Z = -p.C * s.Z;
  d.Y.resize(s.Y.size());
  for (size_t j = 0; j < s.Y.size(); ++j) {
    const int src = (*w.terms)[j].source;
    const GaugeMatrix& rhs_src = src < 0 ? s.U : s.Y[src];
    d.Y[j] = -p.M * s.Y[j] + p.G[j](s.Z) * rhs_src;
  }
  return d;
}

AugmentedState axpy(const AugmentedState& s, double a, const AugmentedState& d) {
  AugmentedState r;
  r.U = s.U + a * d.U;
  r.Z = s.Z + a * d.Z;
  r.Y.resize(s.Y.size());
  for (size_t j = 0; j < s.Y.size(); ++j) r.Y[j] = s.Y[j] + a * d.Y[j];
  return r;
}

void rk4_step(const Workspace& w, const StagePoint& p0, const StagePoint& pm,
              const StagePoint& p1, double h, AugmentedState& s) {
  const AugmentedState k1 = derivative(w, p0, s);
  const AugmentedState k2 = derivative(w, pm, axpy(s, 0.5 * h, k1));
  const AugmentedState k3 = derivative(w, pm, axpy(s, 0.5 * h, k2));
  const AugmentedState k4 = derivative(w, p1, axpy(s, h, k3));
  s.U += (h / 6.0) * (k1.U + 2.0 * k2.U + 2.0 * k3.U + k4.U);
  s.Z += (h / 6.0) * (k1.Z + 2.0 * k2.Z + 2.0 * k3.Z + k4.Z);
  for (size_t j = 0; j < s.Y.size(); ++j)
    s.Y[j] += (h / 6.0) * (k1.Y[j] + 2.0 * k2.Y[j] + 2.0 * k3.Y[j] + k4.Y[j]);
}

void magnus2_step(const Workspace& w, const StagePoint& pm, double h, AugmentedState& s) {
  // midpoint-exponential update: exactly unitary in the gauge factor
  const GaugeMatrix e_half = exp_anti_hermitian(GaugeMatrix(-0.5 * h * pm.M));
  const GaugeMatrix e_full = e_half * e_half;
  const Mat4 ez_half = (-0.5 * h * pm.C).exp();
  const Mat4 z_mid = ez_half * s.Z;
  const GaugeMatrix u_mid = e_half * s.U;
  std::vector<GaugeMatrix> y_new(s.Y.size());
  for (size_t j = 0; j < s.Y.size(); ++j) {
    const int src = (*w.terms)[j].source;
    const GaugeMatrix src_mid = src < 0 ? u_mid : GaugeMatrix(e_half * s.Y[src]);
    y_new[j] = e_full * s.Y[j] + h * e_half * (pm.G[j](z_mid) * src_mid);
  }
  s.U = e_full * s.U;
  s.Z = ez_half * z_mid;
  s.Y = std::move(y_new);
}

TransportResult solve(const ConnectionField& field, const MetricChart* chart,
                      const Curve& curve, const std::vector<SandwichTerm>& terms,
                      const TransportOptions& opts, std::vector<GaugeMatrix>* integrals) {
  assert(opts.n >= 2 && opts.reproject_every >= 1);
  Workspace w{&field, chart, &terms};
  TransportResult res;
  res.grid = make_grid(curve, opts.n);
  res.n_color = field.n_color;
  res.U.resize(res.grid.nodes());
  res.Z.resize(res.grid.nodes());

  AugmentedState s;
  s.U = GaugeMatrix::Identity(field.n_color, field.n_color);
  s.Z = Mat4::Identity();
  if (chart) {
    Eigen::LLT<Mat4> llt(metric_at(*chart, curve.position(0.0)));
    if (llt.info() != Eigen::Success)
      throw SingularMetricError("metric factorization failed at curve start");
    s.Z = Mat4(llt.matrixL()).inverse().transpose();
  }
  s.Y.assign(terms.size(), GaugeMatrix::Zero(field.n_color, field.n_color));

  int step_count = 0;
  for (const auto& span : res.grid.spans) {
    const CurveSegment& seg = curve.segments()[span.segment];
    res.U[span.first] = s.U;
    res.Z[span.first] = s.Z;
    StagePoint p0 = make_stage(w, seg, res.grid.t[span.first]);
    for (int i = 0; i < span.count; ++i) {
      const double t = res.grid.t[span.first + i];
      const double h = span.h;
      const StagePoint pm = make_stage(w, seg, t + 0.5 * h);
      StagePoint p1 = make_stage(w, seg, t + h);
      if (opts.scheme == TransportOptions::Scheme::rk4)
        rk4_step(w, p0, pm, p1, h, s);
      else
        magnus2_step(w, pm, h, s);
      p0 = std::move(p1);

      const double defect = unitary_defect(s.U);
      res.max_unitarity_defect = std::max(res.max_unitarity_defect, defect);
      if (++step_count % opts.reproject_every == 0) {
        if (defect > opts.unitarity_tol)
          throw StepError("transport drifted off the unitary group (defect " +
                          std::to_string(defect) + " over " +
                          std::to_string(opts.reproject_every) + " steps); refine the grid");
        s.U = make_group(s.U).entries;
      }
      res.U[span.first + i + 1] = s.U;
      res.Z[span.first + i + 1] = s.Z;
    }
  }
  if (chart) {
    for (int k = 0; k < res.grid.nodes(); ++k) {
      const Mat4 g = metric_at(*chart, curve.position(res.grid.t[k]));
      const double defect =
          (res.Z[k].transpose() * g * res.Z[k] - Mat4::Identity()).cwiseAbs().maxCoeff();
      res.max_gram_defect = std::max(res.max_gram_defect, defect);
    }
  }
  if (integrals) *integrals = s.Y;
  return res;
}

}  // namespace

GaugeMatrix TransportResult::between(int k_to, int k_from) const {
  if (k_to == k_from) return GaugeMatrix::Identity(n_color, n_color);
  return U[k_to] * U[k_from].adjoint();
}

TransportResult parallel_transport(const ConnectionField& field, const Curve& curve,
                                   const TransportOptions& opts) {
  return solve(field, nullptr, curve, {}, opts, nullptr);
}

TransportResult parallel_transport_framed(const ConnectionField& field, const MetricChart& chart,
                                          const Curve& curve, const TransportOptions& opts) {
  return solve(field, &chart, curve, {}, opts, nullptr);
}

std::vector<GaugeMatrix> sandwich_integrals(const ConnectionField& field,
                                            const MetricChart& chart, const Curve& curve,
                                            const std::vector<SandwichTerm>& terms,
                                            const TransportOptions& opts,
                                            TransportResult* out_transport) {
  // Y_j(1) = int_0^1 U_{1,t} G_j(t) (source) dt arrives in the frame of U(1):
  // co-integration yields int U_{t,s}... accumulated alongside U itself.
  std::vector<GaugeMatrix> integrals;
  TransportResult res = solve(field, &chart, curve, terms, opts, &integrals);
  if (out_transport) *out_transport = std::move(res);
  return integrals;
}

GaugeMatrix first_derivative(const ConnectionField& field, const MetricChart& chart,
                             const Curve& curve, const DirectionField& h,
                             const TransportOptions& opts) {
  SandwichTerm term;
  term.factor = [&field, &h](const CurveSegment& seg, double t) {
    const TwoFormBlock f = curvature(field, seg.pos(t));
    const Vec4 hv = h.value(t);
    const Vec4 v = seg.vel(t);
    return [f, hv, v](const Mat4& frame) {
      const Vec4 hw = frame * hv;  // chart components of the frame direction
      GaugeMatrix acc = GaugeMatrix::Zero(f.n_color(), f.n_color());
      for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) {
          const double c = hw[mu] * v[nu];
          if (c != 0.0) acc += c * f.at(mu, nu);
        }
      return acc;
    };
  };
  return -sandwich_integrals(field, chart, curve, {term}, opts)[0];
}

Curve shifted_curve(const Curve& base, const DirectionField& h, double eps) {
  std::vector<CurveSegment> segs;
  for (const auto& s : base.segments()) {
    CurveSegment c = s;
    auto pos = s.pos;
    auto vel = s.vel;
    auto hval = h.value;
    auto hder = h.derivative;
    c.pos = [pos, hval, eps](double t) -> Vec4 { return pos(t) + eps * hval(t); };
    c.vel = [vel, hder, eps](double t) -> Vec4 { return vel(t) + eps * hder(t); };
    segs.push_back(std::move(c));
  }
  return Curve(std::move(segs), base.label() + "|shifted");
}

FdDerivative fd_directional_derivative(const ConnectionField& field, const Curve& curve,
                                       const DirectionField& h1, int order,
                                       const DirectionField* h2, double eps,
                                       const TransportOptions& opts) {
  assert(order == 1 || order == 2);
  assert(order == 1 || h2 != nullptr);
  auto u_of = [&](double e1, double e2) {
    Curve c = shifted_curve(curve, h1, e1);
    if (h2) c = shifted_curve(c, *h2, e2);
    return parallel_transport(field, c, opts).U.back();
  };
  auto estimate = [&](double e) -> GaugeMatrix {
    if (order == 1) return (u_of(e, 0.0) - u_of(-e, 0.0)) / (2.0 * e);
    return (u_of(e, e) - u_of(e, -e) - u_of(-e, e) + u_of(-e, -e)) / (4.0 * e * e);
  };
  const GaugeMatrix d1 = estimate(eps);
  const GaugeMatrix d2 = estimate(eps / 2.0);
  FdDerivative out;
  out.value = (4.0 * d2 - d1) / 3.0;
  out.noise_floor = (d2 - d1).cwiseAbs().maxCoeff() / 3.0;
  return out;
}

double reparametrize_check(const ConnectionField& field, const Curve& curve,
                           const TimeChange& sigma, const TransportOptions& opts) {
  const GaugeMatrix base = parallel_transport(field, curve, opts).U.back();
  const GaugeMatrix re = parallel_transport(field, reparametrize(curve, sigma), opts).U.back();
  return (re - base).norm();
}

}  // namespace holonomy
