#include "holonomy/geometry.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <memory>
#include <numbers>
#include <utility>

namespace holonomy {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mat4 conformal_metric(const Vec4& x) {
  const double phi = 2.0 / (1.0 + x.squaredNorm());
  return phi * phi * Mat4::Identity();
}

std::array<Mat4, 4> conformal_metric_derivative(const Vec4& x) {
  // d_la (phi^2) = -2 phi^3 x_la with phi = 2/(1+|x|^2)
  const double phi = 2.0 / (1.0 + x.squaredNorm());
  std::array<Mat4, 4> dg;
  for (int la = 0; la < 4; ++la)
    dg[la] = (-2.0 * phi * phi * phi * x[la]) * Mat4::Identity();
  return dg;
}

}  // namespace

MetricChart flat_chart() {
  MetricChart chart;
  chart.name = "flat";
  chart.flat = true;
  chart.metric = [](const Vec4&) { return Mat4::Identity(); };
  chart.metric_derivative = [](const Vec4&) {
    return std::array<Mat4, 4>{Mat4::Zero(), Mat4::Zero(), Mat4::Zero(), Mat4::Zero()};
  };
  return chart;
}

MetricChart s4_chart() {
  MetricChart chart;
  chart.name = "s4";
  chart.metric = conformal_metric;
  chart.metric_derivative = conformal_metric_derivative;
  return chart;
}

Mat4 metric_at(const MetricChart& chart, const Vec4& x) {
  Mat4 g = chart.metric(x);
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw SingularMetricError("metric not symmetric at sampled point (chart " + chart.name + ")");
  Eigen::SelfAdjointEigenSolver<Mat4> es(g);
  if (es.eigenvalues().minCoeff() <= 1e-12)
    throw SingularMetricError("metric not positive definite at sampled point (chart " +
                              chart.name + ")");
  return g;
}

std::array<Mat4, 4> metric_derivative_at(const MetricChart& chart, const Vec4& x) {
  if (chart.metric_derivative) return chart.metric_derivative(x);
  std::array<Mat4, 4> dg;
  const double h = chart.fd_step;
  for (int la = 0; la < 4; ++la) {
    Vec4 e = Vec4::Zero();
    e[la] = h;
    dg[la] = (chart.metric(x + e) - chart.metric(x - e)) / (2.0 * h);
  }
  return dg;
}

std::array<Mat4, 4> christoffel(const MetricChart& chart, const Vec4& x) {
  const Mat4 ginv = metric_at(chart, x).inverse();
  const auto dg = metric_derivative_at(chart, x);
  std::array<Mat4, 4> gamma;
  for (auto& m : gamma) m = Mat4::Zero();
  // Gamma^k_{la nu} = 1/2 g^{k rho} (d_la g_{rho nu} + d_nu g_{rho la} - d_rho g_{la nu})
  for (int k = 0; k < 4; ++k)
    for (int la = 0; la < 4; ++la)
      for (int nu = la; nu < 4; ++nu) {
        double s = 0.0;
        for (int rho = 0; rho < 4; ++rho)
          s += 0.5 * ginv(k, rho) * (dg[la](rho, nu) + dg[nu](rho, la) - dg[rho](la, nu));
        gamma[k](la, nu) = s;
        gamma[k](nu, la) = s;
      }
  return gamma;
}

TwoFormBlock metric_hodge(const MetricChart& chart, const Vec4& x, const TwoFormBlock& b) {
  const Mat4 g = metric_at(chart, x);
  const Mat4 ginv = g.inverse();
  const double vol = std::sqrt(g.determinant());
  const int n = b.n_color();
  // raise both indices first: B^{la ka} = g^{la al} g^{ka be} B_{al be}
  TwoFormBlock raised(n);
  for (int la = 0; la < 4; ++la)
    for (int ka = la + 1; ka < 4; ++ka) {
      GaugeMatrix s = GaugeMatrix::Zero(n, n);
      for (int al = 0; al < 4; ++al)
        for (int be = 0; be < 4; ++be) {
          const double c = ginv(la, al) * ginv(ka, be);
          if (c != 0.0) s += c * b.at(al, be);
        }
      raised.set(la, ka, s);
    }
  TwoFormBlock out(n);
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = mu + 1; nu < 4; ++nu) {
      GaugeMatrix s = GaugeMatrix::Zero(n, n);
      for (int la = 0; la < 4; ++la)
        for (int ka = 0; ka < 4; ++ka) {
          const double e = epsilon4(mu, nu, la, ka);
          if (e != 0.0) s += 0.5 * vol * e * raised.at(la, ka);
        }
      out.set(mu, nu, s);
    }
  return out;
}

Curve::Curve(std::vector<CurveSegment> segments, std::string label)
    : segments_(std::move(segments)), label_(std::move(label)) {
  assert(!segments_.empty());
  assert(std::abs(segments_.front().t0) <= 1e-12);
  assert(std::abs(segments_.back().t1 - 1.0) <= 1e-12);
  for (size_t k = 0; k + 1 < segments_.size(); ++k) {
    assert(std::abs(segments_[k].t1 - segments_[k + 1].t0) <= 1e-12);
    const Vec4 gap = segments_[k].pos(segments_[k].t1) - segments_[k + 1].pos(segments_[k + 1].t0);
    assert(gap.cwiseAbs().maxCoeff() <= 1e-9);
  }
}

Vec4 Curve::position(double t) const {
  for (const auto& s : segments_)
    if (t <= s.t1 || &s == &segments_.back()) return s.pos(std::clamp(t, s.t0, s.t1));
  return segments_.back().pos(1.0);
}

Vec4 Curve::velocity(double t) const {
  for (const auto& s : segments_)
    if (t < s.t1 || &s == &segments_.back()) return s.vel(std::clamp(t, s.t0, s.t1));
  return segments_.back().vel(1.0);
}

Curve Curve::line(const Vec4& p0, const Vec4& p1, std::string label) {
  CurveSegment seg;
  seg.pos = [=](double t) -> Vec4 { return p0 + t * (p1 - p0); };
  seg.vel = [=](double) -> Vec4 { return p1 - p0; };
  return Curve({seg}, std::move(label));
}

Curve Curve::circle(const Vec4& center, double radius, const Vec4& u, const Vec4& v,
                    std::string label) {
  CurveSegment seg;
  seg.pos = [=](double t) -> Vec4 {
    return center + radius * ((std::cos(kTwoPi * t) - 1.0) * u + std::sin(kTwoPi * t) * v);
  };
  seg.vel = [=](double t) -> Vec4 {
    return radius * kTwoPi * (-std::sin(kTwoPi * t) * u + std::cos(kTwoPi * t) * v);
  };
  return Curve({seg}, std::move(label));
}

Curve Curve::figure_eight(const Vec4& start, double amp1, const Vec4& u, double amp2,
                          const Vec4& v, std::string label) {
  CurveSegment seg;
  seg.pos = [=](double t) -> Vec4 {
    return start + amp1 * std::sin(kTwoPi * t) * u + amp2 * std::sin(2.0 * kTwoPi * t) * v;
  };
  seg.vel = [=](double t) -> Vec4 {
    return amp1 * kTwoPi * std::cos(kTwoPi * t) * u +
           amp2 * 2.0 * kTwoPi * std::cos(2.0 * kTwoPi * t) * v;
  };
  return Curve({seg}, std::move(label));
}

namespace {

// natural cubic spline through values y_i at uniform knots; returns second derivatives
std::vector<Vec4> spline_second_derivatives(const std::vector<Vec4>& y, double du) {
  const int m = static_cast<int>(y.size());
  std::vector<Vec4> rhs(m, Vec4::Zero()), mm(m, Vec4::Zero());
  std::vector<double> diag(m, 2.0), sub(m, 0.0);
  for (int i = 1; i + 1 < m; ++i)
    rhs[i] = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (du * du);
  // tridiagonal (1/2, 2, 1/2 pattern scaled): natural ends M_0 = M_{m-1} = 0
  std::vector<double> c(m, 0.0);
  std::vector<Vec4> d(m, Vec4::Zero());
  for (int i = 1; i + 1 < m; ++i) {
    const double a = 0.5, b = 2.0, cc = 0.5;
    const double denom = b - a * c[i - 1];
    c[i] = cc / denom;
    d[i] = (0.5 * rhs[i] - a * d[i - 1]) / denom;
  }
  for (int i = m - 2; i >= 1; --i) mm[i] = d[i] - c[i] * mm[i + 1];
  return mm;
}

}  // namespace

Curve Curve::spline(const std::vector<Vec4>& points, std::string label) {
  assert(points.size() >= 3);
  const int m = static_cast<int>(points.size());
  const double du = 1.0 / (m - 1);
  const auto mm = spline_second_derivatives(points, du);
  auto eval = [points, mm, du, m](double t, bool deriv) -> Vec4 {
    const int i = std::clamp(static_cast<int>(t / du), 0, m - 2);
    const double a = ((i + 1) * du - t) / du;
    const double b = (t - i * du) / du;
    if (!deriv)
      return a * points[i] + b * points[i + 1] +
             ((a * a * a - a) * mm[i] + (b * b * b - b) * mm[i + 1]) * (du * du) / 6.0;
    return (points[i + 1] - points[i]) / du +
           (-(3.0 * a * a - 1.0) * mm[i] + (3.0 * b * b - 1.0) * mm[i + 1]) * du / 6.0;
  };
  CurveSegment seg;
  seg.pos = [eval](double t) { return eval(t, false); };
  seg.vel = [eval](double t) { return eval(t, true); };
  return Curve({seg}, std::move(label));
}

Curve Curve::constant(const Vec4& p, std::string label) {
  CurveSegment seg;
  seg.pos = [=](double) { return p; };
  seg.vel = [](double) -> Vec4 { return Vec4::Zero(); };
  return Curve({seg}, std::move(label));
}

Curve truncate(const Curve& base, double r) {
  assert(r > 0.0 && r <= 1.0);
  std::vector<CurveSegment> segs;
  double active_weight = 0.0;
  for (const auto& s : base.segments()) {
    if (s.t0 >= r) break;
    CurveSegment c = s;
    if (s.t1 > r) {
      c.t1 = r;
      c.weight = s.weight * (r - s.t0) / (s.t1 - s.t0);
    }
    active_weight += c.weight;
    segs.push_back(std::move(c));
  }
  if (r < 1.0) {
    const Vec4 frozen = base.position(r);
    CurveSegment tail;
    tail.t0 = r;
    tail.t1 = 1.0;
    tail.pos = [frozen](double) { return frozen; };
    tail.vel = [](double) -> Vec4 { return Vec4::Zero(); };
    tail.weight = std::max(0.05 * active_weight, 1e-3);
    segs.push_back(std::move(tail));
  }
  return Curve(std::move(segs), base.label() + "|trunc");
}

Curve squeeze(const Curve& base, double r, double eps) {
  assert(r > 0.0 && r <= 1.0 && eps > 0.0 && eps < 1.0);
  std::vector<CurveSegment> segs;
  double active_weight = 0.0;
  const double scale = r / eps;
  for (const auto& s : base.segments()) {
    if (s.t0 >= r) break;
    const double b1 = std::min(s.t1, r);
    CurveSegment c;
    c.t0 = s.t0 / scale;
    c.t1 = b1 / scale;
    auto pos = s.pos;
    auto vel = s.vel;
    c.pos = [pos, scale](double t) { return pos(scale * t); };
    c.vel = [vel, scale](double t) -> Vec4 { return scale * vel(scale * t); };
    c.weight = s.weight * (b1 - s.t0) / (s.t1 - s.t0);
    active_weight += c.weight;
    segs.push_back(std::move(c));
  }
  const Vec4 frozen = base.position(r);
  CurveSegment tail;
  tail.t0 = eps;
  tail.t1 = 1.0;
  tail.pos = [frozen](double) { return frozen; };
  tail.vel = [](double) -> Vec4 { return Vec4::Zero(); };
  tail.weight = std::max(0.1 * active_weight, 1e-3);
  segs.push_back(std::move(tail));
  return Curve(std::move(segs), base.label() + "|squeeze");
}

TimeChange identity_time_change() {
  return {[](double t) { return t; }, [](double) { return 1.0; }, {}, "identity"};
}

TimeChange square_time_change() {
  return {[](double t) { return t * t; }, [](double t) { return 2.0 * t; }, {}, "square"};
}

TimeChange split_linear_time_change(double knee) {
  assert(knee > 0.0 && knee < 1.0);
  auto map = [knee](double t) {
    return (t <= 0.5) ? 2.0 * knee * t : knee + (2.0 * t - 1.0) * (1.0 - knee);
  };
  auto dmap = [knee](double t) { return (t <= 0.5) ? 2.0 * knee : 2.0 * (1.0 - knee); };
  return {map, dmap, {0.5}, "split-linear"};
}

namespace {

double invert_monotone(const std::function<double(double)>& f, double target) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Curve reparametrize(const Curve& base, const TimeChange& sigma) {
  std::vector<double> cuts = {0.0, 1.0};
  for (double k : sigma.kinks) cuts.push_back(k);
  for (const auto& s : base.segments())
    if (s.t1 < 1.0) cuts.push_back(invert_monotone(sigma.map, s.t1));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             cuts.end());
  const auto held = std::make_shared<const Curve>(base);
  std::vector<CurveSegment> segs;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    CurveSegment c;
    c.t0 = cuts[i];
    c.t1 = cuts[i + 1];
    c.pos = [held, map = sigma.map](double t) { return held->position(map(t)); };
    // nudge kink-boundary queries into the open interval so the one-sided
    // derivative of sigma belongs to this piece
    const double a = c.t0, b = c.t1;
    c.vel = [held, map = sigma.map, dmap = sigma.dmap, a, b](double t) -> Vec4 {
      const double tq = std::clamp(t, a + 1e-12, b - 1e-12);
      return dmap(tq) * held->velocity(map(tq));
    };
    c.weight = c.t1 - c.t0;
    segs.push_back(std::move(c));
  }
  return Curve(std::move(segs), base.label() + "|" + sigma.label);
}

Grid make_grid(const Curve& curve, int n) {
  assert(n >= 2);
  Grid grid;
  double total_weight = 0.0;
  for (const auto& s : curve.segments()) total_weight += s.weight;
  int seg_index = 0;
  for (const auto& s : curve.segments()) {
    int m = static_cast<int>(std::lround(n * s.weight / total_weight));
    m = std::max(2, m + (m % 2));  // even, at least 2 intervals
    Grid::Span span;
    span.first = grid.nodes();
    span.count = m;
    span.segment = seg_index++;
    span.h = (s.t1 - s.t0) / m;
    for (int i = 0; i <= m; ++i) grid.t.push_back(s.t0 + i * span.h);
    grid.spans.push_back(span);
  }
  grid.simpson.assign(grid.t.size(), 0.0);
  for (const auto& span : grid.spans)
    for (int i = 0; i <= span.count; ++i) {
      double w = (i == 0 || i == span.count) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      grid.simpson[span.first + i] = w * span.h / 3.0;
    }
  return grid;
}

DirectionField make_direction(std::function<Vec4(double)> value,
                              std::function<Vec4(double)> derivative, std::string label) {
  DirectionField h{std::move(value), std::move(derivative), std::move(label)};
  assert(h.value(0.0).cwiseAbs().maxCoeff() <= 1e-12);
  assert(h.value(1.0).cwiseAbs().maxCoeff() <= 1e-12);
  return h;
}

DirectionField sine_direction(int k, int axis, double amp) {
  assert(k >= 1 && axis >= 0 && axis < 4);
  const double om = k * std::numbers::pi;
  auto val = [om, axis, amp](double t) -> Vec4 {
    Vec4 v = Vec4::Zero();
    v[axis] = amp * std::sin(om * t);
    return v;
  };
  auto der = [om, axis, amp](double t) -> Vec4 {
    Vec4 v = Vec4::Zero();
    v[axis] = amp * om * std::cos(om * t);
    return v;
  };
  return make_direction(val, der, "sin(" + std::to_string(k) + "pi t) axis " + std::to_string(axis));
}

DirectionField poly_direction(int j, int axis, double amp) {
  assert(j >= 0 && axis >= 0 && axis < 4);
  auto val = [j, axis, amp](double t) -> Vec4 {
    Vec4 v = Vec4::Zero();
    v[axis] = amp * t * (1.0 - t) * std::pow(t, j);
    return v;
  };
  auto der = [j, axis, amp](double t) -> Vec4 {
    Vec4 v = Vec4::Zero();
    v[axis] = amp * (std::pow(t, j) * (1.0 - 2.0 * t) + (j > 0 ? j * std::pow(t, j - 1) * t * (1.0 - t) : 0.0));
    return v;
  };
  return make_direction(val, der, "t(1-t)t^" + std::to_string(j) + " axis " + std::to_string(axis));
}

FramePath levi_civita_transport(const MetricChart& chart, const Curve& curve, int n) {
  const Grid grid = make_grid(curve, n);
  FramePath frame;
  frame.grid = grid;
  frame.Z.resize(grid.nodes());

  const Vec4 x0 = curve.position(0.0);
  Eigen::LLT<Mat4> llt(metric_at(chart, x0));
  if (llt.info() != Eigen::Success)
    throw SingularMetricError("metric factorization failed at curve start");
  Mat4 Z = Mat4(llt.matrixL()).inverse().transpose();  // Z^T g Z = 1

  auto rhs = [&](const CurveSegment& seg, double t, const Mat4& z) -> Mat4 {
    const Vec4 x = seg.pos(t);
    const Vec4 v = seg.vel(t);
    const auto gamma = christoffel(chart, x);
    Mat4 dz;
    for (int mu = 0; mu < 4; ++mu) {  // column mu: Zdot^k = -Gamma^k_{la nu} Z^la v^nu
      Vec4 col = Vec4::Zero();
      for (int k = 0; k < 4; ++k) col[k] = -(z.col(mu).transpose() * gamma[k] * v).value();
      dz.col(mu) = col;
    }
    return dz;
  };

  for (const auto& span : grid.spans) {
    const auto& seg = curve.segments()[span.segment];
    frame.Z[span.first] = Z;
    for (int i = 0; i < span.count; ++i) {
      const double t = grid.t[span.first + i];
      const double h = span.h;
      const Mat4 k1 = rhs(seg, t, Z);
      const Mat4 k2 = rhs(seg, t + 0.5 * h, Z + 0.5 * h * k1);
      const Mat4 k3 = rhs(seg, t + 0.5 * h, Z + 0.5 * h * k2);
      const Mat4 k4 = rhs(seg, t + h, Z + h * k3);
      Z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      frame.Z[span.first + i + 1] = Z;
    }
  }
  for (int k = 0; k < grid.nodes(); ++k) {
    const Mat4 g = metric_at(chart, curve.position(grid.t[k]));
    const double defect =
        (frame.Z[k].transpose() * g * frame.Z[k] - Mat4::Identity()).cwiseAbs().maxCoeff();
    frame.max_gram_defect = std::max(frame.max_gram_defect, defect);
  }
  return frame;
}

ScalarField squared_radius_field() {
  ScalarField f;
  f.name = "squared-radius";
  f.f = [](const Vec4& x) { return x.squaredNorm(); };
  f.grad = [](const Vec4& x) -> Vec4 { return 2.0 * x; };
  f.hess = [](const Vec4&) -> Mat4 { return 2.0 * Mat4::Identity(); };
  return f;
}

ScalarField coordinate_field(int mu) {
  assert(mu >= 0 && mu < 4);
  ScalarField f;
  f.name = "coordinate-" + std::to_string(mu + 1);
  f.f = [mu](const Vec4& x) { return x[mu]; };
  f.grad = [mu](const Vec4&) -> Vec4 {
    Vec4 v = Vec4::Zero();
    v[mu] = 1.0;
    return v;
  };
  f.hess = [](const Vec4&) -> Mat4 { return Mat4::Zero(); };
  return f;
}

double laplace_beltrami(const MetricChart& chart, const ScalarField& field, const Vec4& x) {
  const Mat4 ginv = metric_at(chart, x).inverse();
  const auto gamma = christoffel(chart, x);
  const Mat4 hess = field.hess(x);
  const Vec4 grad = field.grad(x);
  double s = (ginv * hess).trace();
  for (int la = 0; la < 4; ++la) s -= (ginv * gamma[la]).trace() * grad[la];
  return s;
}

double curve_length(const MetricChart& chart, const Curve& curve, int n) {
  const Grid grid = make_grid(curve, n);
  double len = 0.0;
  for (const auto& span : grid.spans) {
    const auto& seg = curve.segments()[span.segment];
    for (int i = 0; i <= span.count; ++i) {
      const double t = grid.t[span.first + i];
      const Vec4 v = seg.vel(t);
      const Mat4 g = metric_at(chart, seg.pos(t));
      len += grid.simpson[span.first + i] * std::sqrt(std::max(0.0, (v.transpose() * g * v).value()));
    }
  }
  return len;
}

}  // namespace holonomy
