#pragma once

#include <functional>
#include <string>
#include <vector>

#include "holonomy/algebra.hpp"
#include "holonomy/types.hpp"

namespace holonomy {

// Riemannian metric in a single global chart on R^4. `metric_derivative` is
// the analytic d_la g_{mu nu}; when absent a central difference with step
// fd_step is used (that choice is visible to callers through fd_step).
struct MetricChart {
  std::string name;
  std::function<Mat4(const Vec4&)> metric;
  std::function<std::array<Mat4, 4>(const Vec4&)> metric_derivative;
  bool flat = false;
  double fd_step = 1e-5;
};

MetricChart flat_chart();
// Round 4-sphere in stereographic coordinates: g = (2/(1+|x|^2))^2 delta.
MetricChart s4_chart();

// g(x) with a positive-definiteness check.
Mat4 metric_at(const MetricChart& chart, const Vec4& x);
std::array<Mat4, 4> metric_derivative_at(const MetricChart& chart, const Vec4& x);

// Gamma[kappa](la, nu) = 1/2 g^{kappa rho} (d_la g_{rho nu} + d_nu g_{rho la} - d_rho g_{la nu}).
std::array<Mat4, 4> christoffel(const MetricChart& chart, const Vec4& x);

// (*B)_{mu nu} = sqrt(det g)/2 epsilon_{mu nu la ka} g^{la al} g^{ka be} B_{al be}.
TwoFormBlock metric_hodge(const MetricChart& chart, const Vec4& x, const TwoFormBlock& b);

// Piecewise-smooth path [0,1] -> R^4. Each segment's pos/vel are smooth on the
// closed interval [t0,t1], so one-sided velocities at junctions come from
// evaluating the owning segment; integrators walk segments and never straddle
// a junction. `weight` hints how many grid nodes the segment should get
// (squeezed curves put most of their arc into a short parameter interval).
struct CurveSegment {
  double t0 = 0.0;
  double t1 = 1.0;
  std::function<Vec4(double)> pos;
  std::function<Vec4(double)> vel;
  double weight = 1.0;
};

class Curve {
 public:
  Curve(std::vector<CurveSegment> segments, std::string label);

  Vec4 position(double t) const;
  Vec4 velocity(double t) const;  // at a junction: the right segment's value
  const std::vector<CurveSegment>& segments() const { return segments_; }
  const std::string& label() const { return label_; }

  static Curve line(const Vec4& p0, const Vec4& p1, std::string label = "line");
  // center + radius * ((cos(2 pi t) - 1) u + sin(2 pi t) v); starts at center.
  static Curve circle(const Vec4& center, double radius, const Vec4& u, const Vec4& v,
                      std::string label = "circle");
  // a lemniscate-like loop: amp1 sin(2 pi t) u + amp2 sin(4 pi t) v offset to start at `start`.
  static Curve figure_eight(const Vec4& start, double amp1, const Vec4& u, double amp2,
                            const Vec4& v, std::string label = "figure-eight");
  // natural cubic spline through the control points at uniform parameters.
  static Curve spline(const std::vector<Vec4>& points, std::string label = "spline");
  static Curve constant(const Vec4& p, std::string label = "constant");

 private:
  std::vector<CurveSegment> segments_;
  std::string label_;
};

// Freeze the curve after parameter r: t -> gamma(min(t, r)).
Curve truncate(const Curve& base, double r);
// Traverse gamma|[0,r] during [0, eps], then freeze: t -> gamma(r min(t,eps)/eps).
Curve squeeze(const Curve& base, double r, double eps);

// Monotone C^0 time change sigma: [0,1]->[0,1] (piecewise C^1).
struct TimeChange {
  std::function<double(double)> map;
  std::function<double(double)> dmap;
  std::vector<double> kinks;  // interior kinks of sigma itself
  std::string label;
};
TimeChange identity_time_change();
TimeChange square_time_change();            // sigma(t) = t^2
TimeChange split_linear_time_change(double knee);  // piecewise linear through (1/2 -> knee)
Curve reparametrize(const Curve& base, const TimeChange& sigma);

// Quadrature/integration grid. Nodes at segment junctions are duplicated (one
// per adjacent span) so side-resolved integrand samples coexist; each span has
// uniform step and an even interval count for composite Simpson.
struct Grid {
  struct Span {
    int first = 0;      // index of first node of the span in `t`
    int count = 0;      // number of intervals (even)
    int segment = 0;    // owning curve segment
    double h = 0.0;
  };
  std::vector<double> t;
  std::vector<Span> spans;
  std::vector<double> simpson;  // per-node composite Simpson weights

  int nodes() const { return static_cast<int>(t.size()); }
  int last() const { return static_cast<int>(t.size()) - 1; }
};

Grid make_grid(const Curve& curve, int n);

// Direction field h(t) in frame components with h(0) = h(1) = 0.
struct DirectionField {
  std::function<Vec4(double)> value;
  std::function<Vec4(double)> derivative;
  std::string label;
};

DirectionField make_direction(std::function<Vec4(double)> value,
                              std::function<Vec4(double)> derivative, std::string label);
DirectionField sine_direction(int k, int axis, double amp = 1.0);   // amp sin(k pi t) e_axis
DirectionField poly_direction(int j, int axis, double amp = 1.0);   // amp t(1-t) t^j e_axis

// g-orthonormal frame Z_mu along the curve, parallel for the Levi-Civita
// connection; column mu of Z[k] holds the chart components of Z_mu at node k.
struct FramePath {
  Grid grid;
  std::vector<Mat4> Z;
  double max_gram_defect = 0.0;  // |Z^T g Z - 1|_inf over nodes
};

FramePath levi_civita_transport(const MetricChart& chart, const Curve& curve, int n);

// Scalar field with analytic gradient and Hessian (for the functional Laplacian).
struct ScalarField {
  std::string name;
  std::function<double(const Vec4&)> f;
  std::function<Vec4(const Vec4&)> grad;
  std::function<Mat4(const Vec4&)> hess;
};

ScalarField squared_radius_field();
ScalarField coordinate_field(int mu);

// Delta f = g^{mu nu} (d_mu d_nu f - Gamma^la_{mu nu} d_la f).
double laplace_beltrami(const MetricChart& chart, const ScalarField& field, const Vec4& x);

// length of the curve in the chart metric (Simpson on an n-grid).
double curve_length(const MetricChart& chart, const Curve& curve, int n = 400);

}  // namespace holonomy
