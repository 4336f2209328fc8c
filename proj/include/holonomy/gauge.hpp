#pragma once

#include <array>
#include <functional>
#include <string>

#include "holonomy/algebra.hpp"
#include "holonomy/geometry.hpp"
#include "holonomy/types.hpp"

namespace holonomy {

using ConnectionValue = std::array<GaugeMatrix, 4>;             // A_mu(x)
using ConnectionJet = std::array<std::array<GaugeMatrix, 4>, 4>;  // [la][mu] = d_la A_mu

// Connection 1-form A on R^4 with values in su(N). `dA` is the analytic
// derivative closure; when absent, Richardson-extrapolated central
// differences with step fd_step stand in. `derivative_is_fd` records that
// fallback so downstream derivative steps can widen their own stencils.
struct ConnectionField {
  std::string name;
  int n_color = 2;
  std::function<ConnectionValue(const Vec4&)> A;
  std::function<ConnectionJet(const Vec4&)> dA;
  double fd_step = 1e-5;
  bool derivative_is_fd = false;
};

ConnectionValue connection_at(const ConnectionField& field, const Vec4& x);
ConnectionJet connection_derivative_at(const ConnectionField& field, const Vec4& x);

// |analytic dA - FD dA|_inf relative to the jet scale; 0 for FD-backed fields.
double derivative_defect(const ConnectionField& field, const Vec4& x);

// F_{mu nu} = d_mu A_nu - d_nu A_mu + [A_mu, A_nu].
TwoFormBlock curvature(const ConnectionField& field, const Vec4& x);

// partial derivatives dF[la] = d_la F by Richardson central differences of F.
std::array<TwoFormBlock, 4> curvature_derivative(const ConnectionField& field, const Vec4& x);

// nabla_la F_{mu nu} = d_la F + [A_la, F_{mu nu}]
//                      - Gamma^ka_{la mu} F_{ka nu} - Gamma^ka_{la nu} F_{mu ka}.
std::array<TwoFormBlock, 4> covariant_curvature_derivative(const ConnectionField& field,
                                                           const MetricChart& chart,
                                                           const Vec4& x);

// (D_A^* F)_nu = -g^{mu la} nabla_la F_{mu nu}; zero exactly when A is Yang-Mills.
ConnectionValue ym_residual(const ConnectionField& field, const MetricChart& chart,
                            const Vec4& x);

// (F_plus, F_minus) = ((F + *F)/2, (F - *F)/2) with the chart's metric Hodge.
std::pair<TwoFormBlock, TwoFormBlock> sd_split(const ConnectionField& field,
                                               const MetricChart& chart, const Vec4& x);

// Ball quadrature spec for the action: graded radial Gauss-Legendre panels
// times a hyperspherical angle product rule.
struct BallSpec {
  Vec4 center = Vec4::Zero();
  double radius = 20.0;
  int n_radial = 24;  // per panel; panels graded toward the center
  int n_psi = 12;
  int n_theta = 10;
  int n_phi = 16;
};

struct ActionEstimate {
  double value = 0.0;
  double tail_estimate = 0.0;  // crude r^-8 continuation of the boundary density
};

// S = -1/2 int tr(F_{mu nu} F^{mu nu}) sqrt(det g) d^4x over the ball.
ActionEstimate ym_action(const ConnectionField& field, const MetricChart& chart,
                         const BallSpec& spec);

// Smooth gauge transform x -> psi(x) in U(N). Analytic dpsi/ddpsi closures
// keep the transformed field's derivatives exact; either may be absent.
struct GaugeTransform {
  std::function<GaugeMatrix(const Vec4&)> psi;
  std::function<std::array<GaugeMatrix, 4>(const Vec4&)> dpsi;
  std::function<std::array<std::array<GaugeMatrix, 4>, 4>(const Vec4&)> ddpsi;
  double fd_step = 1e-5;
};

GaugeMatrix transform_at(const GaugeTransform& t, const Vec4& x);
std::array<GaugeMatrix, 4> transform_derivative_at(const GaugeTransform& t, const Vec4& x);

// psi(x) = exp(amp * sin(w . x) * X) for a fixed anti-Hermitian X; fully analytic.
GaugeTransform sine_gauge_transform(const GaugeMatrix& x_gen, const Vec4& w, double amp);

// A' = psi^-1 A psi + psi^-1 dpsi; curvature transforms by conjugation.
ConnectionField gauge_transformed(const ConnectionField& field, const GaugeTransform& t);

enum class Orientation { antidual, dual };  // F self-dual part zero / nonzero half

ConnectionField zero_connection(int n_color = 2);
// A_mu(x) = i c_{mu nu} x^nu times the diagonal generator (sigma_3 at N=2,
// the 1x1 identity at N=1 where tracelessness is waived).
ConnectionField abelian_constant(const So4Element& c, int n_color = 2);
// Regular-gauge instanton family; the 't Hooft-symbol sign variant matching
// the requested duality under the ambient epsilon convention is detected at
// runtime rather than hard-coded.
ConnectionField bpst(double rho, const Vec4& center, Orientation orientation);

// Compactly supported smooth su(N)-valued 1-form bump added to a base field:
// eps * beta(x) b_mu with beta = exp(1 - R^2/(R^2 - |x - x0|^2)) inside the
// ball of radius R and 0 outside.
struct BumpSpec {
  Vec4 center = Vec4::Zero();
  double radius = 2.0;
  std::array<GaugeMatrix, 4> b;  // constant algebra-valued components
};
BumpSpec default_bump(int n_color = 2);
ConnectionField perturbed(const ConnectionField& base, double eps, const BumpSpec& bump);

// factory by name for the config layer: zero | abelian_constant | bpst | perturbed.
ConnectionField builtin_field(const std::string& name, double rho, const Vec4& center,
                              Orientation orientation, const So4Element& c, double eps);

}  // namespace holonomy
