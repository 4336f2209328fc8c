#pragma once

#include <functional>
#include <vector>

#include "holonomy/gauge.hpp"
#include "holonomy/geometry.hpp"
#include "holonomy/types.hpp"

namespace holonomy {

struct TransportOptions {
  enum class Scheme { rk4, magnus2 };
  int n = 2000;               // target interval count across the whole curve
  Scheme scheme = Scheme::rk4;
  int reproject_every = 50;   // polar reprojection cadence (steps)
  double unitarity_tol = 1e-6;  // allowed drift between reprojections
};

// Parallel transport along one curve: U[k] = U_{t_k, 0} on the curve grid,
// plus the Levi-Civita frame Z at the same nodes when solved with a chart.
struct TransportResult {
  Grid grid;
  std::vector<GaugeMatrix> U;
  std::vector<Mat4> Z;
  int n_color = 0;
  double max_unitarity_defect = 0.0;
  double max_gram_defect = 0.0;

  const GaugeMatrix& at(int k) const { return U[k]; }
  // U_{t_to, t_from}; exact identity when both indices coincide.
  GaugeMatrix between(int k_to, int k_from) const;
};

// dU/dt = -A_mu(gamma) gammadot^mu U, U(0) = 1; frames stay the identity.
TransportResult parallel_transport(const ConnectionField& field, const Curve& curve,
                                   const TransportOptions& opts = {});

// Same solve with the chart's parallel frame co-integrated (Z' = -Gamma(Z, gammadot)).
TransportResult parallel_transport_framed(const ConnectionField& field, const MetricChart& chart,
                                          const Curve& curve, const TransportOptions& opts = {});

// One accumulator Y_j(t) = int_0^t U_{t,s} G_j(s) (source_j)(s) ds co-integrated
// with U (and Z): Y_j' = -A(gammadot) Y_j + G_j(t) * source. The factor closure
// is produced once per quadrature time and contracted with the stage frame.
struct SandwichTerm {
  std::function<std::function<GaugeMatrix(const Mat4& frame)>(const CurveSegment&, double)>
      factor;
  int source = -1;  // -1: the transport U itself; k >= 0: accumulator k (nested integrals)
};

// Returns Y_j(1) for each term; optionally exposes the underlying transport.
std::vector<GaugeMatrix> sandwich_integrals(const ConnectionField& field,
                                            const MetricChart& chart, const Curve& curve,
                                            const std::vector<SandwichTerm>& terms,
                                            const TransportOptions& opts = {},
                                            TransportResult* out_transport = nullptr);

// d_h U_{1,0} = -int_0^1 U_{1,t} F(gamma(t))<h~(t), gammadot(t)> U_{t,0} dt with
// h~ = sum_mu Z_mu h^mu the frame realization of the direction field.
GaugeMatrix first_derivative(const ConnectionField& field, const MetricChart& chart,
                             const Curve& curve, const DirectionField& h,
                             const TransportOptions& opts = {});

struct FdDerivative {
  GaugeMatrix value;
  double noise_floor = 0.0;  // Richardson residual |D(eps/2) - D(eps)| / 3
};

// Finite-difference derivatives of U_{1,0} under gamma -> gamma + eps h (flat
// charts only: the shift is a chart-level addition with the constant frame).
// order 1: central difference in one direction; order 2: mixed central
// difference estimating <D^2 U h1, h2>. Both Richardson-extrapolate over
// {eps, eps/2}.
FdDerivative fd_directional_derivative(const ConnectionField& field, const Curve& curve,
                                       const DirectionField& h1, int order = 1,
                                       const DirectionField* h2 = nullptr, double eps = 1e-3,
                                       const TransportOptions& opts = {});

// |U_{1,0}(gamma o sigma) - U_{1,0}(gamma)|_F: parametrization invariance probe.
double reparametrize_check(const ConnectionField& field, const Curve& curve,
                           const TimeChange& sigma, const TransportOptions& opts = {});

// Curve shifted by a direction field: gamma + eps h (flat-chart perturbation).
Curve shifted_curve(const Curve& base, const DirectionField& h, double eps);

}  // namespace holonomy
