#pragma once

#include <array>
#include <string>
#include <vector>

#include "holonomy/algebra.hpp"
#include "holonomy/gauge.hpp"
#include "holonomy/geometry.hpp"
#include "holonomy/transport.hpp"
#include "json.hpp"

namespace holonomy {

// The two local kernels of the second derivative of parallel transport,
// materialized at the nodes of a transport grid. The (mu, nu) symmetry of the
// smooth kernel and antisymmetry of the singular one hold exactly because the
// setters write both triangles.
class KernelPair {
 public:
  KernelPair(Grid grid, int n_color);

  const Grid& grid() const { return grid_; }
  int n_color() const { return n_; }

  const GaugeMatrix& levy_at(int k, int mu, int nu) const { return levy_[k][4 * mu + nu]; }
  const TwoFormBlock& singular_at(int k) const { return singular_[k]; }

  void set_levy(int k, int mu, int nu, const GaugeMatrix& v);  // writes (mu,nu) and (nu,mu)
  void set_singular(int k, const TwoFormBlock& b) { singular_[k] = b; }

 private:
  Grid grid_;
  int n_;
  std::vector<std::array<GaugeMatrix, 16>> levy_;
  std::vector<TwoFormBlock> singular_;
};

// K^L_{mu nu}(t) = 1/2 U_{1,t}(-nabla_{Z_mu}F<Z_nu,gammadot> - nabla_{Z_nu}F<Z_mu,gammadot>)U_{t,0}
// K^S_{mu nu}(t) = U_{1,t} F<Z_mu, Z_nu> U_{t,0}
KernelPair second_derivative_kernels(const ConnectionField& field, const MetricChart& chart,
                                     const Curve& curve, const TransportOptions& opts = {});

// int_0^1 sum_mu K^L_{mu mu}(t) dt (composite Simpson on the kernel grid).
GaugeElement agv_levy_trace(const KernelPair& kernels);

// The rotated trace: int tr K^L - int tr(P_L(L_W) K^S_+) - int tr(P_R(L_W) K^S_-),
// where L_W is the (constant) logarithmic derivative of the rotation path and
// K^S_+/- are the dual halves of the frame-realized singular kernel.
GaugeElement modified_levy_trace(const KernelPair& kernels, const RotationPath& rotation);

// One Laplacian evaluation with its error-budget metadata.
struct LaplacianReport {
  GaugeMatrix value;
  std::string route;               // closed_form | kernel_trace | fd_oracle
  double norm = 0.0;               // Frobenius norm of value
  double scale = 1.0;              // curve length x max_t |F(gamma(t))|_F
  double yang_mills_norm = 0.0;    // |int U_{1,t} (D_A*F)(gammadot) U_{t,0} dt|
  double left_pairing_norm = 0.0;  // |int U_{1,t} tr(P_L(L_W) F_+) U_{t,0} dt|
  double right_pairing_norm = 0.0;
  int quadrature_n = 0;
  std::string quadrature_scheme;
  double fit_condition = 0.0;    // fd_oracle: condition number of the scaled design matrix
  double kernel_residual = 0.0;  // fd_oracle: fitted-vs-analytic relative L2 mismatch
};

nlohmann::json to_json(const LaplacianReport& report);

// Delta_L^W U_{1,0} = kYangMillsTermSign int U_{1,t}(D_A*F)(gammadot)U_{t,0}dt
//                     - int U_{1,t} tr(L_W F)(t) U_{t,0} dt,
// with the pairing term split into its P_L/F_+ and P_R/F_- halves. All three
// integrals are co-integrated with the transport itself.
LaplacianReport laplacian_closed_form(const ConnectionField& field, const MetricChart& chart,
                                      const Curve& curve, const RotationPath& rotation,
                                      const TransportOptions& opts = {});

// modified_levy_trace(second_derivative_kernels(...), rotation): the same value
// through materialized kernels and Simpson weights, an independent quadrature path.
LaplacianReport laplacian_kernel_route(const ConnectionField& field, const MetricChart& chart,
                                       const Curve& curve, const RotationPath& rotation,
                                       const TransportOptions& opts = {});

// Full bilinear form <D^2 U h1, h2> by quadrature: the iterated (Volterra)
// double integral plus the local K^L/K^S terms, co-integrated. Flat chart:
// the curve shift gamma + eps h is a chart-level addition there.
GaugeMatrix second_derivative_bilinear(const ConnectionField& field, const Curve& curve,
                                       const DirectionField& h1, const DirectionField& h2,
                                       const TransportOptions& opts = {});

// Estimated second-derivative kernels (flat chart only): probe <D^2 U h1, h2>
// by order-2 finite differences over the {sin(k pi t), k <= n_max} plus
// {t(1-t) P_j(2t-1), j <= 3} axis-aligned family, subtract the analytic
// Volterra part, and least-squares fit K^L/K^S in a shifted Legendre basis.
// Raises FitError when the design matrix is numerically rank-deficient.
struct KernelFit {
  KernelPair kernels;  // fitted kernels, materialized on the standard grid
  double condition;    // condition number of the equilibrated design matrix
  int basis;           // Legendre modes per kernel component
};
KernelFit second_derivative_kernels_fd(const ConnectionField& field, const Curve& curve,
                                       int n_max = 6, const TransportOptions& opts = {});

// Modified trace of the fitted kernels, reported next to the fitted-vs-analytic
// kernel residual so the caller can judge how much to trust the value.
LaplacianReport laplacian_fd_route(const ConnectionField& field, const Curve& curve,
                                   const RotationPath& rotation, int n_max = 6,
                                   const TransportOptions& opts = {});

// Laplacian of the integral functional gamma -> int_0^1 f(gamma(t)) dt,
// evaluated two ways: directly as int Laplace-Beltrami(f)(gamma(t)) dt and as
// the trace of the frame-Hessian kernel nabla^2 f<Z_mu, Z_nu>.
struct FunctionalLaplacian {
  double direct = 0.0;
  double kernel_route = 0.0;
  double discrepancy = 0.0;
};

FunctionalLaplacian integral_functional_laplacian(const MetricChart& chart, const ScalarField& f,
                                                  const Curve& curve, int n = 400);

// Truncation diagnostic J(r) = U_{1,r}(gamma) Delta_L^W U_{1,0}(gamma^r) on an
// r grid, with a one-sided Richardson derivative at r = 1 compared against the
// ledger target kYangMillsTermSign (D_A*F)(gammadot(1)) U_{1,0}(gamma).
struct DiagnosticJ {
  std::vector<double> r;
  std::vector<GaugeMatrix> J;
  double max_norm = 0.0;  // max_r |J(r)|_F over the requested grid
  double scale = 1.0;     // curve length x max |F| of the untruncated curve
  GaugeMatrix derivative_at_one;
  GaugeMatrix expected_derivative;
  double derivative_residual = 0.0;  // |J'(1) - expected|_F
  double expected_norm = 0.0;
};

DiagnosticJ diagnostic_J(const ConnectionField& field, const MetricChart& chart,
                         const Curve& curve, const RotationPath& rotation,
                         const std::vector<double>& r_grid, double fd_step = 1e-2,
                         const TransportOptions& opts = {});

// Squeeze-curve recovery of the conjugated pointwise trace
//   U_{r,0}^{-1} tr(a F(gamma(r))) U_{r,0}
// as the eps -> 0 limit of I_1(eps) = -U_{r,0}^{-1} Delta_L^W U(gamma_{r,eps})
// with W = exp(t a); the error decays linearly in eps.
struct RecoveryReport {
  std::vector<double> eps;
  std::vector<GaugeMatrix> conjugated;  // I_1(eps), same order as eps
  GaugeMatrix extrapolated;             // 2 I_1(eps_min) - I_1(2 eps_min)
  GaugeMatrix direct;
  double limit_error = 0.0;  // |extrapolated - direct|_F
  double direct_norm = 0.0;
  double rate = 0.0;  // least-squares slope of log|I_1(eps) - direct| vs log eps
};

RecoveryReport pointwise_trace_recovery(const ConnectionField& field, const MetricChart& chart,
                                        const Curve& curve, const So4Element& a, double r,
                                        const std::vector<double>& eps_schedule,
                                        const TransportOptions& opts = {});

}  // namespace holonomy
