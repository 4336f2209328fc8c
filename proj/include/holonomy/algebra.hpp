#pragma once

#include <array>
#include <vector>

#include "holonomy/constants.hpp"
#include "holonomy/types.hpp"

namespace holonomy {

// Lie-algebra / Lie-group valued matrix with a semantic tag. `algebra` entries
// are anti-Hermitian and traceless, `group` entries unitary; `general` covers
// products like U F U' that are neither but still live in N x N blocks.
struct GaugeElement {
  enum class Flavor { algebra, group, general };

  GaugeMatrix entries;
  Flavor flavor = Flavor::general;

  int dim() const { return static_cast<int>(entries.rows()); }
};

// max of the anti-Hermitian defect |m + m^dagger|_inf and the trace defect.
double algebra_defect(const GaugeMatrix& m);
// |m^dagger m - 1|_inf.
double unitary_defect(const GaugeMatrix& m);

// Builders re-project: algebra via (m - m^dagger)/2 minus the trace part,
// group via the polar factor of the SVD. Constructors of downstream types call
// these, so round-off never accumulates into invariant violations.
GaugeElement make_algebra(const GaugeMatrix& m);
GaugeElement make_group(const GaugeMatrix& m);
GaugeElement make_general(GaugeMatrix m);

// exp of an anti-Hermitian matrix, exactly unitary up to the eigensolver:
// X = -iH with H Hermitian, exp(X) = V diag(exp(-i lambda)) V^dagger.
GaugeMatrix exp_anti_hermitian(const GaugeMatrix& x);

// Antisymmetric real 4x4 (element of so(4)). The constructor antisymmetrizes,
// so a + a^T = 0 holds exactly in floating point.
class So4Element {
 public:
  So4Element() : m_(Mat4::Zero()) {}
  explicit So4Element(const Mat4& m) : m_(0.5 * (m - m.transpose().eval())) {}

  const Mat4& matrix() const { return m_; }
  double operator()(int mu, int nu) const { return m_(mu, nu); }
  double frobenius_norm() const { return m_.norm(); }

  So4Element operator+(const So4Element& o) const { return wrap(m_ + o.m_); }
  So4Element operator-(const So4Element& o) const { return wrap(m_ - o.m_); }
  So4Element operator*(double s) const { return wrap(s * m_); }

 private:
  static So4Element wrap(const Mat4& m) {
    So4Element a;
    a.m_ = m;  // already antisymmetric: linear combinations preserve it exactly
    return a;
  }
  Mat4 m_;
};

// (*a)_{mu nu} = 1/2 epsilon_{mu nu la ka} a_{la ka}; an involution on 2-forms.
So4Element index_hodge(const So4Element& a);

// Bases of the two commuting su(2) summands of so(4). Each element has
// Frobenius norm 2; the left family spans the +1 index-Hodge eigenspace, the
// right family the -1 eigenspace.
const std::array<So4Element, 3>& left_basis();
const std::array<So4Element, 3>& right_basis();

// P_L a = (a + *a)/2, P_R a = (a - *a)/2; orthogonal complements.
So4Element project_left(const So4Element& a);
So4Element project_right(const So4Element& a);

// W(t) = exp(t a) via the matrix exponential; orthogonal to kOrthogonalTol.
Mat4 exp_so4(const So4Element& a, double t);

// One-parameter rotation path W(t) = exp(t * generator). For these paths the
// logarithmic derivative W^-1 W' is the generator at every t.
class RotationPath {
 public:
  RotationPath() = default;
  explicit RotationPath(So4Element generator) : gen_(generator) {}

  Mat4 at(double t) const { return exp_so4(gen_, t); }
  const So4Element& log_derivative() const { return gen_; }
  bool is_identity() const { return gen_.matrix().isZero(0.0); }

 private:
  So4Element gen_;
};

// Antisymmetric 4x4 block of gauge matrices: curvature components F_{mu nu}
// and the singular kernel K^S both live here. set() writes both triangles.
class TwoFormBlock {
 public:
  explicit TwoFormBlock(int n_color);

  void set(int mu, int nu, const GaugeMatrix& v);
  const GaugeMatrix& at(int mu, int nu) const { return block_[mu * 4 + nu]; }
  int n_color() const { return n_; }

  TwoFormBlock operator+(const TwoFormBlock& o) const;
  TwoFormBlock operator-(const TwoFormBlock& o) const;
  TwoFormBlock operator*(double s) const;
  double norm() const;  // Frobenius over all component matrices

 private:
  int n_;
  std::array<GaugeMatrix, 16> block_;
};

// (*B)_{mu nu} = 1/2 epsilon_{mu nu la ka} B_{la ka}, entrywise in color.
TwoFormBlock index_hodge(const TwoFormBlock& b);

// B_pm = (B -+... ) self-dual / anti-self-dual halves: (B + *B)/2 and (B - *B)/2.
TwoFormBlock self_dual_half(const TwoFormBlock& b);
TwoFormBlock anti_self_dual_half(const TwoFormBlock& b);

// sum_{mu nu} a_{mu nu} B_{nu mu}: the matrix trace over the index pair with
// values in the gauge algebra. tr(e1 . e1-pattern) = -4.
GaugeMatrix so4_pairing(const So4Element& a, const TwoFormBlock& b);

}  // namespace holonomy
