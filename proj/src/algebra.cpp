#include "holonomy/algebra.hpp"

#include <cassert>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace holonomy {

double algebra_defect(const GaugeMatrix& m) {
  const double anti = (m + m.adjoint()).cwiseAbs().maxCoeff();
  const double tr = std::abs(m.trace());
  return std::max(anti, tr);
}

double unitary_defect(const GaugeMatrix& m) {
  const GaugeMatrix g = m.adjoint() * m;
  return (g - GaugeMatrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

GaugeElement make_algebra(const GaugeMatrix& m) {
  assert(m.rows() == m.cols());
  GaugeMatrix a = 0.5 * (m - m.adjoint().eval());
  a -= (a.trace() / static_cast<double>(m.rows())) * GaugeMatrix::Identity(m.rows(), m.cols());
  assert(algebra_defect(a) <= kAlgebraTol);
  return {a, GaugeElement::Flavor::algebra};
}

GaugeElement make_group(const GaugeMatrix& m) {
  assert(m.rows() == m.cols());
  // polar factor: m = W Sigma V^dagger -> closest unitary is W V^dagger
  Eigen::JacobiSVD<GaugeMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  GaugeMatrix u = svd.matrixU() * svd.matrixV().adjoint();
  assert(unitary_defect(u) <= kUnitaryTol);
  return {u, GaugeElement::Flavor::group};
}

GaugeElement make_general(GaugeMatrix m) {
  return {std::move(m), GaugeElement::Flavor::general};
}

GaugeMatrix exp_anti_hermitian(const GaugeMatrix& x) {
  const GaugeMatrix h = Complex(0, 1) * x;  // Hermitian
  Eigen::SelfAdjointEigenSolver<GaugeMatrix> es(h);
  const auto& lam = es.eigenvalues();
  GaugeMatrix d = GaugeMatrix::Zero(x.rows(), x.cols());
  for (int k = 0; k < lam.size(); ++k)
    d(k, k) = std::exp(Complex(0, -lam[k]));
  return es.eigenvectors() * d * es.eigenvectors().adjoint();
}

So4Element index_hodge(const So4Element& a) {
  Mat4 out = Mat4::Zero();
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = mu + 1; nu < 4; ++nu) {
      double s = 0.0;
      for (int la = 0; la < 4; ++la)
        for (int ka = 0; ka < 4; ++ka) {
          const double e = epsilon4(mu, nu, la, ka);
          if (e != 0.0) s += 0.5 * e * a(la, ka);
        }
      out(mu, nu) = s;
      out(nu, mu) = -s;
    }
  return So4Element(out);
}

namespace {

// ( 0 -b -c -d ; b 0 -d c ; c d 0 -b ; d -c b 0 )
Mat4 left_matrix(double b, double c, double d) {
  Mat4 m;
  m << 0, -b, -c, -d,
       b,  0, -d,  c,
       c,  d,  0, -b,
       d, -c,  b,  0;
  return m;
}

// ( 0 -b -c -d ; b 0 d -c ; c -d 0 b ; d c -b 0 )
Mat4 right_matrix(double b, double c, double d) {
  Mat4 m;
  m << 0, -b, -c, -d,
       b,  0,  d, -c,
       c, -d,  0,  b,
       d,  c, -b,  0;
  return m;
}

}  // namespace

const std::array<So4Element, 3>& left_basis() {
  static const std::array<So4Element, 3> basis = {
      So4Element(left_matrix(1, 0, 0)),
      So4Element(left_matrix(0, 1, 0)),
      So4Element(left_matrix(0, 0, 1))};
  return basis;
}

const std::array<So4Element, 3>& right_basis() {
  static const std::array<So4Element, 3> basis = {
      So4Element(right_matrix(1, 0, 0)),
      So4Element(right_matrix(0, 1, 0)),
      So4Element(right_matrix(0, 0, 1))};
  return basis;
}

So4Element project_left(const So4Element& a) {
  return (a + index_hodge(a)) * 0.5;
}

So4Element project_right(const So4Element& a) {
  return (a - index_hodge(a)) * 0.5;
}

Mat4 exp_so4(const So4Element& a, double t) {
  const Mat4 m = (t * a.matrix()).exp();
  assert((m.transpose() * m - Mat4::Identity()).cwiseAbs().maxCoeff() <= kOrthogonalTol);
  return m;
}

TwoFormBlock::TwoFormBlock(int n_color) : n_(n_color) {
  for (auto& b : block_) b = GaugeMatrix::Zero(n_, n_);
}

void TwoFormBlock::set(int mu, int nu, const GaugeMatrix& v) {
  assert(mu != nu);
  block_[mu * 4 + nu] = v;
  block_[nu * 4 + mu] = -v;
}

TwoFormBlock TwoFormBlock::operator+(const TwoFormBlock& o) const {
  TwoFormBlock out(n_);
  for (int k = 0; k < 16; ++k) out.block_[k] = block_[k] + o.block_[k];
  return out;
}

TwoFormBlock TwoFormBlock::operator-(const TwoFormBlock& o) const {
  TwoFormBlock out(n_);
  for (int k = 0; k < 16; ++k) out.block_[k] = block_[k] - o.block_[k];
  return out;
}

TwoFormBlock TwoFormBlock::operator*(double s) const {
  TwoFormBlock out(n_);
  for (int k = 0; k < 16; ++k) out.block_[k] = s * block_[k];
  return out;
}

double TwoFormBlock::norm() const {
  double s = 0.0;
  for (const auto& b : block_) s += b.squaredNorm();
  return std::sqrt(s);
}

TwoFormBlock index_hodge(const TwoFormBlock& b) {
  TwoFormBlock out(b.n_color());
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = mu + 1; nu < 4; ++nu) {
      GaugeMatrix s = GaugeMatrix::Zero(b.n_color(), b.n_color());
      for (int la = 0; la < 4; ++la)
        for (int ka = 0; ka < 4; ++ka) {
          const double e = epsilon4(mu, nu, la, ka);
          if (e != 0.0) s += 0.5 * e * b.at(la, ka);
        }
      out.set(mu, nu, s);
    }
  return out;
}

TwoFormBlock self_dual_half(const TwoFormBlock& b) {
  return (b + index_hodge(b)) * 0.5;
}

TwoFormBlock anti_self_dual_half(const TwoFormBlock& b) {
  return (b - index_hodge(b)) * 0.5;
}

GaugeMatrix so4_pairing(const So4Element& a, const TwoFormBlock& b) {
  GaugeMatrix s = GaugeMatrix::Zero(b.n_color(), b.n_color());
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu) {
      const double c = a(mu, nu);
      if (c != 0.0) s += c * b.at(nu, mu);
    }
  return s;
}

}  // namespace holonomy
