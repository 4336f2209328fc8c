#include "holonomy/gauge.hpp"

#include <cassert>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace holonomy {

namespace {

using namespace std::complex_literals;

const std::array<GaugeMatrix, 3>& su2_generators() {
  // T_a = -i sigma_a / 2, [T_a, T_b] = eps_abc T_c
  static const std::array<GaugeMatrix, 3> T = [] {
    std::array<GaugeMatrix, 3> t;
    for (auto& m : t) m = GaugeMatrix::Zero(2, 2);
    t[0] << 0, -0.5i, -0.5i, 0;
    t[1] << 0, -0.5, 0.5, 0;
    t[2] << -0.5i, 0, 0, 0.5i;
    return t;
  }();
  return T;
}

Mat4 thooft_matrix(int a, double sign) {
  // spatial part eps_{a i j}, mixed part +-sign on the (a, 3) pair
  Mat4 m = Mat4::Zero();
  const int i1 = (a + 1) % 3, i2 = (a + 2) % 3;
  m(i1, i2) = 1.0;
  m(i2, i1) = -1.0;
  m(a, 3) = sign;
  m(3, a) = -sign;
  return m;
}

// decide which 't Hooft sign variant is anti-self-dual under the ambient
// epsilon convention by measuring the split of its index pattern
double antidual_thooft_sign() {
  static const double s = [] {
    for (double cand : {-1.0, +1.0}) {
      TwoFormBlock b(2);
      for (int a = 0; a < 3; ++a) {
        const Mat4 eta = thooft_matrix(a, cand);
        for (int mu = 0; mu < 4; ++mu)
          for (int nu = mu + 1; nu < 4; ++nu)
            if (eta(mu, nu) != 0.0)
              b.set(mu, nu, GaugeMatrix(b.at(mu, nu) + eta(mu, nu) * su2_generators()[a]));
      }
      if (self_dual_half(b).norm() <= 1e-12 * b.norm()) return cand;
    }
    throw Error("neither 't Hooft sign variant is anti-self-dual; epsilon convention broken");
  }();
  return s;
}

ConnectionValue zero_value(int n) {
  ConnectionValue v;
  for (auto& m : v) m = GaugeMatrix::Zero(n, n);
  return v;
}

ConnectionJet zero_jet(int n) {
  ConnectionJet j;
  for (auto& row : j)
    for (auto& m : row) m = GaugeMatrix::Zero(n, n);
  return j;
}

ConnectionJet fd_jet(const ConnectionField& field, const Vec4& x, double h) {
  ConnectionJet jet = zero_jet(field.n_color);
  for (int la = 0; la < 4; ++la) {
    Vec4 e = Vec4::Zero();
    auto diff = [&](double hh) {
      e[la] = hh;
      const ConnectionValue p = field.A(x + e);
      const ConnectionValue m = field.A(x - e);
      std::array<GaugeMatrix, 4> d;
      for (int mu = 0; mu < 4; ++mu) d[mu] = (p[mu] - m[mu]) / (2.0 * hh);
      return d;
    };
    const auto d1 = diff(h);
    const auto d2 = diff(h / 2.0);
    for (int mu = 0; mu < 4; ++mu) jet[la][mu] = (4.0 * d2[mu] - d1[mu]) / 3.0;
  }
  return jet;
}

// bump profile beta(s) = exp(1 - R^2/(R^2 - s)) for s = |y|^2 < R^2, else 0
double bump_value(double s, double r2) {
  if (s >= r2) return 0.0;
  return std::exp(1.0 - r2 / (r2 - s));
}

double bump_slope(double s, double r2) {  // d beta / ds
  if (s >= r2) return 0.0;
  return -bump_value(s, r2) * r2 / ((r2 - s) * (r2 - s));
}

std::vector<std::pair<double, double>> gauss_legendre(int n) {
  // Newton iteration on P_n; nodes/weights on [-1, 1]
  std::vector<std::pair<double, double>> nw(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nw[i] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
  }
  return nw;
}

double action_density(const ConnectionField& field, const MetricChart& chart, const Vec4& x) {
  const TwoFormBlock f = curvature(field, x);
  const Mat4 ginv = metric_at(chart, x).inverse();
  // F^{mu nu} = g^{mu al} g^{nu be} F_{al be}
  double s = 0.0;
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu) {
      GaugeMatrix up = GaugeMatrix::Zero(field.n_color, field.n_color);
      for (int al = 0; al < 4; ++al)
        for (int be = 0; be < 4; ++be) {
          const double c = ginv(mu, al) * ginv(nu, be);
          if (c != 0.0) up += c * f.at(al, be);
        }
      s += -0.5 * (f.at(mu, nu) * up).trace().real();
    }
  return s;
}

}  // namespace

ConnectionValue connection_at(const ConnectionField& field, const Vec4& x) {
  ConnectionValue v = field.A(x);
  for (const auto& m : v) assert(algebra_defect(m) <= 1e-8 || field.n_color == 1);
  return v;
}

ConnectionJet connection_derivative_at(const ConnectionField& field, const Vec4& x) {
  if (field.dA) return field.dA(x);
  return fd_jet(field, x, field.fd_step);
}

double derivative_defect(const ConnectionField& field, const Vec4& x) {
  if (!field.dA) return 0.0;
  const ConnectionJet exact = field.dA(x);
  const ConnectionJet fd = fd_jet(field, x, field.fd_step);
  double num = 0.0, den = 1.0;
  for (int la = 0; la < 4; ++la)
    for (int mu = 0; mu < 4; ++mu) {
      num = std::max(num, (exact[la][mu] - fd[la][mu]).cwiseAbs().maxCoeff());
      den = std::max(den, exact[la][mu].cwiseAbs().maxCoeff());
    }
  return num / den;
}

TwoFormBlock curvature(const ConnectionField& field, const Vec4& x) {
  const ConnectionValue a = field.A(x);
  const ConnectionJet da = connection_derivative_at(field, x);
  TwoFormBlock f(field.n_color);
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = mu + 1; nu < 4; ++nu)
      f.set(mu, nu, GaugeMatrix(da[mu][nu] - da[nu][mu] + a[mu] * a[nu] - a[nu] * a[mu]));
  return f;
}

std::array<TwoFormBlock, 4> curvature_derivative(const ConnectionField& field, const Vec4& x) {
  // FD-backed fields get a wider stencil so their own FD noise stays below
  // the truncation budget of this second differentiation
  const double h = field.derivative_is_fd ? 1e-3 : 1e-4;
  std::array<TwoFormBlock, 4> out{TwoFormBlock(field.n_color), TwoFormBlock(field.n_color),
                                  TwoFormBlock(field.n_color), TwoFormBlock(field.n_color)};
  for (int la = 0; la < 4; ++la) {
    Vec4 e = Vec4::Zero();
    auto diff = [&](double hh) {
      e[la] = hh;
      return (curvature(field, x + e) - curvature(field, x - e)) * (1.0 / (2.0 * hh));
    };
    const TwoFormBlock d1 = diff(h);
    const TwoFormBlock d2 = diff(h / 2.0);
    out[la] = d2 * (4.0 / 3.0) - d1 * (1.0 / 3.0);
  }
  return out;
}

std::array<TwoFormBlock, 4> covariant_curvature_derivative(const ConnectionField& field,
                                                           const MetricChart& chart,
                                                           const Vec4& x) {
  std::array<TwoFormBlock, 4> grad = curvature_derivative(field, x);
  const ConnectionValue a = field.A(x);
  const TwoFormBlock f = curvature(field, x);
  const auto gamma = chart.flat ? std::array<Mat4, 4>{Mat4::Zero(), Mat4::Zero(), Mat4::Zero(),
                                                      Mat4::Zero()}
                                : christoffel(chart, x);
  for (int la = 0; la < 4; ++la) {
    TwoFormBlock cov(field.n_color);
    for (int mu = 0; mu < 4; ++mu)
      for (int nu = mu + 1; nu < 4; ++nu) {
        GaugeMatrix v = grad[la].at(mu, nu) + a[la] * f.at(mu, nu) - f.at(mu, nu) * a[la];
        for (int ka = 0; ka < 4; ++ka)
          v -= gamma[ka](la, mu) * f.at(ka, nu) + gamma[ka](la, nu) * f.at(mu, ka);
        cov.set(mu, nu, v);
      }
    grad[la] = cov;
  }
  return grad;
}

ConnectionValue ym_residual(const ConnectionField& field, const MetricChart& chart,
                            const Vec4& x) {
  const auto cov = covariant_curvature_derivative(field, chart, x);
  const Mat4 ginv = metric_at(chart, x).inverse();
  ConnectionValue out = zero_value(field.n_color);
  for (int nu = 0; nu < 4; ++nu)
    for (int mu = 0; mu < 4; ++mu)
      for (int la = 0; la < 4; ++la)
        if (ginv(mu, la) != 0.0) out[nu] -= ginv(mu, la) * cov[la].at(mu, nu);
  return out;
}

std::pair<TwoFormBlock, TwoFormBlock> sd_split(const ConnectionField& field,
                                               const MetricChart& chart, const Vec4& x) {
  const TwoFormBlock f = curvature(field, x);
  const TwoFormBlock star = metric_hodge(chart, x, f);
  return {(f + star) * 0.5, (f - star) * 0.5};
}

ActionEstimate ym_action(const ConnectionField& field, const MetricChart& chart,
                         const BallSpec& spec) {
  const double R = spec.radius;
  const std::array<double, 5> panel = {0.0, R / 64.0, R / 16.0, R / 4.0, R};
  const auto rad = gauss_legendre(spec.n_radial);
  const auto psi_nw = gauss_legendre(spec.n_psi);
  const auto theta_nw = gauss_legendre(spec.n_theta);

  // hyperspherical angle table: direction and S^3 measure weight per node
  struct AngleNode {
    Vec4 dir;
    double w;
  };
  std::vector<AngleNode> angles;
  angles.reserve(spec.n_psi * spec.n_theta * spec.n_phi);
  const double half_pi = 0.5 * std::numbers::pi;
  for (const auto& [xp, wp] : psi_nw) {
    const double psi = half_pi * (xp + 1.0), wpsi = half_pi * wp;
    for (const auto& [xt, wt] : theta_nw) {
      const double theta = half_pi * (xt + 1.0), wtheta = half_pi * wt;
      for (int k = 0; k < spec.n_phi; ++k) {
        const double phi = 2.0 * std::numbers::pi * (k + 0.5) / spec.n_phi;
        const double wphi = 2.0 * std::numbers::pi / spec.n_phi;
        AngleNode node;
        node.dir = Vec4(std::cos(psi), std::sin(psi) * std::cos(theta),
                        std::sin(psi) * std::sin(theta) * std::cos(phi),
                        std::sin(psi) * std::sin(theta) * std::sin(phi));
        node.w = wpsi * wtheta * wphi * std::sin(psi) * std::sin(psi) * std::sin(theta);
        angles.push_back(node);
      }
    }
  }

  double total = 0.0;
  for (int p = 0; p + 1 < static_cast<int>(panel.size()); ++p) {
    const double a = panel[p], b = panel[p + 1];
    for (const auto& [xr, wr] : rad) {
      const double r = 0.5 * (b - a) * (xr + 1.0) + a;
      const double wrad = 0.5 * (b - a) * wr;
      for (const auto& node : angles) {
        const Vec4 x = spec.center + r * node.dir;
        const double sqrtg = std::sqrt(metric_at(chart, x).determinant());
        total += wrad * node.w * r * r * r * action_density(field, chart, x) * sqrtg;
      }
    }
  }

  // continue the boundary density as c/r^8: tail = mean_density(R) pi^2 R^4 / 2
  double boundary = 0.0;
  int n_dirs = 0;
  for (int mu = 0; mu < 4; ++mu)
    for (double s : {-1.0, 1.0}) {
      Vec4 d = Vec4::Zero();
      d[mu] = s;
      const Vec4 x = spec.center + R * d;
      boundary += action_density(field, chart, x) * std::sqrt(metric_at(chart, x).determinant());
      ++n_dirs;
    }
  boundary = std::abs(boundary) / n_dirs;
  return {total, boundary * std::numbers::pi * std::numbers::pi * R * R * R * R / 2.0};
}

GaugeMatrix transform_at(const GaugeTransform& t, const Vec4& x) {
  const GaugeMatrix psi = t.psi(x);
  assert(unitary_defect(psi) <= 1e-8);
  return psi;
}

std::array<GaugeMatrix, 4> transform_derivative_at(const GaugeTransform& t, const Vec4& x) {
  if (t.dpsi) return t.dpsi(x);
  std::array<GaugeMatrix, 4> d;
  for (int la = 0; la < 4; ++la) {
    Vec4 e = Vec4::Zero();
    e[la] = t.fd_step;
    d[la] = (t.psi(x + e) - t.psi(x - e)) / (2.0 * t.fd_step);
  }
  return d;
}

GaugeTransform sine_gauge_transform(const GaugeMatrix& x_gen, const Vec4& w, double amp) {
  assert(algebra_defect(x_gen) <= 1e-10);
  GaugeTransform t;
  const GaugeMatrix gen = x_gen;
  t.psi = [gen, w, amp](const Vec4& x) {
    return exp_anti_hermitian(GaugeMatrix(amp * std::sin(w.dot(x)) * gen));
  };
  t.dpsi = [gen, w, amp](const Vec4& x) {
    const GaugeMatrix psi = exp_anti_hermitian(GaugeMatrix(amp * std::sin(w.dot(x)) * gen));
    std::array<GaugeMatrix, 4> d;
    for (int la = 0; la < 4; ++la) d[la] = amp * std::cos(w.dot(x)) * w[la] * gen * psi;
    return d;
  };
  t.ddpsi = [gen, w, amp](const Vec4& x) {
    const double ph = w.dot(x);
    const GaugeMatrix psi = exp_anti_hermitian(GaugeMatrix(amp * std::sin(ph) * gen));
    std::array<std::array<GaugeMatrix, 4>, 4> dd;
    for (int la = 0; la < 4; ++la)
      for (int mu = 0; mu < 4; ++mu)
        dd[la][mu] = (-amp * std::sin(ph) * w[la] * w[mu] * gen +
                      amp * amp * std::cos(ph) * std::cos(ph) * w[la] * w[mu] * gen * gen) *
                     psi;
    return dd;
  };
  return t;
}

ConnectionField gauge_transformed(const ConnectionField& field, const GaugeTransform& t) {
  ConnectionField out;
  out.name = field.name + "|transformed";
  out.n_color = field.n_color;
  out.A = [field, t](const Vec4& x) {
    const GaugeMatrix psi = t.psi(x);
    const GaugeMatrix inv = psi.adjoint();
    const ConnectionValue a = field.A(x);
    const auto dpsi = transform_derivative_at(t, x);
    ConnectionValue v;
    for (int mu = 0; mu < 4; ++mu) v[mu] = inv * a[mu] * psi + inv * dpsi[mu];
    return v;
  };
  if (field.dA && t.dpsi && t.ddpsi) {
    out.dA = [field, t](const Vec4& x) {
      const GaugeMatrix psi = t.psi(x);
      const GaugeMatrix inv = psi.adjoint();
      const ConnectionValue a = field.A(x);
      const ConnectionJet da = field.dA(x);
      const auto dpsi = t.dpsi(x);
      const auto ddpsi = t.ddpsi(x);
      std::array<GaugeMatrix, 4> q;  // Q_la = psi^-1 d_la psi
      for (int la = 0; la < 4; ++la) q[la] = inv * dpsi[la];
      std::array<GaugeMatrix, 4> conj;  // psi^-1 A_mu psi
      for (int mu = 0; mu < 4; ++mu) conj[mu] = inv * a[mu] * psi;
      ConnectionJet jet;
      for (int la = 0; la < 4; ++la)
        for (int mu = 0; mu < 4; ++mu)
          jet[la][mu] = inv * da[la][mu] * psi + conj[mu] * q[la] - q[la] * conj[mu] -
                        q[la] * q[mu] + inv * ddpsi[la][mu];
      return jet;
    };
    out.derivative_is_fd = field.derivative_is_fd;
  } else {
    out.dA = nullptr;
    out.derivative_is_fd = true;
  }
  return out;
}

ConnectionField zero_connection(int n_color) {
  ConnectionField f;
  f.name = "zero";
  f.n_color = n_color;
  f.A = [n_color](const Vec4&) { return zero_value(n_color); };
  f.dA = [n_color](const Vec4&) { return zero_jet(n_color); };
  return f;
}

ConnectionField abelian_constant(const So4Element& c, int n_color) {
  assert(n_color == 1 || n_color == 2);
  GaugeMatrix diag;
  if (n_color == 2) {
    diag = GaugeMatrix::Zero(2, 2);
    diag(0, 0) = 1.0;
    diag(1, 1) = -1.0;  // traceless diagonal generator
  } else {
    diag = GaugeMatrix::Identity(1, 1);  // tracelessness waived at N = 1
  }
  ConnectionField f;
  f.name = "abelian-constant";
  f.n_color = n_color;
  const Mat4 cm = c.matrix();
  f.A = [cm, diag, n_color](const Vec4& x) {
    ConnectionValue v;
    const Vec4 cx = cm * x;
    for (int mu = 0; mu < 4; ++mu) v[mu] = GaugeMatrix(1.0i * cx[mu] * diag);
    return v;
  };
  f.dA = [cm, diag, n_color](const Vec4&) {
    ConnectionJet jet = zero_jet(n_color);
    for (int la = 0; la < 4; ++la)
      for (int mu = 0; mu < 4; ++mu) jet[la][mu] = 1.0i * cm(mu, la) * diag;
    return jet;
  };
  return f;
}

ConnectionField bpst(double rho, const Vec4& center, Orientation orientation) {
  assert(rho > 0.0);
  const double sign =
      orientation == Orientation::antidual ? antidual_thooft_sign() : -antidual_thooft_sign();
  const std::array<Mat4, 3> eta = {thooft_matrix(0, sign), thooft_matrix(1, sign),
                                   thooft_matrix(2, sign)};
  ConnectionField f;
  f.name = orientation == Orientation::antidual ? "bpst-antidual" : "bpst-dual";
  f.n_color = 2;
  const double rho2 = rho * rho;
  f.A = [eta, center, rho2](const Vec4& x) {
    const auto& T = su2_generators();
    const Vec4 y = x - center;
    const double g = 1.0 / (y.squaredNorm() + rho2);
    ConnectionValue v = zero_value(2);
    for (int mu = 0; mu < 4; ++mu)
      for (int a = 0; a < 3; ++a) {
        const double coef = 2.0 * eta[a].row(mu).dot(y) * g;
        if (coef != 0.0) v[mu] += coef * T[a];
      }
    return v;
  };
  f.dA = [eta, center, rho2](const Vec4& x) {
    const auto& T = su2_generators();
    const Vec4 y = x - center;
    const double g = 1.0 / (y.squaredNorm() + rho2);
    const double gp = -g * g;  // d g / d |y|^2
    ConnectionJet jet = zero_jet(2);
    for (int la = 0; la < 4; ++la)
      for (int mu = 0; mu < 4; ++mu)
        for (int a = 0; a < 3; ++a) {
          const double coef =
              2.0 * eta[a](mu, la) * g + 2.0 * eta[a].row(mu).dot(y) * gp * 2.0 * y[la];
          if (coef != 0.0) jet[la][mu] += coef * T[a];
        }
    return jet;
  };
  return f;
}

BumpSpec default_bump(int n_color) {
  BumpSpec spec;
  const auto& T = su2_generators();
  for (auto& m : spec.b) m = GaugeMatrix::Zero(n_color, n_color);
  if (n_color >= 2) {
    // embed fixed su(2) directions in the top-left block
    const std::array<GaugeMatrix, 4> v = {T[2], T[0], T[1],
                                          GaugeMatrix((T[0] + T[1]) / std::sqrt(2.0))};
    for (int mu = 0; mu < 4; ++mu) spec.b[mu].topLeftCorner(2, 2) = v[mu];
  }
  return spec;
}

ConnectionField perturbed(const ConnectionField& base, double eps, const BumpSpec& bump) {
  assert(base.n_color == static_cast<int>(bump.b[0].rows()));
  ConnectionField f;
  f.name = base.name + "+bump";
  f.n_color = base.n_color;
  const double r2 = bump.radius * bump.radius;
  f.A = [base, eps, bump, r2](const Vec4& x) {
    ConnectionValue v = base.A(x);
    const double beta = bump_value((x - bump.center).squaredNorm(), r2);
    if (beta != 0.0)
      for (int mu = 0; mu < 4; ++mu) v[mu] += eps * beta * bump.b[mu];
    return v;
  };
  if (base.dA) {
    f.dA = [base, eps, bump, r2](const Vec4& x) {
      ConnectionJet jet = base.dA(x);
      const Vec4 y = x - bump.center;
      const double slope = bump_slope(y.squaredNorm(), r2);
      if (slope != 0.0)
        for (int la = 0; la < 4; ++la)
          for (int mu = 0; mu < 4; ++mu) jet[la][mu] += eps * slope * 2.0 * y[la] * bump.b[mu];
      return jet;
    };
    f.derivative_is_fd = base.derivative_is_fd;
  } else {
    f.derivative_is_fd = true;
  }
  return f;
}

ConnectionField builtin_field(const std::string& name, double rho, const Vec4& center,
                              Orientation orientation, const So4Element& c, double eps) {
  if (name == "zero") return zero_connection();
  if (name == "abelian_constant") return abelian_constant(c);
  if (name == "bpst") return bpst(rho, center, orientation);
  if (name == "perturbed") return perturbed(bpst(rho, center, orientation), eps, default_bump());
  throw UnknownNameError("field '" + name +
                         "' (known: zero, abelian_constant, bpst, perturbed)");
}

}  // namespace holonomy
