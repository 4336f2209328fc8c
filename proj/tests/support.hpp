#pragma once

#include <complex>
#include <random>
#include <vector>

#include "holonomy/algebra.hpp"
#include "holonomy/geometry.hpp"

namespace holonomy::testing {

// all randomness in the tests flows from fixed seeds so failures reproduce
inline std::mt19937_64 rng(unsigned salt = 0) { return std::mt19937_64(0x5eed0ull + salt); }

inline GaugeMatrix random_matrix(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> dist(0.0, 1.0);
  GaugeMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = std::complex<double>(dist(gen), dist(gen));
  return m;
}

inline GaugeMatrix random_algebra(int n, std::mt19937_64& gen) {
  return make_algebra(random_matrix(n, gen)).entries;
}

inline double inf_diff(const GaugeMatrix& a, const GaugeMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline Vec4 axis(int mu) {
  Vec4 v = Vec4::Zero();
  v[mu] = 1.0;
  return v;
}

// pinned family of probe curves reused across the test binaries
inline std::vector<Curve> curve_zoo() {
  std::vector<Curve> zoo;
  zoo.push_back(Curve::line({0.2, -0.1, 0.3, 0.1}, {-0.3, 0.4, -0.2, 0.5}));
  zoo.push_back(Curve::circle({0.1, 0.2, -0.1, 0.3}, 0.4, axis(0), axis(2)));
  zoo.push_back(Curve::figure_eight({-0.2, 0.1, 0.2, -0.1}, 0.35, axis(1), 0.25, axis(3)));
  zoo.push_back(Curve::spline({{0.0, 0.0, 0.0, 0.0},
                               {0.3, 0.2, -0.1, 0.1},
                               {0.1, 0.5, 0.2, -0.2},
                               {-0.2, 0.3, 0.4, 0.1},
                               {0.0, 0.1, 0.1, 0.4}}));
  zoo.push_back(reparametrize(Curve::line({0.4, 0.0, -0.2, 0.1}, {-0.1, 0.3, 0.2, -0.3}),
                              split_linear_time_change(0.3)));
  return zoo;
}

}  // namespace holonomy::testing
