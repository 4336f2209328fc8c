#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace holonomy {

using Complex = std::complex<double>;
using GaugeMatrix = Eigen::MatrixXcd;  // N x N, N = gauge rank (1 abelian, 2 default)
using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

// Error taxonomy. Every throwing path uses one of these so callers (and the CLI)
// can map failures to exit codes without string matching.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularMetricError : Error {
  explicit SingularMetricError(const std::string& what) : Error("singular-metric: " + what) {}
};

struct IntegrationError : Error {
  explicit IntegrationError(const std::string& what) : Error("integration-failure: " + what) {}
};

struct StepError : Error {
  explicit StepError(const std::string& what) : Error("step-failure: " + what) {}
};

struct FitError : Error {
  explicit FitError(const std::string& what) : Error("ill-conditioned-fit: " + what) {}
};

struct UnknownNameError : Error {
  explicit UnknownNameError(const std::string& what) : Error("unknown-name: " + what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("config: " + what) {}
};

}  // namespace holonomy
