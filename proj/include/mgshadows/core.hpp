#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mgs {

using cplx = std::complex<double>;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Rng = std::mt19937_64;

inline constexpr cplx I_unit{0.0, 1.0};

// Malformed or out-of-contract input (maps to CLI exit code 2).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Request exceeds a hard size cap (maps to CLI exit code 3).
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fewer shadow samples than the estimation plan requires (exit code 4).
struct InsufficientSamples : std::runtime_error {
  InsufficientSamples(const std::string& what, std::uint64_t required_count)
      : std::runtime_error(what), required(required_count) {}
  std::uint64_t required;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace mgs
