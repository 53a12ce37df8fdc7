#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace emdoa {

using cxd = std::complex<double>;
using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

inline double deg2rad(double deg) { return deg * (kPi / 180.0); }
inline double rad2deg(double rad) { return rad * (180.0 / kPi); }

inline VectorXd deg2rad(const VectorXd& deg) { return deg * (kPi / 180.0); }
inline VectorXd rad2deg(const VectorXd& rad) { return rad * (180.0 / kPi); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Directions of arrival live strictly inside (0, pi); the array is blind at
/// endfire, so the endpoints are rejected rather than clamped.
inline void check_doa(const VectorXd& theta) {
  require(theta.size() >= 1, "DOA vector must not be empty");
  for (Index m = 0; m < theta.size(); ++m) {
    if (!(theta[m] > 0.0 && theta[m] < kPi))
      throw std::domain_error("DOA angle outside the open interval (0, pi)");
  }
}

inline void check_noise(const VectorXd& sigma) {
  require(sigma.size() >= 1, "noise profile must not be empty");
  for (Index n = 0; n < sigma.size(); ++n) {
    if (!(sigma[n] > 0.0))
      throw std::domain_error("noise variance must be strictly positive");
  }
}

inline void check_powers(const VectorXd& p) {
  for (Index m = 0; m < p.size(); ++m) {
    if (!(p[m] >= 0.0)) throw std::domain_error("source power must be nonnegative");
  }
}

/// splitmix64 scrambler, used to derive independent per-trial seeds from one
/// master seed without coupling between streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 0x6a09e667f3bcc909ULL));
}

/// Symmetrizes a numerically almost-Hermitian matrix.
inline MatrixXcd hermitize(const MatrixXcd& a) { return 0.5 * (a + a.adjoint()); }

}  // namespace emdoa
