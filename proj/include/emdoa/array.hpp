#pragma once

#include <cmath>
#include <random>

#include "emdoa/common.hpp"

namespace emdoa {

/// Steering vector of a half-wavelength uniform linear array.
/// Element k (0-based) is exp(-j k pi cos(theta)).
inline VectorXcd steering_vector(double theta, int n_sensors) {
  if (!(theta > 0.0 && theta < kPi))
    throw std::domain_error("steering angle outside the open interval (0, pi)");
  require(n_sensors >= 1, "sensor count must be >= 1");
  VectorXcd d(n_sensors);
  const double phase = kPi * std::cos(theta);
  for (int k = 0; k < n_sensors; ++k) d[k] = std::polar(1.0, -k * phase);
  return d;
}

/// Elementwise derivative of the steering vector with respect to theta:
/// element k is j k pi sin(theta) exp(-j k pi cos(theta)).
inline VectorXcd steering_derivative(double theta, int n_sensors) {
  if (!(theta > 0.0 && theta < kPi))
    throw std::domain_error("steering angle outside the open interval (0, pi)");
  require(n_sensors >= 1, "sensor count must be >= 1");
  VectorXcd dd(n_sensors);
  const double phase = kPi * std::cos(theta);
  const double slope = kPi * std::sin(theta);
  for (int k = 0; k < n_sensors; ++k)
    dd[k] = cxd(0.0, k * slope) * std::polar(1.0, -k * phase);
  return dd;
}

/// N x M matrix whose columns are the steering vectors of the given DOAs.
inline MatrixXcd steering_matrix(const VectorXd& theta, int n_sensors) {
  check_doa(theta);
  MatrixXcd d(n_sensors, theta.size());
  for (Index m = 0; m < theta.size(); ++m) d.col(m) = steering_vector(theta[m], n_sensors);
  return d;
}

/// Circular complex Gaussian draw with variance var: sqrt(var/2) (x + jy),
/// x and y independent standard normals. Consumes exactly two normals.
inline cxd draw_complex_gaussian(double var, std::mt19937_64& rng,
                                 std::normal_distribution<double>& normal) {
  const double x = normal(rng);
  const double y = normal(rng);
  return std::sqrt(0.5 * var) * cxd(x, y);
}

/// N x T sensor noise block, column t drawn before column t+1, sensor 0 first
/// within a column. The fixed order keeps runs bit-reproducible for a seed.
inline MatrixXcd draw_noise(const VectorXd& sigma, int snapshots, std::mt19937_64& rng) {
  check_noise(sigma);
  require(snapshots >= 1, "snapshot count must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXcd z(sigma.size(), snapshots);
  for (int t = 0; t < snapshots; ++t)
    for (Index n = 0; n < sigma.size(); ++n) z(n, t) = draw_complex_gaussian(sigma[n], rng, normal);
  return z;
}

/// M x T block of source waveforms with row m drawn i.i.d. CN(0, p[m]).
inline MatrixXcd draw_source_signals(const VectorXd& p, int snapshots, std::uint64_t seed) {
  check_powers(p);
  require(snapshots >= 1, "snapshot count must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXcd f(p.size(), snapshots);
  for (int t = 0; t < snapshots; ++t)
    for (Index m = 0; m < p.size(); ++m) f(m, t) = draw_complex_gaussian(p[m], rng, normal);
  return f;
}

/// v(t) = D(theta) f(t) + n(t) with deterministic waveforms f and sensor noise
/// n(t) ~ CN(0, diag(sigma)).
inline MatrixXcd generate_deterministic_snapshots(const VectorXd& theta, const MatrixXcd& f,
                                                  const VectorXd& sigma, std::uint64_t seed) {
  check_doa(theta);
  check_noise(sigma);
  require(f.rows() == theta.size(), "waveform rows must match the DOA count");
  require(f.cols() >= 1, "waveform block must hold at least one snapshot");
  std::mt19937_64 rng(seed);
  MatrixXcd v = steering_matrix(theta, static_cast<int>(sigma.size())) * f;
  v += draw_noise(sigma, static_cast<int>(f.cols()), rng);
  return v;
}

/// v(t) = D(theta) f(t) + n(t) with f(t) ~ CN(0, diag(p)) drawn afresh per
/// snapshot. Signals are drawn before noise so both streams are reproducible.
inline MatrixXcd generate_stochastic_snapshots(const VectorXd& theta, const VectorXd& p,
                                               const VectorXd& sigma, int snapshots,
                                               std::uint64_t seed) {
  check_doa(theta);
  check_powers(p);
  check_noise(sigma);
  require(p.size() == theta.size(), "power vector must match the DOA count");
  require(snapshots >= 1, "snapshot count must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXcd f(theta.size(), snapshots);
  for (int t = 0; t < snapshots; ++t)
    for (Index m = 0; m < theta.size(); ++m) f(m, t) = draw_complex_gaussian(p[m], rng, normal);
  MatrixXcd v = steering_matrix(theta, static_cast<int>(sigma.size())) * f;
  v += draw_noise(sigma, snapshots, rng);
  return v;
}

/// Sample covariance (1/T) sum_t v(t) v(t)^H, symmetrized so downstream
/// factorizations see an exactly Hermitian matrix.
inline MatrixXcd sample_covariance(const MatrixXcd& v) {
  require(v.cols() >= 1, "sample covariance needs at least one snapshot");
  MatrixXcd r = (v * v.adjoint()) / static_cast<double>(v.cols());
  return hermitize(r);
}

}  // namespace emdoa
