#pragma once

#include <utility>
#include <vector>

#include "emdoa/array.hpp"
#include "emdoa/likelihood.hpp"

namespace emdoa {

/// Fisher information over the free parameters together with the DOA block of
/// its inverse (the variance bounds, rad^2). For the stochastic model the
/// matrix covers (theta, P, sigma); for the deterministic model the waveform
/// block is concentrated out analytically, leaving (theta, sigma).
struct FisherBlock {
  MatrixXd fim;
  VectorXd theta_bound;
};

namespace detail {

inline VectorXd invert_theta_block(const MatrixXd& fim, Index m) {
  Eigen::FullPivLU<MatrixXd> lu(fim);
  if (!lu.isInvertible())
    throw std::runtime_error("Fisher information is singular; the scenario is not identifiable");
  MatrixXd inv = lu.inverse();
  VectorXd bound = inv.diagonal().head(m);
  if (!(bound.array() > 0.0).all())
    throw std::runtime_error("Fisher information is indefinite; the scenario is not identifiable");
  return bound;
}

}  // namespace detail

/// Bounds for the zero-mean Gaussian signal model with covariance
/// H_v = sum_m P_m d_m d_m^H + diag(sigma). Entry (i, j) of the information
/// matrix is T tr(H_v^{-1} dH_i H_v^{-1} dH_j) over parameters (theta, P, sigma).
inline FisherBlock stoch_fisher(const VectorXd& theta, const VectorXd& p,
                                const VectorXd& sigma, int t) {
  check_doa(theta);
  check_noise(sigma);
  require(p.size() == theta.size(), "power vector must match the DOA count");
  require(t >= 1, "sample count must be >= 1");
  if (!(p.array() > 0.0).all())
    throw std::runtime_error("zero-power source; the scenario is not identifiable");
  const Index m_count = theta.size();
  const Index n = sigma.size();
  const Index dim = 2 * m_count + n;

  auto llt = hpd_factor(signal_covariance(theta, p, sigma));
  MatrixXcd h_inv = llt.solve(MatrixXcd::Identity(n, n));

  // a_k = H_v^{-1} dH_k for every free parameter, theta first, then P, sigma.
  std::vector<MatrixXcd> a(dim);
  for (Index m = 0; m < m_count; ++m) {
    VectorXcd d = steering_vector(theta[m], static_cast<int>(n));
    VectorXcd dp = steering_derivative(theta[m], static_cast<int>(n));
    a[m] = h_inv * hermitize(p[m] * (dp * d.adjoint() + d * dp.adjoint()));
    a[m_count + m] = h_inv * hermitize(d * d.adjoint());
  }
  for (Index k = 0; k < n; ++k)
    a[2 * m_count + k] = h_inv.col(k) * VectorXcd::Unit(n, k).transpose();

  MatrixXd unit(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j <= i; ++j) {
      const double val = (a[i].transpose().array() * a[j].array()).sum().real();
      unit(i, j) = val;
      unit(j, i) = val;
    }

  FisherBlock out;
  out.fim = static_cast<double>(t) * unit;
  out.theta_bound = detail::invert_theta_block(unit, m_count) / static_cast<double>(t);
  return out;
}

inline VectorXd stoch_crlb(const VectorXd& theta, const VectorXd& p, const VectorXd& sigma,
                           int t) {
  return stoch_fisher(theta, p, sigma, t).theta_bound;
}

/// Bounds for the known-waveform model v(t) ~ CN(D(theta) f(t), diag(sigma)),
/// conditioned on the waveforms. The waveform nuisance block is concentrated
/// out through its Schur complement; the noise block decouples from the mean
/// parameters, so it joins the matrix as an independent diagonal block.
inline FisherBlock det_fisher(const VectorXd& theta, const MatrixXcd& f, const VectorXd& sigma) {
  check_doa(theta);
  check_noise(sigma);
  require(f.rows() == theta.size(), "waveforms must have one row per source");
  require(f.cols() >= 1, "waveforms must hold at least one snapshot");
  const Index m_count = theta.size();
  const Index n = sigma.size();
  const int t = static_cast<int>(f.cols());

  MatrixXcd d(n, m_count), dp(n, m_count);
  for (Index m = 0; m < m_count; ++m) {
    d.col(m) = steering_vector(theta[m], static_cast<int>(n));
    dp.col(m) = steering_derivative(theta[m], static_cast<int>(n));
  }
  MatrixXcd w_d = sigma.cwiseInverse().asDiagonal() * d;
  MatrixXcd w_dp = sigma.cwiseInverse().asDiagonal() * dp;
  MatrixXcd g3 = hermitize(d.adjoint() * w_d);
  auto llt = hpd_factor(g3);
  MatrixXcd schur = dp.adjoint() * w_dp - (w_d.adjoint() * dp).adjoint() * llt.solve(w_d.adjoint() * dp);
  MatrixXcd s = f * f.adjoint();
  MatrixXd eff = 2.0 * (schur.array() * s.transpose().array()).real();
  eff = 0.5 * (eff + eff.transpose()).eval();

  FisherBlock out;
  out.fim = MatrixXd::Zero(m_count + n, m_count + n);
  out.fim.topLeftCorner(m_count, m_count) = eff;
  out.fim.bottomRightCorner(n, n) =
      (static_cast<double>(t) * sigma.array().square().inverse()).matrix().asDiagonal();
  out.theta_bound = detail::invert_theta_block(eff, m_count);
  return out;
}

inline VectorXd det_crlb(const VectorXd& theta, const MatrixXcd& f, const VectorXd& sigma) {
  return det_fisher(theta, f, sigma).theta_bound;
}

}  // namespace emdoa
