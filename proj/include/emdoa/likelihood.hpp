#pragma once

#include "emdoa/array.hpp"
#include "emdoa/common.hpp"

namespace emdoa {

/// Parameters of the deterministic signal model: unknown waveforms F plus the
/// sensor noise profile.
struct DetParams {
  VectorXd theta;
  MatrixXcd f;
  VectorXd sigma;
};

/// Parameters of the stochastic signal model: source powers plus the sensor
/// noise profile.
struct StochParams {
  VectorXd theta;
  VectorXd p;
  VectorXd sigma;
};

/// Model covariance of one snapshot under the stochastic model:
/// H_v = sum_m p_m d(theta_m) d(theta_m)^H + diag(sigma).
inline MatrixXcd signal_covariance(const VectorXd& theta, const VectorXd& p,
                                   const VectorXd& sigma) {
  check_doa(theta);
  check_powers(p);
  check_noise(sigma);
  require(p.size() == theta.size(), "power vector must match the DOA count");
  const int n = static_cast<int>(sigma.size());
  MatrixXcd h = MatrixXcd::Zero(n, n);
  for (Index m = 0; m < theta.size(); ++m) {
    VectorXcd d = steering_vector(theta[m], n);
    h.noalias() += p[m] * (d * d.adjoint());
  }
  h += sigma.asDiagonal().toDenseMatrix().cast<cxd>();
  return hermitize(h);
}

/// Cholesky factorization wrapper for Hermitian positive definite matrices.
/// Failure is a bug upstream (the model guarantees positive definiteness), so
/// it raises instead of regularizing.
inline Eigen::LLT<MatrixXcd> hpd_factor(const MatrixXcd& h) {
  Eigen::LLT<MatrixXcd> llt(h);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("Hermitian factorization failed: matrix not positive definite");
  return llt;
}

inline double logdet_from_llt(const Eigen::LLT<MatrixXcd>& llt) {
  double s = 0.0;
  auto l = llt.matrixLLT();
  for (Index k = 0; k < l.rows(); ++k) s += std::log(std::real(l(k, k)));
  return 2.0 * s;
}

/// Incomplete-data log-likelihood of the deterministic model:
/// -TN ln(pi) - T sum_n ln(sigma_n) - sum_t (v - D f)(t)^H Sigma^{-1} (v - D f)(t).
inline double det_llf(const DetParams& params, const MatrixXcd& v) {
  check_doa(params.theta);
  check_noise(params.sigma);
  require(v.rows() == params.sigma.size(), "snapshot rows must match the noise profile");
  require(params.f.rows() == params.theta.size(), "waveform rows must match the DOA count");
  require(params.f.cols() == v.cols(), "waveform columns must match the snapshot count");
  const double t = static_cast<double>(v.cols());
  const double n = static_cast<double>(v.rows());
  MatrixXcd resid = v - steering_matrix(params.theta, v.rows()) * params.f;
  const double quad =
      (resid.array().abs2().rowwise().sum() / params.sigma.array()).sum();
  return -t * n * std::log(kPi) - t * params.sigma.array().log().sum() - quad;
}

/// Incomplete-data log-likelihood of the stochastic model, evaluated from the
/// sample covariance: -T [N ln(pi) + ln det(H_v) + tr(H_v^{-1} R_hat)].
inline double stoch_llf(const StochParams& params, const MatrixXcd& r_hat, int t) {
  require(t >= 1, "sample count must be >= 1");
  require(r_hat.rows() == params.sigma.size() && r_hat.cols() == params.sigma.size(),
          "sample covariance must be N x N");
  MatrixXcd h = signal_covariance(params.theta, params.p, params.sigma);
  auto llt = hpd_factor(h);
  const double logdet = logdet_from_llt(llt);
  const double trace = llt.solve(r_hat).trace().real();
  const double n = static_cast<double>(r_hat.rows());
  return -static_cast<double>(t) * (n * std::log(kPi) + logdet + trace);
}

}  // namespace emdoa
