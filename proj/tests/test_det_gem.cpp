#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "emdoa/det_gem.hpp"
#include "oracles.hpp"

using namespace emdoa;
using Catch::Approx;

namespace {

const double kSigmaBench[] = {1.1, 2.3, 3.0, 4.2, 1.3, 0.5, 5.0, 2.2, 6.7, 10.0};

VectorXd bench_sigma() {
  VectorXd s(10);
  for (int i = 0; i < 10; ++i) s[i] = kSigmaBench[i];
  return s;
}

DetGemState random_state(Index n, Index m, Index t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.3, kPi - 0.3);
  std::uniform_real_distribution<double> var(0.2, 3.0);
  DetGemState s;
  s.theta.resize(m);
  for (Index k = 0; k < m; ++k) s.theta[k] = angle(rng);
  s.f = oracles::random_complex(m, t, rng);
  s.omega.resize(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) s.omega(i, j) = var(rng);
  return s;
}

bool trace_nondecreasing(const std::vector<double>& llf, double rel = 1e-6) {
  for (size_t k = 1; k < llf.size(); ++k)
    if (llf[k] < llf[k - 1] - rel * std::abs(llf[k - 1])) return false;
  return true;
}

}  // namespace

TEST_CASE("E-step collapses to the model fit at zero residual") {
  std::mt19937_64 rng(7);
  DetGemState s = random_state(4, 2, 3, rng);
  MatrixXcd v = steering_matrix(s.theta, 4) * s.f;
  DetEStepCache cache = gem_e_step(s, v);
  for (Index m = 0; m < 2; ++m) {
    MatrixXcd want = steering_vector(s.theta[m], 4) * s.f.row(m);
    CHECK((cache.g[m] - want).norm() < 1e-12);
  }
}

TEST_CASE("E-step conditional variance vanishes for a single source") {
  std::mt19937_64 rng(9);
  DetGemState s = random_state(5, 1, 2, rng);
  MatrixXcd v = oracles::random_complex(5, 2, rng);
  DetEStepCache cache = gem_e_step(s, v);
  CHECK(cache.c.norm() == Approx(0.0).margin(1e-14));
  CHECK((cache.g[0] - v).norm() < 1e-12);
}

TEST_CASE("E-step matches joint-Gaussian conditioning") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 2 + (rep % 2);
    const Index t = 1 + (rep % 2);
    DetGemState s = random_state(n, 2, t, rng);
    MatrixXcd v = oracles::random_complex(n, t, rng);
    DetEStepCache cache = gem_e_step(s, v);

    MatrixXcd sigma_total =
        s.omega.rowwise().sum().asDiagonal().toDenseMatrix().cast<cxd>();
    MatrixXcd resid = v - steering_matrix(s.theta, n) * s.f;
    for (Index m = 0; m < 2; ++m) {
      MatrixXcd sigma_m = s.omega.col(m).asDiagonal().toDenseMatrix().cast<cxd>();
      auto cond = oracles::condition_gaussian(sigma_m, sigma_m, sigma_total);
      MatrixXcd g_want = steering_vector(s.theta[m], n) * s.f.row(m) + cond.gain * resid;
      CHECK((cache.g[m] - g_want).norm() <= 1e-10 * std::max(1.0, g_want.norm()));
      VectorXd c_want = cond.cov.diagonal().real();
      CHECK((cache.c.col(m) - c_want).norm() <= 1e-10 * std::max(1.0, c_want.norm()));
      CHECK((cache.c.col(m).array() >= 0.0).all());
      CHECK((cache.c.col(m).array() < s.omega.col(m).array()).all());
    }
  }
}

TEST_CASE("DOA/waveform update solves the rank-one fit exactly") {
  const int n = 6;
  const double theta_star = deg2rad(64.0);
  DetGemState s;
  s.theta = VectorXd::Constant(1, theta_star);
  s.f = MatrixXcd::Ones(1, 1);
  s.omega = MatrixXd::Ones(n, 1);
  DetEStepCache cache;
  cache.g = {steering_vector(theta_star, n)};
  cache.c = MatrixXd::Zero(n, 1);
  auto [theta_new, f_new] = gem_cm_step1(cache, s, {});
  CHECK(theta_new[0] == Approx(theta_star).margin(1e-12));
  CHECK(f_new(0, 0).real() == Approx(1.0).epsilon(1e-12));
  CHECK(f_new(0, 0).imag() == Approx(0.0).margin(1e-12));
}

TEST_CASE("DOA update agrees with a basin-restricted grid search") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> angle(deg2rad(20.0), deg2rad(160.0));
  std::uniform_real_distribution<double> offset(-deg2rad(4.0), deg2rad(4.0));
  std::uniform_real_distribution<double> var(0.4, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 10;
    const double theta_star = angle(rng);
    DetGemState s;
    s.theta = VectorXd::Constant(1, theta_star + offset(rng));
    s.omega.resize(n, 1);
    for (int i = 0; i < n; ++i) s.omega(i, 0) = var(rng);
    s.f = MatrixXcd::Ones(1, 2);
    DetEStepCache cache;
    MatrixXcd g(n, 2);
    g.col(0) = steering_vector(theta_star, n) * cxd(1.2, 0.4);
    g.col(1) = steering_vector(theta_star, n) * cxd(-0.5, 0.9) +
               0.05 * oracles::random_complex(n, 1, rng);
    cache.g = {g};
    cache.c = MatrixXd::Zero(n, 1);
    auto [theta_new, f_new] = gem_cm_step1(cache, s, {});

    VectorXd w = s.omega.col(0);
    VectorXcd scale = w.cwiseSqrt().cast<cxd>();
    MatrixXcd g_t = scale.cwiseInverse().asDiagonal() * g;
    SearchProblem p{hermitize((g_t * g_t.adjoint()) / 2.0), w, s.theta[0]};
    oracles::BasinGridResult grid = oracles::basin_grid_max(p);
    CHECK(std::abs(theta_new[0] - grid.angle) < 1e-3);
  }
}

TEST_CASE("waveform scaling uses the whitened sensor count") {
  std::mt19937_64 rng(35);
  const int n = 7;
  DetGemState s = random_state(n, 2, 3, rng);
  s.omega = MatrixXd::Ones(n, 2);
  DetEStepCache cache = gem_e_step(s, steering_matrix(s.theta, n) * s.f);
  auto [theta_new, f_new] = gem_cm_step1(cache, s, {});
  // With unit noise shares q_m = N; an exact fit must return f unchanged.
  CHECK((f_new - s.f).norm() < 1e-10);
}

TEST_CASE("noise update damps toward the conditional second moment") {
  std::mt19937_64 rng(41);
  const Index n = 4;
  DetGemState s = random_state(n, 2, 3, rng);
  MatrixXcd v = oracles::random_complex(n, 3, rng);
  DetEStepCache cache = gem_e_step(s, v);
  auto [theta_new, f_new] = gem_cm_step1(cache, s, {});

  MatrixXd full_damp = gem_cm_step2(cache, theta_new, f_new, s, 1.0);
  CHECK((full_damp - s.omega).norm() == Approx(0.0).margin(1e-14));

  MatrixXd no_damp = gem_cm_step2(cache, theta_new, f_new, s, 0.0);
  for (Index m = 0; m < 2; ++m) {
    MatrixXcd resid = cache.g[m] - steering_vector(theta_new[m], n) * f_new.row(m);
    VectorXd d = resid.array().abs2().rowwise().sum() / 3.0;
    CHECK((no_damp.col(m) - (cache.c.col(m) + d)).norm() < 1e-12);
  }

  MatrixXd half = gem_cm_step2(cache, theta_new, f_new, s, 0.5);
  CHECK((half.array() > 0.0).all());
  // Damped point still improves the per-entry noise objective
  // ln(s) + (c+d)/s, which is what makes the blended update safe.
  for (Index m = 0; m < 2; ++m) {
    MatrixXcd resid = cache.g[m] - steering_vector(theta_new[m], n) * f_new.row(m);
    VectorXd d = resid.array().abs2().rowwise().sum() / 3.0;
    for (Index i = 0; i < n; ++i) {
      const double target = cache.c(i, m) + d[i];
      const double before = std::log(s.omega(i, m)) + target / s.omega(i, m);
      const double after = std::log(half(i, m)) + target / half(i, m);
      CHECK(after <= before + 1e-12);
    }
  }
}

TEST_CASE("per-source updates commute with source permutation") {
  std::mt19937_64 rng(47);
  DetGemState s = random_state(5, 2, 2, rng);
  MatrixXcd v = oracles::random_complex(5, 2, rng);
  DetEStepCache cache = gem_e_step(s, v);
  auto [theta_a, f_a] = gem_cm_step1(cache, s, {});

  DetGemState swapped;
  swapped.theta = s.theta.reverse();
  swapped.f = s.f.colwise().reverse();
  swapped.omega = s.omega.rowwise().reverse();
  DetEStepCache cache_s = gem_e_step(swapped, v);
  auto [theta_b, f_b] = gem_cm_step1(cache_s, swapped, {});
  CHECK(theta_a[0] == Approx(theta_b[1]).margin(1e-12));
  CHECK(theta_a[1] == Approx(theta_b[0]).margin(1e-12));
  CHECK((f_a.row(0) - f_b.row(1)).norm() < 1e-12);
}

TEST_CASE("an already-converged run terminates immediately") {
  std::mt19937_64 rng(53);
  VectorXd theta(2);
  theta << deg2rad(50.0), deg2rad(100.0);
  MatrixXcd f = oracles::random_complex(2, 4, rng);
  MatrixXcd v = steering_matrix(theta, 6) * f;
  DetGemState init{theta, f, MatrixXd::Constant(6, 2, 0.5)};
  TrialRecord rec = gem_run(v, init, {});
  CHECK(rec.converged);
  CHECK(rec.iterations <= 2);
  CHECK(rec.final_theta_deg[0] == Approx(50.0).margin(1e-6));
  CHECK(rec.final_theta_deg[1] == Approx(100.0).margin(1e-6));
}

TEST_CASE("random trials keep the likelihood trace nondecreasing") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> angle(deg2rad(30.0), deg2rad(150.0));
  for (int trial = 0; trial < 10; ++trial) {
    VectorXd theta(2);
    theta << angle(rng), angle(rng);
    if (std::abs(theta[0] - theta[1]) < deg2rad(10.0)) continue;
    VectorXd sigma = bench_sigma();
    VectorXd p(2);
    p << 4.0, 7.0;
    MatrixXcd f = draw_source_signals(p, 50, derive_seed(88, trial));
    MatrixXcd v = generate_deterministic_snapshots(theta, f, sigma, derive_seed(99, trial));

    DetGemState init;
    init.theta = theta.array() + deg2rad(3.0);
    init.f = MatrixXcd::Ones(2, 50);
    init.omega = MatrixXd::Constant(10, 2, 0.5);
    AlgorithmConfig cfg;
    cfg.max_iterations = 300;
    TrialRecord rec = gem_run(v, init, cfg);
    CHECK(trace_nondecreasing(rec.llf_trace));
    CHECK((init.theta - theta).norm() > 0.0);
  }
}

TEST_CASE("two-source benchmark scenario converges near the truth") {
  VectorXd theta(2);
  theta << deg2rad(40.0), deg2rad(80.0);
  VectorXd p(2);
  p << 6.0, 8.0;
  VectorXd sigma = bench_sigma();
  const int t = 500;
  MatrixXcd f = draw_source_signals(p, t, 20250801);
  MatrixXcd v = generate_deterministic_snapshots(theta, f, sigma, 20250802);

  DetGemState init;
  init.theta.resize(2);
  init.theta << deg2rad(45.0), deg2rad(85.0);
  init.f = MatrixXcd::Ones(2, t);
  init.omega = MatrixXd::Constant(10, 2, 0.5);

  AlgorithmConfig cfg;
  cfg.beta = 0.5;
  TrialRecord rec = gem_run(v, init, cfg);
  CHECK(rec.converged);
  CHECK(trace_nondecreasing(rec.llf_trace));
  CHECK(std::abs(rec.final_theta_deg[0] - 40.0) < 1.0);
  CHECK(std::abs(rec.final_theta_deg[1] - 80.0) < 1.0);
  CHECK((rec.final_sigma.array() > 0.0).all());
}
