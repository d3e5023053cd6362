#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

namespace ergodyn {

struct PowerIterationOptions {
  double tol = 1e-6;
  int max_iters = 200;
  std::uint64_t seed = 0;
};

/// Dominant eigenpair estimate of a symmetric linear operator.
struct PowerIterationResult {
  double magnitude = 0.0;  ///< |lambda_max|, estimated as ||A v|| for unit v
  double rayleigh = 0.0;   ///< v^T A v; its sign is the sign of the eigenvalue
  Eigen::VectorXd vector;
  int iterations = 0;
  bool converged = false;

  double signed_value() const { return rayleigh < 0.0 ? -magnitude : magnitude; }
};

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Power iteration with a seeded Gaussian start. The magnitude uses ||A v||
/// rather than the Rayleigh quotient, which stays correct when the two
/// extreme eigenvalues have equal modulus and opposite sign. Stops once
/// |m_{k+1} - m_k| <= tol * |m_k|.
PowerIterationResult power_iteration(const LinearOperator& op, Eigen::Index dim, const PowerIterationOptions& opts);

struct OperatorNormResult {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Largest singular value via power iteration on W^T W, relative tolerance
/// 1e-10, at most 1000 iterations. `warm_start`, when non-empty, replaces the
/// seeded start vector and is overwritten with the final right singular vector.
OperatorNormResult operator_norm(const Eigen::MatrixXd& w, double tol = 1e-10, int max_iters = 1000,
                                 std::uint64_t seed = 0x5eed, Eigen::VectorXd* warm_start = nullptr);

}  // namespace ergodyn
