#include "ergodyn/linalg.hpp"

#include <cmath>

#include "ergodyn/errors.hpp"
#include "ergodyn/rng.hpp"

namespace ergodyn {

namespace {

Eigen::VectorXd gaussian_unit(Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = standard_normal(rng);
  return v / v.norm();
}

}  // namespace

PowerIterationResult power_iteration(const LinearOperator& op, Eigen::Index dim, const PowerIterationOptions& opts) {
  if (opts.max_iters < 1) throw InvalidInput("power iteration needs max_iters >= 1");
  if (dim < 1) throw InvalidInput("power iteration needs a non-empty space");
  PowerIterationResult r;
  Eigen::VectorXd v = gaussian_unit(dim, opts.seed);
  double prev = 0.0;
  for (int k = 1; k <= opts.max_iters; ++k) {
    const Eigen::VectorXd av = op(v);
    if (!av.allFinite()) throw InvalidInput("power iteration: operator returned non-finite values");
    const double m = av.norm();
    r.iterations = k;
    r.magnitude = m;
    r.rayleigh = v.dot(av);
    r.vector = v;
    if (m == 0.0) {
      r.converged = true;
      return r;
    }
    if (k > 1 && std::abs(m - prev) <= opts.tol * std::abs(prev)) {
      r.converged = true;
      return r;
    }
    prev = m;
    v = av / m;
  }
  return r;
}

OperatorNormResult operator_norm(const Eigen::MatrixXd& w, double tol, int max_iters, std::uint64_t seed,
                                 Eigen::VectorXd* warm_start) {
  if (!w.allFinite()) throw InvalidInput("operator_norm: matrix has non-finite entries");
  OperatorNormResult r;
  if (w.size() == 0) {
    r.converged = true;
    return r;
  }
  Eigen::VectorXd v;
  if (warm_start && warm_start->size() == w.cols() && warm_start->norm() > 0.0) {
    v = *warm_start / warm_start->norm();
  } else {
    v = gaussian_unit(w.cols(), seed);
  }
  // lambda = ||W^T W v|| estimates sigma_max^2.
  double prev = -1.0;
  for (int k = 1; k <= max_iters; ++k) {
    const Eigen::VectorXd wv = w * v;
    const Eigen::VectorXd wtwv = w.transpose() * wv;
    const double lambda = wtwv.norm();
    r.iterations = k;
    // ||W v|| is a lower bound on sigma_max for unit v; the larger of the two
    // estimates is kept.
    r.value = std::max(std::sqrt(lambda), wv.norm());
    if (lambda == 0.0) {
      r.converged = true;
      break;
    }
    v = wtwv / lambda;
    if (prev >= 0.0 && std::abs(lambda - prev) <= tol * prev) {
      r.converged = true;
      break;
    }
    prev = lambda;
  }
  if (warm_start) *warm_start = v;
  return r;
}

}  // namespace ergodyn
