#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a, double tol, int max_sweeps) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= tol * a.norm()) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                           const Eigen::VectorXd& x, double h) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd h_mat(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    h_mat.col(i) = (grad(xp) - grad(xm)) / (2.0 * h);
  }
  return 0.5 * (h_mat + h_mat.transpose());
}

double energy_distance_pairwise(const std::vector<double>& a, const std::vector<double>& wa,
                                const std::vector<double>& b, const std::vector<double>& wb) {
  auto mean_abs = [](const std::vector<double>& x, const std::vector<double>& wx, const std::vector<double>& y,
                     const std::vector<double>& wy) {
    long double s = 0, wsx = 0, wsy = 0;
    for (double v : wx) wsx += v;
    for (double v : wy) wsy += v;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < y.size(); ++j) s += wx[i] * wy[j] * std::abs((long double)x[i] - y[j]);
    return static_cast<double>(s / (wsx * wsy));
  };
  const double e = 2.0 * mean_abs(a, wa, b, wb) - mean_abs(a, wa, a, wa) - mean_abs(b, wb, b, wb);
  return std::sqrt(std::max(0.0, e));
}

long double xent_reference(const Eigen::VectorXd& logits, int label) {
  long double m = logits.maxCoeff(), s = 0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) s += std::exp((long double)logits[i] - m);
  return m + std::log(s) - logits[label];
}

}  // namespace oracle
