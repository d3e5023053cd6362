#include "ergodyn/measures.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ergodyn/errors.hpp"
#include "ergodyn/format.hpp"
#include "ergodyn/rng.hpp"

namespace ergodyn {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

EmpiricalMeasure uniform_measure(std::vector<ParamVector> atoms) {
  if (atoms.empty()) throw InvalidInput("empirical measure needs at least one atom");
  EmpiricalMeasure m;
  m.weights.assign(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
  m.atoms = std::move(atoms);
  m.last_step = m.atoms.size() - 1;
  return m;
}

EmpiricalMeasure build_measure(const Trajectory& traj, std::size_t first_step, std::size_t last_step,
                               std::size_t stride) {
  if (stride == 0) throw InvalidInput("measure stride must be positive");
  if (first_step > last_step) throw InvalidInput("measure range is empty");
  if (traj.iterate_steps.empty() || last_step > traj.iterate_steps.back()) {
    throw InvalidInput("measure range ends after the trajectory");
  }
  std::vector<ParamVector> atoms;
  std::size_t k = 0;
  std::size_t first = 0, last = 0;
  for (std::size_t i = 0; i < traj.iterates.size(); ++i) {
    const std::size_t s = traj.iterate_steps[i];
    if (s < first_step || s > last_step) continue;
    if (k++ % stride != 0) continue;
    if (atoms.empty()) first = s;
    last = s;
    atoms.push_back(traj.iterates[i]);
  }
  if (atoms.empty()) throw InvalidInput("no stored iterates in the requested range");
  EmpiricalMeasure m = uniform_measure(std::move(atoms));
  m.trajectory_seed = traj.seed;
  m.first_step = first;
  m.last_step = last;
  m.stride = stride * traj.stride;
  return m;
}

namespace observables {

Observable constant(double c) {
  return {"constant", [c](const ParamVector&) { return c; }, std::abs(c)};
}

Observable full_loss(ObjectivePtr obj) {
  return {"loss", [obj](const ParamVector& t) { return obj->full_loss(t); }, std::nullopt};
}

Observable grad_norm(ObjectivePtr obj) {
  return {"grad_norm", [obj](const ParamVector& t) { return obj->full_grad(t).norm(); }, std::nullopt};
}

Observable grad_norm_sq(ObjectivePtr obj) {
  return {"grad_norm_sq", [obj](const ParamVector& t) { return obj->full_grad(t).squared_norm(); }, std::nullopt};
}

Observable coordinate(std::size_t index) {
  return {"coord:" + std::to_string(index),
          [index](const ParamVector& t) {
            if (index >= t.size()) throw InvalidInput("coordinate observable index out of range");
            return t[index];
          },
          std::nullopt};
}

Observable by_name(const std::string& name, ObjectivePtr obj) {
  if (name == "loss") return full_loss(std::move(obj));
  if (name == "grad_norm") return grad_norm(std::move(obj));
  if (name == "grad_norm_sq") return grad_norm_sq(std::move(obj));
  if (name.rfind("coord:", 0) == 0) return coordinate(std::stoull(name.substr(6)));
  throw ConfigError("unknown observable '" + name + "' (expected loss, grad_norm, grad_norm_sq or coord:<i>)");
}

}  // namespace observables

double time_average(const EmpiricalMeasure& measure, const Observable& phi) {
  if (measure.atoms.empty()) throw InvalidInput("time_average on an empty measure");
  CompensatedSum s;
  for (std::size_t i = 0; i < measure.atoms.size(); ++i) {
    const double v = phi(measure.atoms[i]);
    if (!std::isfinite(v)) {
      throw InvalidInput("observable '" + phi.name + "' is non-finite (" + fmt_double(v) + ") at atom " +
                         std::to_string(i));
    }
    s.add(measure.weights[i] * v);
  }
  return s.value();
}

double hoeffding_envelope(double bound, double confidence, std::size_t n) {
  const double nd = static_cast<double>(n);
  return bound * std::sqrt(2.0 * std::log(2.0 / confidence) / nd) + 2.0 * bound / nd;
}

std::optional<double> loglog_slope(const std::vector<std::size_t>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (y[i] != 0.0 && std::isfinite(y[i]) && x[i] > 0) {
      lx.push_back(std::log(static_cast<double>(x[i])));
      ly.push_back(std::log(std::abs(y[i])));
    }
  }
  if (lx.size() < 2) return std::nullopt;
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

VanishingChangeReport vanishing_change(const Trajectory& traj, const UpdateMap& map, const Observable& phi,
                                       double confidence, std::vector<std::size_t> n_grid, std::uint64_t seed,
                                       ChangeEstimator estimator) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidInput("confidence must lie in (0, 1)");
  if (n_grid.empty()) throw InvalidInput("vanishing_change needs a non-empty n grid");
  std::sort(n_grid.begin(), n_grid.end());
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
  if (n_grid.front() == 0) throw InvalidInput("n grid entries must be positive");
  if (traj.stride != 1) {
    throw InvalidInput("vanishing_change needs every iterate (trajectory stride is " + std::to_string(traj.stride) +
                       ")");
  }
  const std::size_t n_max = n_grid.back();
  const bool deterministic = map.deterministic();
  const bool reuse = estimator == ChangeEstimator::reuse;
  const std::size_t needed = reuse ? n_max + 1 : n_max;
  if (traj.iterates.size() < needed + 1) {
    throw InvalidInput("trajectory stores " + std::to_string(traj.iterates.size()) + " iterates; n = " +
                       std::to_string(n_max) + " needs " + std::to_string(needed + 1));
  }

  VanishingChangeReport rep;
  rep.n = n_grid;
  rep.confidence = confidence;
  rep.deterministic = deterministic;
  rep.estimator = estimator;
  rep.observable = phi.name;
  rep.seed = seed;

  MinibatchSampler sampler(map, derive_seed(seed, kStreamResample));
  CompensatedSum cum;
  double max_abs = 0.0;
  double phi_first = 0.0;
  double max_tele_gap = 0.0;
  std::size_t grid_pos = 0;
  for (std::size_t t = 1; t <= n_max; ++t) {
    const ParamVector& theta = traj.iterates[t];
    const double a = phi(theta);
    double b;
    if (reuse) {
      b = phi(traj.iterates[t + 1]);
    } else {
      const double eta = t < traj.records.size() ? traj.records[t].eta : map.step_size;
      const StepResult r = sgd_step(map, theta, sampler, eta);
      if (!r.finite) throw InvalidInput("resampled step is non-finite at t = " + std::to_string(t));
      b = phi(r.next);
    }
    if (!std::isfinite(a) || !std::isfinite(b)) {
      throw InvalidInput("observable '" + phi.name + "' is non-finite at t = " + std::to_string(t));
    }
    if (t == 1) phi_first = a;
    max_abs = std::max({max_abs, std::abs(a), std::abs(b)});
    // Adding the two values separately lets the compensated sum cancel the
    // telescoping pairs exactly instead of rounding each difference.
    cum.add(a);
    cum.add(-b);
    if (t == n_grid[grid_pos]) {
      const double delta = cum.value() / static_cast<double>(t);
      rep.delta.push_back(delta);
      if (deterministic) {
        const double tele = (phi_first - b) / static_cast<double>(t);
        const double scale = std::max(std::abs(tele), std::numeric_limits<double>::min());
        max_tele_gap = std::max(max_tele_gap, std::abs(delta - tele) / scale);
      }
      ++grid_pos;
    }
  }
  if (deterministic) rep.telescoping_residual = max_tele_gap;

  if (phi.bound) {
    rep.bound = *phi.bound;
  } else {
    rep.bound = 2.0 * max_abs;
    rep.bound_estimated = true;
    rep.warnings.push_back("observable bound not supplied; using twice the largest observed |phi| = " +
                           fmt_double(rep.bound));
  }
  for (std::size_t n : rep.n) rep.envelope.push_back(hoeffding_envelope(rep.bound, confidence, n));
  rep.slope = loglog_slope(rep.n, rep.delta);
  return rep;
}

nlohmann::json VanishingChangeReport::to_json() const {
  nlohmann::json j;
  j["observable"] = observable;
  j["estimator"] = estimator == ChangeEstimator::resample ? "resample" : "reuse";
  j["deterministic"] = deterministic;
  j["confidence"] = confidence;
  j["bound"] = bound;
  j["bound_estimated"] = bound_estimated;
  j["seed"] = seed;
  j["n"] = n;
  j["delta"] = delta;
  j["envelope"] = envelope;
  j["slope"] = slope ? nlohmann::json(*slope) : nlohmann::json(nullptr);
  j["telescoping_residual"] = telescoping_residual ? nlohmann::json(*telescoping_residual) : nlohmann::json(nullptr);
  j["warnings"] = warnings;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < delta.size(); ++i) inside += std::abs(delta[i]) <= envelope[i];
  j["inside_envelope"] = inside == delta.size();
  return j;
}

std::string VanishingChangeReport::to_csv() const {
  std::ostringstream os;
  os << "n,delta,envelope\n";
  for (std::size_t i = 0; i < n.size(); ++i) {
    os << n[i] << ',' << fmt_double(delta[i]) << ',' << fmt_double(envelope[i]) << '\n';
  }
  return os.str();
}

InvarianceResidual invariance_residual(const EmpiricalMeasure& measure, const UpdateMap& map, const Observable& phi,
                                       std::size_t num_resamples, std::uint64_t seed) {
  if (num_resamples < 1) throw InvalidInput("invariance_residual needs at least one resample");
  if (measure.atoms.empty()) throw InvalidInput("invariance_residual on an empty measure");
  const std::size_t k = measure.atoms.size();
  std::vector<double> diffs;
  std::vector<double> w;
  diffs.reserve(k * num_resamples);
  std::vector<double> base(k);
  for (std::size_t i = 0; i < k; ++i) base[i] = phi(measure.atoms[i]);
  for (std::size_t r = 0; r < num_resamples; ++r) {
    MinibatchSampler sampler(map, derive_seed(seed, r));
    for (std::size_t i = 0; i < k; ++i) {
      const StepResult s = sgd_step(map, measure.atoms[i], sampler);
      if (!s.finite) throw InvalidInput("invariance_residual: non-finite step at atom " + std::to_string(i));
      diffs.push_back(base[i] - phi(s.next));
      w.push_back(measure.weights[i] / static_cast<double>(num_resamples));
    }
  }
  CompensatedSum mean;
  double sum_w2 = 0.0;
  for (std::size_t j = 0; j < diffs.size(); ++j) {
    mean.add(w[j] * diffs[j]);
    sum_w2 += w[j] * w[j];
  }
  InvarianceResidual out;
  out.residual = mean.value();
  double var = 0.0;
  for (std::size_t j = 0; j < diffs.size(); ++j) var += w[j] * (diffs[j] - out.residual) * (diffs[j] - out.residual);
  // Weighted variance with the unbiased correction, then scaled by sum w^2.
  if (diffs.size() > 1 && sum_w2 < 1.0) out.std_error = std::sqrt(var / (1.0 - sum_w2) * sum_w2);
  return out;
}

double energy_distance_1d(std::vector<double> a, std::vector<double> wa, std::vector<double> b,
                          std::vector<double> wb) {
  if (a.empty() || b.empty()) throw InvalidInput("energy distance of an empty sample");
  if (wa.size() != a.size() || wb.size() != b.size()) throw InvalidInput("energy distance: weight count mismatch");
  struct Point {
    double x;
    double da;
    double db;
  };
  std::vector<Point> pts;
  pts.reserve(a.size() + b.size());
  const double sa = std::accumulate(wa.begin(), wa.end(), 0.0);
  const double sb = std::accumulate(wb.begin(), wb.end(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) pts.push_back({a[i], wa[i] / sa, 0.0});
  for (std::size_t i = 0; i < b.size(); ++i) pts.push_back({b[i], 0.0, wb[i] / sb});
  std::sort(pts.begin(), pts.end(), [](const Point& p, const Point& q) { return p.x < q.x; });
  double fa = 0.0, fb = 0.0, integral = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    fa += pts[i].da;
    fb += pts[i].db;
    const double gap = pts[i + 1].x - pts[i].x;
    if (gap > 0.0) integral += gap * (fa - fb) * (fa - fb);
  }
  return std::sqrt(2.0 * integral);
}

double measure_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b, std::size_t num_projections,
                        std::uint64_t seed) {
  if (a.atoms.empty() || b.atoms.empty()) throw InvalidInput("measure_distance on an empty measure");
  const std::size_t dim = a.atoms.front().size();
  for (const auto* m : {&a, &b}) {
    for (const auto& atom : m->atoms) {
      if (atom.size() != dim) throw InvalidInput("measure_distance: atoms have different dimensions");
    }
  }
  if (num_projections == 0) throw InvalidInput("measure_distance needs at least one projection");
  Rng rng(derive_seed(seed, 0x510ced));
  Eigen::VectorXd u(static_cast<Eigen::Index>(dim));
  CompensatedSum total;
  std::vector<double> pa(a.size()), pb(b.size());
  for (std::size_t p = 0; p < num_projections; ++p) {
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = standard_normal(rng);
    u /= u.norm();
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] = a.atoms[i].vec().dot(u);
    for (std::size_t i = 0; i < b.size(); ++i) pb[i] = b.atoms[i].vec().dot(u);
    total.add(energy_distance_1d(pa, a.weights, pb, b.weights));
  }
  return total.value() / static_cast<double>(num_projections);
}

}  // namespace ergodyn
