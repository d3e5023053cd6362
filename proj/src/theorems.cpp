#include "ergodyn/theorems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ergodyn/errors.hpp"
#include "ergodyn/format.hpp"
#include "ergodyn/linalg.hpp"

namespace ergodyn {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::not_applicable: return "N-A";
  }
  return "?";
}

int exit_code(Verdict v) { return v == Verdict::fail ? 1 : 0; }

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json spec_json(const MlpSpec& spec) {
  nlohmann::json j;
  j["widths"] = spec.widths;
  std::vector<std::string> acts;
  for (auto a : spec.activations) acts.push_back(to_string(a));
  j["activations"] = acts;
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------

double compact_radius(std::size_t num_layers, double weight_decay, double c_ell, double c_sigma) {
  if (num_layers < 3) {
    throw PreconditionError("compact-domain radius needs L >= 3 layers (exponent 1/(L-2)); got L = " +
                            std::to_string(num_layers));
  }
  if (!(weight_decay > 0.0)) throw PreconditionError("compact-domain check needs weight decay > 0");
  const double L = static_cast<double>(num_layers);
  return std::pow(weight_decay / (c_ell * std::pow(c_sigma, L)), 1.0 / (L - 2.0));
}

double compact_loss_bound(std::size_t num_layers, double weight_decay, double c_ell, double c_sigma,
                          int num_classes) {
  const double L = static_cast<double>(num_layers);
  return std::log(static_cast<double>(num_classes)) +
         std::pow(weight_decay / (c_ell * c_sigma * c_sigma), L / (L - 2.0));
}

namespace {

double max_layer_norm(const ParamVector& theta, std::size_t layers, std::vector<Eigen::VectorXd>& warm) {
  double worst = 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto r = operator_norm(Eigen::MatrixXd(theta.block(l)), 1e-12, 1000, 0x5eed + l, &warm[l]);
    worst = std::max(worst, r.value);
  }
  return worst;
}

}  // namespace

CompactDomainReport check_compact_domain(const CompactDomainConfig& cfg) {
  cfg.spec.validate();
  if (!cfg.data) throw ConfigError("compact-domain check needs a dataset");
  const std::size_t layers = cfg.spec.num_layers();

  CompactDomainReport rep;
  rep.num_layers = layers;
  rep.weight_decay = cfg.weight_decay;
  rep.eta = cfg.eta;
  rep.c_sigma = cfg.spec.activation_lipschitz();
  rep.c_ell = kCrossEntropyLipschitz;
  rep.radius = compact_radius(layers, cfg.weight_decay, rep.c_ell, rep.c_sigma);
  rep.loss_bound = compact_loss_bound(layers, cfg.weight_decay, rep.c_ell, rep.c_sigma, cfg.data->num_classes());
  rep.output_norm_bound = std::pow(rep.radius * rep.c_sigma, static_cast<double>(layers));
  rep.step_precondition = cfg.eta <= 1.0 / cfg.weight_decay;
  rep.config = {{"spec", spec_json(cfg.spec)},
                {"weight_decay", cfg.weight_decay},
                {"eta", cfg.eta},
                {"steps", cfg.steps},
                {"batch_size", cfg.batch_size},
                {"seed", cfg.seed},
                {"init_radius_factor", cfg.init_radius_factor},
                {"examples", cfg.data->size()}};

  Rng init_rng(derive_seed(cfg.seed, kStreamInit));
  ParamVector theta;
  if (cfg.init_radius_factor <= 1.0) {
    theta = init_compact(cfg.spec, rep.radius * cfg.init_radius_factor, init_rng);
  } else {
    theta = init_gaussian(cfg.spec, 1.0, init_rng);
    for (std::size_t l = 0; l < layers; ++l) {
      auto blk = theta.block(l);
      blk *= cfg.init_radius_factor * rep.radius / operator_norm(Eigen::MatrixXd(blk)).value;
    }
  }

  ObjectivePtr base = cfg.objective ? cfg.objective : std::make_shared<MlpObjective>(cfg.spec, cfg.data);
  const MlpObjective loss_obj(cfg.spec, cfg.data);
  UpdateMap map{base, cfg.eta, cfg.weight_decay, cfg.batch_size, SamplingMode::iid, cfg.seed};
  MinibatchSampler sampler(map, derive_seed(cfg.seed, kStreamSampling));

  std::vector<Eigen::VectorXd> warm(layers);
  const double op_limit = rep.radius + 1e-8;
  auto record = [&](const ParamVector& th) {
    const double op = max_layer_norm(th, layers, warm);
    const double loss = std::abs(loss_obj.full_loss(th));
    rep.max_op_norm.push_back(op);
    rep.abs_loss.push_back(loss);
    rep.worst_op_norm = std::max(rep.worst_op_norm, op);
    rep.worst_abs_loss = std::max(rep.worst_abs_loss, loss);
    if (!(op <= op_limit)) ++rep.op_violations;
    if (!(loss <= rep.loss_bound)) ++rep.loss_violations;
  };
  record(theta);
  rep.init_precondition = rep.op_violations == 0;
  rep.op_violations = 0;
  rep.loss_violations = 0;
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    StepResult r = sgd_step(map, theta, sampler);
    if (!r.finite) {
      ++rep.op_violations;
      break;
    }
    theta = std::move(r.next);
    record(theta);
  }
  if (!rep.step_precondition || !rep.init_precondition) {
    rep.verdict = Verdict::not_applicable;
  } else {
    rep.verdict = rep.op_violations == 0 && rep.loss_violations == 0 ? Verdict::pass : Verdict::fail;
  }
  return rep;
}

nlohmann::json CompactDomainReport::to_json() const {
  nlohmann::json j;
  j["check"] = "compact";
  j["verdict"] = to_string(verdict);
  j["config"] = config;
  j["num_layers"] = num_layers;
  j["weight_decay"] = weight_decay;
  j["eta"] = eta;
  j["c_sigma"] = c_sigma;
  j["c_ell"] = c_ell;
  j["radius"] = radius;
  j["loss_bound"] = loss_bound;
  j["output_norm_bound"] = output_norm_bound;
  j["worst_op_norm"] = worst_op_norm;
  j["worst_abs_loss"] = worst_abs_loss;
  j["op_violations"] = op_violations;
  j["loss_violations"] = loss_violations;
  j["step_precondition"] = step_precondition;
  j["init_precondition"] = init_precondition;
  j["max_op_norm_per_step"] = max_op_norm;
  j["abs_loss_per_step"] = abs_loss;
  return j;
}

std::string CompactDomainReport::summary() const {
  std::ostringstream os;
  os << to_string(verdict) << " compact: max ||W_l||_op " << fmt_double(worst_op_norm) << " <= w "
     << fmt_double(radius) << " (margin " << fmt_double(radius - worst_op_norm) << "), max |L_S| "
     << fmt_double(worst_abs_loss) << " <= " << fmt_double(loss_bound) << ", violations " << op_violations << "/"
     << loss_violations;
  if (!step_precondition) os << " [eta > 1/gamma]";
  if (!init_precondition) os << " [init outside C_w]";
  return os.str();
}

// ---------------------------------------------------------------------------

BnReport check_bn_bounds(const BnConfig& cfg) {
  if (cfg.batch_size < 2) throw PreconditionError("batch-norm check needs batch size m >= 2");
  if (!(cfg.weight_decay > 0.0)) throw PreconditionError("batch-norm check needs weight decay > 0");
  if (!cfg.data) throw ConfigError("batch-norm check needs a dataset");
  auto obj = std::make_shared<BnMlpObjective>(cfg.spec, cfg.data, cfg.epsilon);

  BnReport rep;
  rep.batch_size = cfg.batch_size;
  rep.weight_decay = cfg.weight_decay;
  rep.eta = cfg.eta;
  rep.scale_bound = bn_scale_bound(cfg.batch_size, cfg.weight_decay);
  rep.xhat_bound = std::sqrt(static_cast<double>(cfg.batch_size));
  rep.loss_bound = 4.0 * static_cast<double>(cfg.batch_size) / cfg.weight_decay +
                   std::log(static_cast<double>(cfg.data->num_classes()));
  rep.step_precondition = cfg.eta <= 1.0 / cfg.weight_decay;
  rep.config = {{"spec", spec_json(cfg.spec)}, {"weight_decay", cfg.weight_decay}, {"eta", cfg.eta},
                {"batch_size", cfg.batch_size}, {"steps", cfg.steps},      {"seed", cfg.seed},
                {"epsilon", cfg.epsilon},       {"examples", cfg.data->size()}};

  Rng init_rng(derive_seed(cfg.seed, kStreamInit));
  ParamVector theta = init_bn_mlp(*obj, 1.0, rep.scale_bound, init_rng);

  UpdateMap map{obj, cfg.eta, cfg.weight_decay, cfg.batch_size, SamplingMode::iid, cfg.seed};
  MinibatchSampler sampler(map, derive_seed(cfg.seed, kStreamSampling));
  const double scale_limit = rep.scale_bound + 1e-10;
  auto track_scale = [&](const ParamVector& th) {
    const double a = th.block(obj->scale_block()).cwiseAbs().maxCoeff();
    rep.max_abs_scale = std::max(rep.max_abs_scale, a);
    if (!(a <= scale_limit)) rep.scale_ok = false;
  };
  track_scale(theta);
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    auto batch = sampler.next();
    const auto eval = obj->evaluate(theta, batch);
    const double xhat = eval.bn.normalized.cwiseAbs().maxCoeff();
    rep.max_abs_xhat = std::max(rep.max_abs_xhat, xhat);
    if (!(xhat <= rep.xhat_bound)) rep.xhat_ok = false;
    rep.max_abs_loss = std::max(rep.max_abs_loss, std::abs(eval.loss));
    if (!(std::abs(eval.loss) <= rep.loss_bound)) rep.loss_ok = false;
    StepResult r = apply_update(map, theta, std::move(batch), cfg.eta);
    if (!r.finite) {
      rep.scale_ok = false;
      break;
    }
    theta = std::move(r.next);
    track_scale(theta);
    ++rep.steps;
  }
  if (!rep.step_precondition) {
    rep.verdict = Verdict::not_applicable;
  } else {
    rep.verdict = rep.scale_ok && rep.xhat_ok && rep.loss_ok ? Verdict::pass : Verdict::fail;
  }
  return rep;
}

nlohmann::json BnReport::to_json() const {
  return {{"check", "bn"},
          {"verdict", to_string(verdict)},
          {"config", config},
          {"batch_size", batch_size},
          {"weight_decay", weight_decay},
          {"eta", eta},
          {"scale_bound", scale_bound},
          {"xhat_bound", xhat_bound},
          {"loss_bound", loss_bound},
          {"max_abs_scale", max_abs_scale},
          {"max_abs_xhat", max_abs_xhat},
          {"max_abs_loss", max_abs_loss},
          {"steps", steps},
          {"scale_ok", scale_ok},
          {"xhat_ok", xhat_ok},
          {"loss_ok", loss_ok},
          {"step_precondition", step_precondition}};
}

std::string BnReport::summary() const {
  std::ostringstream os;
  os << to_string(verdict) << " bn: max |a_L| " << fmt_double(max_abs_scale) << " <= " << fmt_double(scale_bound)
     << ", max |x_hat| " << fmt_double(max_abs_xhat) << " <= " << fmt_double(xhat_bound) << ", max |L_B| "
     << fmt_double(max_abs_loss) << " <= " << fmt_double(loss_bound) << " over " << steps << " steps";
  if (!step_precondition) os << " [eta > 1/gamma]";
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

double interquartile_range(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return quantile(0.75) - quantile(0.25);
}

}  // namespace

InvarianceDetection detect_invariance(const std::vector<double>& losses, std::size_t window,
                                      std::optional<double> tol) {
  if (window < 2) throw InvalidInput("invariance window must be at least 2");
  InvarianceDetection d;
  const auto w = static_cast<std::ptrdiff_t>(window);
  auto window_mean = [&](std::size_t k) {
    const auto first = losses.begin() + static_cast<std::ptrdiff_t>(k) * w;
    return std::accumulate(first, first + w, 0.0) / static_cast<double>(window);
  };
  // Per-step change of the windowed mean loss: the mean of L[t + W] - L[t] over
  // the W start points of window k - 1, divided by W. Averaging over start
  // points keeps the phase of a periodic orbit from leaking into the statistic.
  std::size_t run = 0;
  for (std::size_t k = 1; (k + 1) * window <= losses.size(); ++k) {
    const double stat = std::abs(window_mean(k) - window_mean(k - 1)) / static_cast<double>(window);
    double t;
    if (tol) {
      t = *tol;
    } else {
      const auto first = losses.begin() + static_cast<std::ptrdiff_t>(k) * w;
      t = kDefaultIqrFraction * interquartile_range(std::vector<double>(first, first + w));
    }
    d.last_statistic = stat;
    d.last_tolerance = t;
    run = stat <= t ? run + 1 : 0;
    if (run == 3) {
      d.reached = true;
      d.step = (k - 2) * window;  // start of the later window of the first passing pair
      return d;
    }
  }
  return d;
}

InvarianceDetection detect_invariance(const Trajectory& traj, const Objective& obj, std::size_t window,
                                      std::optional<double> tol) {
  if (traj.stride != 1) throw InvalidInput("detect_invariance needs stride-1 storage");
  std::vector<double> losses;
  losses.reserve(traj.iterates.size());
  for (const auto& th : traj.iterates) losses.push_back(obj.full_loss(th));
  return detect_invariance(losses, window, tol);
}

// ---------------------------------------------------------------------------

namespace {

std::optional<double> estimate_m_hat(const Objective& f, const EmpiricalMeasure& mu, std::size_t pairs, Rng& rng) {
  constexpr int kPoints = 4;
  constexpr int kIters = 20;
  const auto batch = all_indices(f.num_examples());
  double worst_sq = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    const ParamVector& a = mu.atoms[uniform_index(rng, mu.size())];
    const ParamVector& b = mu.atoms[uniform_index(rng, mu.size())];
    const ParamVector diff = a - b;
    if (diff.norm() == 0.0) continue;
    std::vector<ParamVector> z;
    for (int k = 0; k < kPoints; ++k) z.push_back(b + ((k + 0.5) / kPoints) * diff);
    double mean_sq = 0.0;
    ParamVector dir = a.zeros_like();
    for (int k = 0; k < kPoints; ++k) {
      const LinearOperator op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        dir.vec() = v;
        Eigen::VectorXd avg = Eigen::VectorXd::Zero(v.size());
        for (int j = 0; j < kPoints; ++j) avg += hvp(f, z[j], dir, batch).vec();
        avg /= kPoints;
        return hvp(f, z[k], dir, batch).vec() - avg;
      };
      const auto r = power_iteration(op, static_cast<Eigen::Index>(a.size()),
                                     {1e-3, kIters, derive_seed(p, static_cast<std::uint64_t>(k))});
      mean_sq += r.magnitude * r.magnitude / kPoints;
    }
    worst_sq = std::max(worst_sq, mean_sq);
  }
  return std::sqrt(worst_sq);
}

}  // namespace

bool SmallerStepReport::single_sign_change() const {
  bool seen_negative = false;
  for (double e : estimate) {
    if (e < 0.0) {
      seen_negative = true;
    } else if (seen_negative) {
      return false;
    }
  }
  return true;
}

SmallerStepReport check_smaller_step(const EmpiricalMeasure& measure, const UpdateMap& map,
                                     const SmallerStepConfig& cfg) {
  if (measure.size() < 10) {
    throw InvalidInput("smaller-step check needs a measure with at least 10 atoms (got " +
                       std::to_string(measure.size()) + ")");
  }
  if (cfg.samples < 100) throw InvalidInput("smaller-step check needs at least 100 samples per c");
  if (cfg.c_grid.empty()) throw InvalidInput("smaller-step check needs a non-empty c grid");
  for (std::size_t i = 0; i < cfg.c_grid.size(); ++i) {
    if (!(cfg.c_grid[i] > 0.0 && cfg.c_grid[i] < 1.0)) throw InvalidInput("c grid values must lie in (0, 1)");
    if (i > 0 && !(cfg.c_grid[i] < cfg.c_grid[i - 1])) throw InvalidInput("c grid must be strictly descending");
  }
  ObjectivePtr f = map.weight_decay > 0.0 ? std::make_shared<RegularizedObjective>(map.objective, map.weight_decay)
                                          : map.objective;

  SmallerStepReport rep;
  rep.eta = map.step_size;
  rep.c_grid = cfg.c_grid;
  rep.atoms = measure.size();
  rep.config = {{"c_grid", cfg.c_grid},       {"samples", cfg.samples},        {"eps_stat", cfg.eps_stat},
                {"seed", cfg.seed},           {"eta", map.step_size},          {"weight_decay", map.weight_decay},
                {"batch_size", map.batch_size}, {"sampling", to_string(map.sampling)},
                {"atoms", measure.size()},    {"first_step", measure.first_step}, {"last_step", measure.last_step}};

  CompensatedSum sq;
  std::vector<double> atom_loss(measure.size());
  for (std::size_t i = 0; i < measure.size(); ++i) {
    ParamVector g;
    const auto all = all_indices(f->num_examples());
    atom_loss[i] = f->loss_and_grad(measure.atoms[i], all, g);
    sq.add(measure.weights[i] * g.squared_norm());
  }
  rep.mean_sq_grad = sq.value();
  if (rep.mean_sq_grad <= cfg.eps_stat) {
    rep.not_applicable = true;
    rep.verdict = Verdict::not_applicable;
    return rep;
  }

  Rng rng(derive_seed(cfg.seed, kStreamDiagnostics));
  // Atom choice by inverse CDF of the weights.
  std::vector<double> cdf(measure.size());
  std::partial_sum(measure.weights.begin(), measure.weights.end(), cdf.begin());
  MinibatchSampler sampler(map, derive_seed(cfg.seed, kStreamResample));
  const std::size_t nc = cfg.c_grid.size();
  std::vector<std::vector<double>> changes(nc);
  for (std::size_t s = 0; s < cfg.samples; ++s) {
    const double u = uniform01(rng) * cdf.back();
    const auto i = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()), measure.size() - 1);
    const ParamVector& theta = measure.atoms[i];
    ParamVector g;
    f->loss_and_grad(theta, sampler.next(), g);
    rep.g_max = std::max(rep.g_max, g.norm());
    for (std::size_t c = 0; c < nc; ++c) {
      ParamVector moved = theta;
      moved.axpy(-cfg.c_grid[c] * map.step_size, g);
      changes[c].push_back(f->full_loss(moved) - atom_loss[i]);
    }
  }
  rep.samples = cfg.samples;
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& v = changes[c];
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    rep.estimate.push_back(mean);
    rep.std_error.push_back(std::sqrt(ss / (n - 1.0) / n));
  }
  for (std::size_t c = 0; c < nc; ++c) {
    if (rep.estimate[c] + 2.0 * rep.std_error[c] < 0.0) {
      rep.best_c = cfg.c_grid[c];
      break;
    }
  }
  if (cfg.m_hat_pairs > 0) rep.m_hat = estimate_m_hat(*f, measure, cfg.m_hat_pairs, rng);
  rep.verdict = rep.best_c ? Verdict::pass : Verdict::fail;
  return rep;
}

nlohmann::json SmallerStepReport::to_json() const {
  return {{"check", "smallerstep"},
          {"verdict", to_string(verdict)},
          {"config", config},
          {"eta", eta},
          {"c_grid", c_grid},
          {"estimate", estimate},
          {"std_error", std_error},
          {"mean_sq_grad", mean_sq_grad},
          {"g_max", g_max},
          {"m_hat_estimate", optional_json(m_hat)},
          {"best_c", optional_json(best_c)},
          {"not_applicable", not_applicable},
          {"single_sign_change", single_sign_change()},
          {"samples", samples},
          {"atoms", atoms}};
}

std::string SmallerStepReport::summary() const {
  std::ostringstream os;
  os << to_string(verdict) << " smallerstep: ";
  if (not_applicable) {
    os << "E||grad L||^2 = " << fmt_double(mean_sq_grad) << " (measure on stationary points)";
    return os.str();
  }
  if (best_c) {
    const auto i = static_cast<std::size_t>(std::find(c_grid.begin(), c_grid.end(), *best_c) - c_grid.begin());
    os << "c = " << fmt_double(*best_c) << " gives change " << fmt_double(estimate[i]) << " +- "
       << fmt_double(std_error[i]) << " (2 s.e. margin " << fmt_double(-(estimate[i] + 2.0 * std_error[i])) << ")";
  } else {
    os << "no c in the grid is negative at 2 standard errors";
  }
  return os.str();
}

// ---------------------------------------------------------------------------

CeLemmaReport check_ce_lemma(const std::vector<int>& dims, std::size_t trials, std::uint64_t seed) {
  if (dims.empty()) throw InvalidInput("cross-entropy check needs at least one dimension");
  for (int d : dims) {
    if (d < 2) throw InvalidInput("cross-entropy check needs d >= 2");
  }
  if (trials < 1) throw InvalidInput("cross-entropy check needs at least one trial");
  CeLemmaReport rep;
  rep.dims = dims;
  rep.trials = trials;
  rep.seed = seed;
  Rng rng(seed);
  const double lip = kCrossEntropyLipschitz;
  for (std::size_t t = 0; t < trials; ++t) {
    const int d = dims[t % dims.size()];
    const int y = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(d)));
    Eigen::VectorXd x(d);
    double c;
    if (t % 10 == 9) {
      // Saturated logits t * e_k.
      x.setZero();
      x[static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(d)))] = 50.0;
      c = 50.0;
    } else {
      c = 20.0 * (1.0 - uniform01(rng));  // (0, 20]
      const double offset = 100.0 * (uniform01(rng) - 0.5);
      for (int k = 0; k < d; ++k) x[k] = offset + c * uniform01(rng);
    }
    const auto ce = cross_entropy(x, y);
    const double bound = c + std::log(static_cast<double>(d));
    rep.max_bound_ratio = std::max(rep.max_bound_ratio, std::abs(ce.value) / bound);
    if (!(std::abs(ce.value) <= bound * (1.0 + 1e-12))) ++rep.bound_violations;

    const double gn = ce.grad.norm();
    rep.max_grad_norm = std::max(rep.max_grad_norm, gn);
    if (!(gn <= lip + 1e-9)) ++rep.gradient_violations;

    Eigen::VectorXd x2(d);
    const double scale = std::pow(10.0, 4.0 * uniform01(rng) - 3.0);
    for (int k = 0; k < d; ++k) x2[k] = x[k] + scale * standard_normal(rng);
    const double dist = (x - x2).norm();
    const double diff = std::abs(ce.value - cross_entropy(x2, y).value);
    if (dist > 0.0) rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, diff / dist);
    // Absolute slack covers rounding in the two log-sum-exp evaluations.
    if (!(diff <= lip * dist + 1e-12 * (1.0 + std::abs(ce.value)))) ++rep.lipschitz_violations;
  }
  rep.verdict = rep.bound_violations + rep.gradient_violations + rep.lipschitz_violations == 0 ? Verdict::pass
                                                                                              : Verdict::fail;
  return rep;
}

nlohmann::json CeLemmaReport::to_json() const {
  return {{"check", "celemma"},
          {"verdict", to_string(verdict)},
          {"dims", dims},
          {"trials", trials},
          {"seed", seed},
          {"bound_violations", bound_violations},
          {"gradient_violations", gradient_violations},
          {"lipschitz_violations", lipschitz_violations},
          {"max_grad_norm", max_grad_norm},
          {"max_bound_ratio", max_bound_ratio},
          {"max_lipschitz_ratio", max_lipschitz_ratio}};
}

std::string CeLemmaReport::summary() const {
  std::ostringstream os;
  os << to_string(verdict) << " celemma: " << trials << " trials, violations " << bound_violations << "/"
     << gradient_violations << "/" << lipschitz_violations << ", max ||grad|| " << fmt_double(max_grad_norm)
     << " <= sqrt2 (margin " << fmt_double(kCrossEntropyLipschitz - max_grad_norm) << ")";
  return os.str();
}

}  // namespace ergodyn
