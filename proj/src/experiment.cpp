#include "ergodyn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "ergodyn/batchnorm.hpp"
#include "ergodyn/errors.hpp"
#include "ergodyn/format.hpp"
#include "ergodyn/measures.hpp"
#include "ergodyn/theorems.hpp"
#include "ergodyn/trajectory_io.hpp"

namespace ergodyn {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

template <class F>
auto keyed(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

fs::path out_dir(const ExperimentConfig& cfg) { return fs::path(cfg.get_string("out_dir", "out")); }

MlpSpec mlp_spec(const ExperimentConfig& cfg) {
  const auto widths = cfg.get_sizes("widths", {});
  if (widths.size() < 2) throw ConfigError("config key 'widths' needs at least two comma-separated layer widths");
  const auto acts = cfg.get_strings("activations", {"relu"});
  return keyed("activations", [&] {
    MlpSpec spec;
    if (acts.size() == 1) {
      spec = MlpSpec::make(widths, parse_activation(acts[0]));
    } else {
      spec.widths = widths;
      for (const auto& a : acts) spec.activations.push_back(parse_activation(a));
    }
    spec.validate();
    return spec;
  });
}

void check_spec_matches(const MlpSpec& spec, const Dataset& data) {
  if (spec.widths.front() != data.input_dim()) {
    throw ConfigError("config key 'widths': input width " + std::to_string(spec.widths.front()) +
                      " does not match the dataset dimension " + std::to_string(data.input_dim()));
  }
  if (spec.widths.back() != static_cast<std::size_t>(data.num_classes())) {
    throw ConfigError("config key 'widths': output width " + std::to_string(spec.widths.back()) +
                      " does not match the number of classes " + std::to_string(data.num_classes()));
  }
}

nlohmann::json dataset_json(const ExperimentConfig& cfg, const Dataset& data) {
  nlohmann::json j = {{"examples", data.size()},
                      {"input_dim", data.input_dim()},
                      {"classes", data.num_classes()},
                      {"input_scale", data.input_scale()}};
  const std::string src = cfg.get_string("dataset", "blobs");
  if (src == "blobs") {
    const BlobsSpec b = blobs_spec(cfg);
    j["source"] = "blobs";
    j["blobs"] = {{"classes", b.num_classes},
                  {"dim", b.input_dim},
                  {"per_class", b.per_class},
                  {"separation", b.separation},
                  {"seed", b.seed}};
  } else {
    j["source"] = fs::path(src).filename().string();
    j["label_column"] = cfg.get_string("label_column", "label");
  }
  return j;
}

std::string csv_field(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ';');
  return s;
}

// ---------------------------------------------------------------------------

struct RunContext {
  const ExperimentConfig& cfg;
  std::ostream& out;
  std::ostream& err;
  fs::path dir;
  std::vector<std::string> artifacts;
  nlohmann::json meta;
  RunSummary summary;

  void add(const std::string& name) { artifacts.push_back(name); }
  void finish() {
    meta["artifacts"] = artifacts;
    meta["exit_code"] = summary.exit_code;
    meta["status"] = summary.status;
    write_json(dir / "metadata.json", meta);
  }
};

nlohmann::json trajectory_summary(const Trajectory& traj) {
  return {{"steps_run", traj.num_steps()},
          {"stored_iterates", traj.iterates.size()},
          {"stride", traj.stride},
          {"sampling", to_string(traj.sampling)},
          {"batch_size", traj.batch_size},
          {"steps_per_epoch", traj.steps_per_epoch},
          {"weight_decay", traj.weight_decay},
          {"diverged", traj.diverged},
          {"truncated", traj.diverged},
          {"divergence_reason", traj.divergence_reason}};
}

DiagnosticsRecord coupled_quantities(const Objective& obj, const ParamVector& theta) {
  // Batch-coupled losses (batch norm) have no per-example gradients.
  DiagnosticsRecord r;
  ParamVector g;
  r.loss = obj.loss_and_grad(theta, all_indices(obj.num_examples()), g);
  r.grad_norm = g.norm();
  r.noise = std::numeric_limits<double>::quiet_NaN();
  r.g2 = std::numeric_limits<double>::quiet_NaN();
  r.sample_size = obj.num_examples();
  return r;
}

std::vector<DiagnosticsRecord> compute_diagnostics(const ExperimentConfig& cfg, const ModelSetup& m,
                                                   const Trajectory& traj, bool sharpness_default,
                                                   std::ostream& err) {
  const std::size_t steps = traj.num_steps();
  const std::size_t diag_every = cfg.get_size("diag_every", std::max<std::size_t>(1, m.steps / 1000));
  if (diag_every == 0) throw ConfigError("config key 'diag_every' must be positive");
  const std::size_t n = m.objective->num_examples();
  std::size_t sample_size = cfg.get_size("sample_size", 0);
  if (sample_size > n) {
    throw ConfigError("config key 'sample_size': " + std::to_string(sample_size) + " exceeds the " +
                      std::to_string(n) + " examples");
  }
  if (sample_size == 0 && n > kDefaultExactCap) {
    err << "warning: " << n << " examples exceed the exact-computation cap; diagnostics use a subsample of "
        << kDefaultExactCap << "\n";
    sample_size = kDefaultExactCap;
  }
  const bool coupled = m.objective_kind == "bn_mlp";
  const bool want_sharp = cfg.get_bool("sharpness", sharpness_default);
  const std::size_t sharp_every =
      cfg.get_size("sharpness_every", std::max<std::size_t>(diag_every, m.steps / 20));
  if (sharp_every == 0) throw ConfigError("config key 'sharpness_every' must be positive");
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  SharpnessOptions sopts;
  sopts.tol = cfg.get_double("sharpness_tol", sopts.tol);
  sopts.max_iters = static_cast<int>(cfg.get_size("sharpness_iters", static_cast<std::size_t>(sopts.max_iters)));
  sopts.seed = derive_seed(seed, kStreamDiagnostics);
  if (sopts.max_iters < 1) throw ConfigError("config key 'sharpness_iters' must be at least 1");

  Rng rng(derive_seed(seed, kStreamDiagnostics));
  const std::size_t batch = m.map.effective_batch();
  std::vector<DiagnosticsRecord> rows;
  for (std::size_t i = 0; i < traj.iterates.size(); ++i) {
    const std::size_t step = traj.iterate_steps[i];
    const bool last = i + 1 == traj.iterates.size();
    if (step % diag_every != 0 && !last) continue;
    const ParamVector& theta = traj.iterates[i];
    DiagnosticsRecord r;
    if (coupled) {
      r = coupled_quantities(*m.objective, theta);
    } else if (sample_size == 0 || sample_size == n) {
      r = full_quantities(*m.objective, theta, {}, batch);
    } else {
      r = full_quantities(*m.objective, theta, sample_size, rng, batch);
    }
    r.step = step;
    r.eta = schedule_eta(m.schedule, std::min(step, steps > 0 ? steps - 1 : 0), traj.steps_per_epoch);
    if (want_sharp && (step % sharp_every == 0 || last) && theta.all_finite()) {
      r.sharpness = sharpness(*m.objective, theta, {}, sopts).signed_value();
    }
    rows.push_back(r);
  }
  return rows;
}

void fill_summary(RunSummary& s, const std::vector<DiagnosticsRecord>& rows, const Trajectory& traj) {
  s.steps_run = traj.num_steps();
  if (rows.empty()) return;
  s.final_record = rows.back();
  const std::size_t tail = std::max<std::size_t>(1, rows.size() / 10);
  double loss = 0.0, grad = 0.0;
  for (std::size_t i = rows.size() - tail; i < rows.size(); ++i) {
    loss += rows[i].loss;
    grad += rows[i].grad_norm;
  }
  s.tail_loss = loss / static_cast<double>(tail);
  s.tail_grad_norm = grad / static_cast<double>(tail);
}

void write_epoch_csv(RunContext& ctx, const ModelSetup& m, const Trajectory& traj) {
  if (traj.sampling == SamplingMode::iid) {
    ctx.meta["epoch_csv"] = "skipped: epoch losses need epoch_shuffle or full_batch sampling";
    return;
  }
  std::string csv = "epoch,moving_loss,fixed_loss\n";
  const std::size_t spe = traj.steps_per_epoch;
  std::size_t written = 0;
  for (std::size_t e = 0; (e + 1) * spe <= traj.num_steps(); ++e) {
    if (!traj.has_step((e + 1) * spe)) continue;
    const EpochLossPair p = epoch_losses(traj, *m.objective, e);
    csv += std::to_string(p.epoch) + "," + fmt_double(p.moving) + "," + fmt_double(p.fixed) + "\n";
    ++written;
  }
  write_text(ctx.dir / "epoch.csv", csv);
  ctx.add("epoch.csv");
  ctx.meta["epochs"] = written;
}

void write_precision_csv(RunContext& ctx, const ModelSetup& m, const Trajectory& traj) {
  const auto sizes = ctx.cfg.get_sizes("precision_sizes", {});
  if (sizes.empty()) return;
  const std::size_t resamples = ctx.cfg.get_size("precision_resamples", 50);
  const auto rows = precision_sweep(*m.objective, traj.final_iterate(), sizes, resamples,
                                    derive_seed(ctx.cfg.get_u64("seed", 0), kStreamDiagnostics));
  std::string csv = "sample_size,loss_mean,loss_sd,grad_norm_mean,grad_norm_sd,noise_mean,noise_sd,resamples\n";
  for (const auto& r : rows) {
    csv += std::to_string(r.sample_size) + "," + fmt_double(r.loss_mean) + "," + fmt_double(r.loss_sd) + "," +
           fmt_double(r.grad_norm_mean) + "," + fmt_double(r.grad_norm_sd) + "," + fmt_double(r.noise_mean) +
           "," + fmt_double(r.noise_sd) + "," + std::to_string(r.resamples) + "\n";
  }
  write_text(ctx.dir / "precision.csv", csv);
  ctx.add("precision.csv");
}

std::vector<std::size_t> default_n_grid(std::size_t steps) {
  std::vector<std::size_t> grid;
  for (std::size_t n = 10; n < steps; n *= 10) grid.push_back(n);
  if (grid.empty()) grid.push_back(std::max<std::size_t>(1, steps > 1 ? steps - 1 : 1));
  return grid;
}

void run_measure_stats(RunContext& ctx, const ModelSetup& m, const Trajectory& traj) {
  const auto& cfg = ctx.cfg;
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  Observable phi = observables::by_name(cfg.get_string("phi", "loss"), m.objective);
  if (cfg.has("phi_bound")) phi.bound = cfg.get_double("phi_bound", 0.0);
  const double delta = cfg.get_double("delta", 0.1);
  const std::string est_name = cfg.get_string("estimator", "resample");
  if (est_name != "resample" && est_name != "reuse") {
    throw ConfigError("config key 'estimator': expected resample or reuse, got '" + est_name + "'");
  }
  const auto est = est_name == "reuse" ? ChangeEstimator::reuse : ChangeEstimator::resample;
  const auto grid = cfg.get_sizes("n_grid", default_n_grid(traj.num_steps()));

  const VanishingChangeReport vc = vanishing_change(traj, m.map, phi, delta, grid, derive_seed(seed, kStreamResample), est);
  write_text(ctx.dir / "vanishing_change.csv", vc.to_csv());
  ctx.add("vanishing_change.csv");

  const std::size_t last = traj.num_steps();
  const std::size_t first = cfg.get_size("measure_first", last / 2);
  if (first >= last) throw ConfigError("config key 'measure_first' must be below the number of steps");
  const EmpiricalMeasure mu = build_measure(traj, first, last, 1);
  const EmpiricalMeasure half = build_measure(traj, first, first + (last - first) / 2, 1);
  const std::size_t resamples = cfg.get_size("resamples", 8);
  const std::size_t projections = cfg.get_size("projections", kDefaultProjections);
  const InvarianceResidual ir =
      invariance_residual(mu, m.map, phi, resamples, derive_seed(derive_seed(seed, kStreamResample), 1));
  const double avg = time_average(mu, phi);
  const double dist = measure_distance(half, mu, projections, derive_seed(seed, kStreamDiagnostics));

  nlohmann::json rep = {{"observable", phi.name},
                        {"seed", seed},
                        {"vanishing_change", vc.to_json()},
                        {"measure", {{"first_step", first}, {"last_step", last}, {"atoms", mu.size()}}},
                        {"time_average", avg},
                        {"invariance_residual", {{"residual", ir.residual}, {"std_error", ir.std_error}, {"resamples", resamples}}},
                        {"distance_half_vs_full", dist},
                        {"projections", projections}};
  write_json(ctx.dir / "measure_report.json", rep);
  ctx.add("measure_report.json");
  ctx.out << "measure: phi=" << phi.name << " time average " << fmt_double(avg) << ", invariance residual "
          << fmt_double(ir.residual) << " +- " << fmt_double(ir.std_error) << ", slope "
          << (vc.slope ? fmt_double(*vc.slope) : std::string("n/a")) << "\n";
}

void run_dynamics(RunContext& ctx, const std::string& kind) {
  const auto& cfg = ctx.cfg;
  const ModelSetup m = build_model(cfg);
  if (kind == "measure" && m.stride != 1) {
    throw ConfigError("config key 'stride': the measure experiment needs every iterate (stride = 1)");
  }
  ctx.meta["objective"] = m.objective->describe();
  ctx.meta["dimension"] = m.theta0.size();
  if (m.data) ctx.meta["dataset"] = dataset_json(cfg, *m.data);

  const Trajectory traj = run_trajectory(m.map, m.schedule, m.theta0, m.steps, m.stride);
  ctx.meta["trajectory"] = trajectory_summary(traj);
  if (cfg.get_bool("save_trajectory", false)) {
    write_trajectory(traj, ctx.dir / "trajectory");
    ctx.add("trajectory/trajectory.bin");
    ctx.add("trajectory/trajectory.json");
    ctx.add("trajectory/records.csv");
  }

  const auto rows = compute_diagnostics(cfg, m, traj, kind == "diagnose", ctx.err);
  std::string csv = diagnostics_csv_header() + "\n";
  for (const auto& r : rows) csv += diagnostics_csv_row(r) + "\n";
  write_text(ctx.dir / "diagnostics.csv", csv);
  ctx.add("diagnostics.csv");
  fill_summary(ctx.summary, rows, traj);

  if (traj.diverged) {
    ctx.summary.exit_code = kExitFailure;
    ctx.summary.status = "diverged: " + traj.divergence_reason;
    ctx.err << "run diverged after " << traj.num_steps() << " steps (" << traj.divergence_reason
            << "); artifacts are truncated\n";
    return;
  }
  if (kind == "diagnose") {
    write_epoch_csv(ctx, m, traj);
    write_precision_csv(ctx, m, traj);
  }
  if (kind == "measure") run_measure_stats(ctx, m, traj);
  if (ctx.summary.final_record) {
    const auto& f = *ctx.summary.final_record;
    ctx.out << kind << ": " << traj.num_steps() << " steps, final loss " << fmt_double(f.loss) << ", grad_norm "
            << fmt_double(f.grad_norm) << "\n";
  }
}

// ---------------------------------------------------------------------------

void finish_check(RunContext& ctx, const std::string& name, const nlohmann::json& report, const std::string& line,
                  Verdict verdict) {
  write_json(ctx.dir / (name + "_report.json"), report);
  ctx.add(name + "_report.json");
  ctx.out << line << "\n";
  ctx.summary.exit_code = exit_code(verdict);
  ctx.summary.status = to_string(verdict);
}

void run_theorem(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const std::string which = cfg.require_string("theorem");
  ctx.meta["theorem"] = which;
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  if (which == "celemma") {
    const auto dims = cfg.get_sizes("ce_dims", {2, 10});
    std::vector<int> d(dims.begin(), dims.end());
    const auto rep = keyed("ce_dims", [&] { return check_ce_lemma(d, cfg.get_size("ce_trials", 10000), seed); });
    finish_check(ctx, "celemma", rep.to_json(), rep.summary(), rep.verdict);
    return;
  }
  if (which == "compact") {
    CompactDomainConfig c;
    c.spec = mlp_spec(cfg);
    auto data = load_dataset(cfg);
    check_spec_matches(c.spec, *data);
    c.data = data;
    c.weight_decay = cfg.get_double("gamma", 1.0);
    c.eta = cfg.get_double("eta0", 1.0 / c.weight_decay);
    c.steps = cfg.get_size("steps", 1000);
    c.batch_size = cfg.get_size("batch_size", 16);
    c.seed = seed;
    c.init_radius_factor = cfg.get_double("init_radius_factor", 1.0);
    ctx.meta["dataset"] = dataset_json(cfg, *data);
    const auto rep = check_compact_domain(c);
    finish_check(ctx, "compact", rep.to_json(), rep.summary(), rep.verdict);
    return;
  }
  if (which == "bn") {
    BnConfig c;
    c.spec = mlp_spec(cfg);
    auto data = load_dataset(cfg);
    check_spec_matches(c.spec, *data);
    c.data = data;
    c.weight_decay = cfg.get_double("gamma", 1.0);
    c.eta = cfg.get_double("eta0", 0.5 / c.weight_decay);
    c.batch_size = cfg.get_size("batch_size", 4);
    c.steps = cfg.get_size("steps", 1000);
    c.seed = seed;
    c.epsilon = cfg.get_double("bn_epsilon", kDefaultBnEpsilon);
    ctx.meta["dataset"] = dataset_json(cfg, *data);
    const auto rep = check_bn_bounds(c);
    finish_check(ctx, "bn", rep.to_json(), rep.summary(), rep.verdict);
    return;
  }
  if (which == "smallerstep") {
    const ModelSetup m = build_model(cfg);
    if (m.stride != 1) throw ConfigError("config key 'stride': the smaller-step check needs stride = 1");
    ctx.meta["objective"] = m.objective->describe();
    if (m.data) ctx.meta["dataset"] = dataset_json(cfg, *m.data);
    const Trajectory traj = run_trajectory(m.map, m.schedule, m.theta0, m.steps, 1);
    ctx.meta["trajectory"] = trajectory_summary(traj);
    if (traj.diverged) throw Error("trajectory diverged: " + traj.divergence_reason);
    const std::size_t window = cfg.get_size("window", kDefaultInvarianceWindow);
    std::optional<double> tol;
    if (cfg.has("tol")) tol = cfg.get_double("tol", 0.0);
    const InvarianceDetection det = keyed("window", [&] { return detect_invariance(traj, *m.objective, window, tol); });
    nlohmann::json inv = {{"window", window},
                          {"tol", tol ? nlohmann::json(*tol) : nlohmann::json("iqr")},
                          {"iqr_fraction", kDefaultIqrFraction},
                          {"reached", det.reached},
                          {"step", det.step},
                          {"last_statistic", det.last_statistic},
                          {"last_tolerance", det.last_tolerance}};
    if (!det.reached) {
      nlohmann::json rep = {{"check", "smallerstep"}, {"verdict", "FAIL"}, {"invariance", inv},
                            {"reason", "invariance not detected"}};
      finish_check(ctx, "smallerstep", rep,
                   "FAIL smallerstep: invariance not detected (last statistic " + fmt_double(det.last_statistic) +
                       ", tolerance " + fmt_double(det.last_tolerance) + ")",
                   Verdict::fail);
      return;
    }
    const EmpiricalMeasure mu = build_measure(traj, det.step, traj.num_steps(), 1);
    SmallerStepConfig sc;
    sc.c_grid = cfg.get_doubles("c_grid", sc.c_grid);
    sc.samples = cfg.get_size("samples", sc.samples);
    sc.eps_stat = cfg.get_double("eps_stat", sc.eps_stat);
    sc.m_hat_pairs = cfg.get_size("m_hat_pairs", 2);
    sc.seed = derive_seed(seed, kStreamResample);
    UpdateMap map = m.map;
    map.step_size = schedule_eta(m.schedule, traj.num_steps() - 1, traj.steps_per_epoch);
    const auto rep = keyed("c_grid", [&] { return check_smaller_step(mu, map, sc); });
    nlohmann::json j = rep.to_json();
    j["invariance"] = inv;
    finish_check(ctx, "smallerstep", j, rep.summary(), rep.verdict);
    return;
  }
  throw ConfigError("config key 'theorem': expected compact, bn, smallerstep or celemma, got '" + which + "'");
}

// ---------------------------------------------------------------------------

int run_sweep(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const std::string axis = cfg.require_string("sweep_axis");
  std::string key;
  if (axis == "seed") {
    key = "seed";
  } else if (axis == "eta") {
    key = "eta0";
  } else if (axis == "sample_size") {
    key = "sample_size";
  } else {
    throw ConfigError("config key 'sweep_axis': expected seed, eta or sample_size, got '" + axis + "'");
  }
  const auto values = cfg.get_strings("sweep_values", {});
  if (values.empty()) throw ConfigError("config key 'sweep_values' needs at least one value");
  for (const auto& v : values) {
    ExperimentConfig probe;
    probe.set(key, v);
    if (axis == "eta") {
      if (!(probe.get_double(key, 0.0) > 0.0)) throw ConfigError("config key 'sweep_values': eta must be positive");
    } else {
      probe.get_u64(key, 0);
    }
  }
  const std::string inner = cfg.get_string("sweep_experiment", "diagnose");
  if (inner == "sweep") throw ConfigError("config key 'sweep_experiment' cannot be sweep");
  const std::size_t workers = std::max<std::size_t>(1, cfg.get_size("workers", 1));

  std::vector<ExperimentConfig> subs;
  for (const auto& v : values) {
    ExperimentConfig sub = cfg;
    sub.set("experiment", inner);
    sub.set(key, v);
    sub.set("out_dir", (ctx.dir / (axis + "_" + v)).string());
    subs.push_back(std::move(sub));
  }
  std::vector<RunSummary> results(subs.size());
  std::vector<std::string> logs(subs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < subs.size(); i = next++) {
      std::ostringstream o;
      results[i] = run_experiment_summary(subs[i], o, o);
      logs[i] = o.str();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::min(workers, subs.size()); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::string csv = "axis,value,exit_code,status,steps,final_loss,final_grad_norm,final_noise,final_sharpness,"
                    "tail_loss,tail_grad_norm\n";
  int code = kExitOk;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const auto& r = results[i];
    ctx.out << "[" << axis << "=" << values[i] << "] " << logs[i];
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const DiagnosticsRecord f = r.final_record.value_or(DiagnosticsRecord{0, nan, nan, nan, nan, nan, nan, 0, nan});
    csv += axis + "," + values[i] + "," + std::to_string(r.exit_code) + "," + csv_field(r.status) + "," +
           std::to_string(r.steps_run) + "," + fmt_double(f.loss) + "," + fmt_double(f.grad_norm) + "," +
           fmt_double(f.noise) + "," + fmt_double(f.sharpness) + "," +
           fmt_double(r.final_record ? r.tail_loss : nan) + "," + fmt_double(r.final_record ? r.tail_grad_norm : nan) +
           "\n";
    if (r.exit_code != kExitOk) code = kExitFailure;
  }
  write_text(ctx.dir / "sweep.csv", csv);
  ctx.add("sweep.csv");
  ctx.meta["sweep"] = {{"axis", axis}, {"values", values}, {"experiment", inner}};
  ctx.summary.exit_code = code;
  ctx.summary.status = code == kExitOk ? "ok" : "some sub-runs failed";
  return code;
}

}  // namespace

// ---------------------------------------------------------------------------

BlobsSpec blobs_spec(const ExperimentConfig& cfg) {
  BlobsSpec b;
  b.num_classes = static_cast<int>(cfg.get_size("blobs_classes", 4));
  b.input_dim = cfg.get_size("blobs_dim", 2);
  b.per_class = cfg.get_size("blobs_per_class", 128);
  b.separation = cfg.get_double("blobs_separation", 3.0);
  b.seed = cfg.get_u64("blobs_seed", 12345);
  if (b.num_classes < 2) throw ConfigError("config key 'blobs_classes' must be at least 2");
  if (b.per_class < 1) throw ConfigError("config key 'blobs_per_class' must be at least 1");
  if (b.input_dim < 1) throw ConfigError("config key 'blobs_dim' must be at least 1");
  return b;
}

std::shared_ptr<const Dataset> load_dataset(const ExperimentConfig& cfg) {
  const std::string src = cfg.get_string("dataset", "blobs");
  if (src == "blobs") return std::make_shared<const Dataset>(make_blobs(blobs_spec(cfg)));
  fs::path p(src);
  if (p.is_relative() && !fs::exists(p)) {
    const fs::path alt = fs::path(cfg.source()).parent_path() / p;
    if (fs::exists(alt)) p = alt;
  }
  if (!fs::exists(p)) throw ConfigError("config key 'dataset': file not found: " + src);
  return keyed("dataset", [&] {
    return std::make_shared<const Dataset>(read_dataset_csv(p, cfg.get_string("label_column", "label")));
  });
}

ModelSetup build_model(const ExperimentConfig& cfg) {
  ModelSetup m;
  m.objective_kind = cfg.get_string("objective", "mlp");
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const double gamma = cfg.get_double("gamma", 0.0);
  if (!(gamma >= 0.0)) throw ConfigError("config key 'gamma' must be non-negative");
  Rng rng(derive_seed(seed, kStreamInit));

  std::vector<double> box;
  std::string init;
  if (m.objective_kind == "sin_product") {
    m.objective = std::make_shared<SinProductObjective>(cfg.get_double("sin_amplitude", 100.0));
    box = {0.0, std::numbers::pi};
    init = cfg.get_string("init", "box");
  } else if (m.objective_kind == "quadratic") {
    const auto diag = cfg.get_doubles("quadratic_diag", {});
    if (diag.empty()) throw ConfigError("config key 'quadratic_diag' is required for the quadratic objective");
    m.objective = std::make_shared<QuadraticObjective>(QuadraticObjective::diagonal(diag));
    box = {-1.0, 1.0};
    init = cfg.get_string("init", "box");
  } else if (m.objective_kind == "mlp" || m.objective_kind == "bn_mlp") {
    m.spec = mlp_spec(cfg);
    m.data = load_dataset(cfg);
    check_spec_matches(*m.spec, *m.data);
    if (m.objective_kind == "mlp") {
      m.objective = std::make_shared<MlpObjective>(*m.spec, m.data);
    } else {
      m.objective = std::make_shared<BnMlpObjective>(*m.spec, m.data, cfg.get_double("bn_epsilon", kDefaultBnEpsilon));
    }
    init = cfg.get_string("init", m.objective_kind == "mlp" ? "gaussian" : "bn");
  } else {
    throw ConfigError("config key 'objective': expected mlp, bn_mlp, sin_product or quadratic, got '" +
                      m.objective_kind + "'");
  }

  const std::size_t batch_size = cfg.get_size("batch_size", 0);
  const SamplingMode sampling = keyed("sampling", [&] { return parse_sampling(cfg.get_string("sampling", "iid")); });
  m.map = UpdateMap{m.objective, cfg.get_double("eta0", 0.1), gamma, batch_size, sampling, seed};
  if (!(m.map.step_size > 0.0)) throw ConfigError("config key 'eta0' must be positive");
  if (m.objective_kind == "bn_mlp" && m.map.effective_batch() < 2) {
    throw ConfigError("config key 'batch_size': batch normalization needs at least 2 examples per batch");
  }

  const ParamVector layout = m.objective->layout();
  if (init == "box") {
    box = cfg.get_doubles("init_box", box);
    if (box.size() != 2 || !(box[0] <= box[1])) throw ConfigError("config key 'init_box' needs 'low, high'");
    m.theta0 = layout;
    for (std::size_t i = 0; i < m.theta0.size(); ++i) m.theta0[i] = box[0] + (box[1] - box[0]) * uniform01(rng);
  } else if (init == "point") {
    const auto pt = cfg.get_doubles("init_point", {});
    if (pt.size() != layout.size()) {
      throw ConfigError("config key 'init_point' needs " + std::to_string(layout.size()) + " values");
    }
    m.theta0 = ParamVector(pt, layout.shapes());
  } else if (init == "gaussian" && m.spec && m.objective_kind == "mlp") {
    m.theta0 = init_gaussian(*m.spec, cfg.get_double("init_scale", std::numbers::sqrt2), rng);
  } else if (init == "compact" && m.spec && m.objective_kind == "mlp") {
    m.theta0 = init_compact(*m.spec, cfg.get_double("init_scale", 1.0), rng);
  } else if (init == "bn" && m.objective_kind == "bn_mlp") {
    const auto& bn = static_cast<const BnMlpObjective&>(*m.objective);
    const double bound = gamma > 0.0 ? bn_scale_bound(m.map.effective_batch(), gamma) : 1.0;
    m.theta0 = init_bn_mlp(bn, cfg.get_double("init_scale", std::numbers::sqrt2), bound, rng);
  } else {
    throw ConfigError("config key 'init': '" + init + "' is not available for objective " + m.objective_kind);
  }

  m.steps = cfg.get_size("steps", 1000);
  if (m.steps < 1) throw ConfigError("config key 'steps' must be at least 1");
  const std::string sched = cfg.get_string("schedule", "constant");
  const auto kind = keyed("schedule", [&] { return parse_schedule_kind(sched); });
  m.schedule.kind = kind;
  m.schedule.eta0 = m.map.step_size;
  m.schedule.factor = cfg.get_double("schedule_factor", 10.0);
  m.schedule.period_epochs = cfg.get_size("schedule_period_epochs", 30);
  m.schedule.total_steps = cfg.get_size("schedule_total_steps", m.steps);
  if (kind == Schedule::Kind::stage_decay && (!(m.schedule.factor > 0.0) || m.schedule.period_epochs == 0)) {
    throw ConfigError("config key 'schedule_factor' / 'schedule_period_epochs' must be positive");
  }
  if (kind == Schedule::Kind::cosine && m.schedule.total_steps == 0) {
    throw ConfigError("config key 'schedule_total_steps' must be positive");
  }
  m.stride = cfg.get_size("stride", default_stride(layout.size(), m.steps));
  if (m.stride < 1) throw ConfigError("config key 'stride' must be at least 1");
  return m;
}

void generate_dataset(const BlobsSpec& spec, const fs::path& path) {
  if (spec.num_classes < 2) throw ConfigError("blobs need at least 2 classes");
  if (spec.per_class < 1) throw ConfigError("blobs need at least 1 example per class");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_dataset_csv(make_blobs(spec), path);
}

RunSummary run_experiment_summary(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  RunSummary failed;
  try {
    const std::string kind = cfg.get_string("experiment", "simulate");
    if (kind != "simulate" && kind != "diagnose" && kind != "measure" && kind != "theorem" && kind != "sweep") {
      throw ConfigError("config key 'experiment': expected simulate, diagnose, measure, theorem or sweep, got '" +
                        kind + "'");
    }
    RunContext ctx{cfg, out, err, out_dir(cfg), {}, {}, {}};
    fs::create_directories(ctx.dir);
    ctx.meta["experiment"] = kind;
    ctx.meta["seed"] = cfg.get_u64("seed", 0);
    ctx.meta["config"] = cfg.to_json();
    try {
      if (kind == "theorem") {
        run_theorem(ctx);
      } else if (kind == "sweep") {
        run_sweep(ctx);
      } else {
        run_dynamics(ctx, kind);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      ctx.summary.exit_code = kExitFailure;
      ctx.summary.status = std::string("error: ") + e.what();
      err << "error: " << e.what() << "\n";
    }
    ctx.finish();
    return ctx.summary;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    failed.exit_code = kExitUsage;
    failed.status = std::string("config error: ") + e.what();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    failed.exit_code = kExitFailure;
    failed.status = std::string("error: ") + e.what();
  }
  return failed;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_experiment_summary(cfg, out, err).exit_code;
}

int run_experiment_file(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& overrides,
                        std::ostream& out, std::ostream& err) {
  try {
    ExperimentConfig cfg = ExperimentConfig::load(path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    return run_experiment(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace ergodyn
