#pragma once
// The five tool commands (train, simulate, evaluate, learning-curve, check)
// and the building blocks they share with the acceptance suite.

#include "gpct/common.hpp"
#include "gpct/control/conditions.hpp"
#include "gpct/control/controllers.hpp"
#include "gpct/dynamics/model.hpp"
#include "gpct/dynamics/properties.hpp"
#include "gpct/gp/io.hpp"
#include "gpct/gp/likelihood.hpp"
#include "gpct/gp/regression.hpp"
#include "gpct/harness/config.hpp"
#include "gpct/sim/io.hpp"
#include "gpct/sim/simulate.hpp"
#include "gpct/training/excitation.hpp"

#include <boost/version.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace gpct::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitDivergence = 3;

/// --seed overrides the scenario seed everywhere it is used.
inline void apply_seed(Scenario& sc, std::uint64_t seed) {
  sc.seed = seed;
  sc.sim.base_seed = seed;
  sc.training.plan.seed = seed;
}

inline void apply_realizations(Scenario& sc, int realizations) {
  if (realizations < 1) throw ConfigError("--realizations must be at least 1");
  sc.sim.realizations = realizations;
}

/// Calls f(plant, estimate, spring_estimate) with the concrete model types.
/// The spring estimate adds a linear spring with the plant's k1 to the
/// rigid estimate; for the wing it equals the estimate.
template <typename F>
decltype(auto) with_models(const Scenario& sc, F&& f) {
  const PlantSpec& p = sc.plant;
  if (p.kind == PlantKind::wing) {
    const dynamics::PendulumModel est = p.wing.estimate(p.estimate_scale);
    return f(p.wing, est, est);
  }
  const dynamics::TwoLinkArm est = p.arm.rigid_estimate(p.estimate_scale);
  dynamics::TwoLinkArm est_sp = est;
  est_sp.spring = p.arm.spring;
  est_sp.spring.k3 = 0.0;
  return f(p.arm, est, est_sp);
}

template <dynamics::ManipulatorModel Est, dynamics::ManipulatorModel EstSp>
control::AnyController make_controller(const std::string& type, const Scenario& sc, const Est& est,
                                       const EstSp& est_sp, std::shared_ptr<const gp::MultiGP> gp) {
  const auto& c = sc.controller;
  if (type == "hg-pd") return control::PdController(c.hg_gains);
  if (type == "lg-pd") return control::PdController(c.gains);
  if (type == "ct") return control::ComputedTorqueController<Est>(est, c.gains);
  if (type == "ct-sp") return control::ComputedTorqueController<EstSp>(est_sp, c.gains);
  if (type == "ct-gp") {
    if (!gp) throw ConfigError("ct-gp needs a trained GP");
    return control::CtGpController<Est>(est, std::move(gp), c.gains, c.gp_mode);
  }
  throw ConfigError("unknown controller type '" + type + "'");
}

/// m indices, one drawn uniformly from each of m equal strata of [0, total).
inline std::vector<Eigen::Index> stratified_subsample(Eigen::Index total, Eigen::Index m, std::uint64_t seed) {
  if (m > total)
    throw ConfigError("requested " + std::to_string(m) + " training points but only " + std::to_string(total) +
                      " are available");
  std::vector<Eigen::Index> idx;
  if (m <= 0) return idx;
  if (m == total) {
    for (Eigen::Index i = 0; i < total; ++i) idx.push_back(i);
    return idx;
  }
  std::mt19937_64 rng(seed);
  for (Eigen::Index s = 0; s < m; ++s) {
    const Eigen::Index lo = s * total / m;
    const Eigen::Index hi = (s + 1) * total / m;
    std::uniform_int_distribution<Eigen::Index> pick(lo, hi - 1);
    idx.push_back(pick(rng));
  }
  return idx;
}

/// Hyperparameters of an empty training set: the prior has zero signal, so
/// the GP contributes nothing.
inline gp::Hyperparameters empty_set_hyperparameters() { return {1.0, 0.0, 1.0}; }

struct FittedHyperparameters {
  std::vector<gp::Hyperparameters> hps;
  std::vector<double> log_likelihood;  ///< per output, NaN for an empty set
};

inline FittedHyperparameters fit_hyperparameters(const gp::TrainingSet& data, const TrainingSpec& spec) {
  FittedHyperparameters out;
  for (Eigen::Index i = 0; i < data.output_dim(); ++i) {
    if (data.size() == 0) {
      out.hps.push_back(empty_set_hyperparameters());
      out.log_likelihood.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    gp::OptimizerSettings settings;
    settings.budget = spec.optimizer_budget;
    settings.restarts = spec.optimizer_restarts;
    const auto i_out = static_cast<std::size_t>(i);
    const auto result = gp::optimize_hyperparameters_traced(data, i_out, gp::initial_guess(data, i_out), settings);
    out.hps.push_back(result.best);
    out.log_likelihood.push_back(gp::log_marginal_likelihood(data, result.best, i_out).value);
  }
  return out;
}

/// Generates the full training set of the scenario (before subsampling).
inline training::GeneratedTraining generate_training(const Scenario& sc) {
  return with_models(sc, [&](const auto& plant, const auto& est, const auto& est_sp) {
    if (sc.training.plan.mode == training::ExcitationMode::open_loop_torque)
      return training::generate_open_loop(sc.training.plan, plant, est);
    const auto ctrl = make_controller(sc.training.controller, sc, est, est_sp, nullptr);
    return training::generate_closed_loop(sc.training.plan, plant, est, ctrl, sc.reference);
  });
}

struct TrainOutcome {
  training::GeneratedTraining generated;  ///< before subsampling
  gp::TrainingSet data;                   ///< after subsampling
  FittedHyperparameters fitted;
};

inline TrainOutcome train(const Scenario& sc) {
  TrainOutcome out;
  out.generated = generate_training(sc);
  out.data = out.generated.data;
  if (sc.training.points >= 0) {
    const auto idx = stratified_subsample(out.data.size(), sc.training.points, sc.seed);
    out.data = out.data.subset(idx);
  }
  out.fitted = fit_hyperparameters(out.data, sc.training);
  return out;
}

inline std::filesystem::path ensure_dir(const std::string& out_dir) {
  std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

inline std::string training_path(const Scenario& sc, const std::filesystem::path& dir) {
  return sc.training.data_path.empty() ? (dir / "training.csv").string() : sc.training.data_path;
}

inline std::string hyperparameter_path(const Scenario& sc, const std::filesystem::path& dir) {
  return sc.training.hyperparameter_path.empty() ? (dir / "hyperparameters.txt").string()
                                                 : sc.training.hyperparameter_path;
}

inline int cmd_train(const Scenario& sc, const std::string& out_dir, std::ostream& log) {
  const auto dir = ensure_dir(out_dir);
  const TrainOutcome t = train(sc);
  const long m = static_cast<long>(t.data.size());
  {
    auto f = open_output(dir / "training.csv");
    gp::write_training_csv(f, t.data, manifest(sc, "training", m));
  }
  {
    auto f = open_output(dir / "hyperparameters.txt");
    gp::write_hyperparameters(f, t.fitted.hps, manifest(sc, "training", m));
  }
  {
    auto f = open_output(dir / "training_provenance.txt");
    f << "# " << manifest(sc, "training", m) << '\n' << training::provenance(sc.training.plan, t.generated.report);
    if (sc.training.plan.mode == training::ExcitationMode::closed_loop_tracking)
      f << "controller = " << sc.training.controller << '\n';
    f << "subsample = " << (sc.training.points >= 0 ? std::to_string(sc.training.points) : std::string("all"))
      << '\n';
  }
  {
    auto f = open_output(dir / "train_log.txt");
    f << "# " << manifest(sc, "training", m) << '\n';
    for (std::size_t i = 0; i < t.fitted.hps.size(); ++i) {
      const auto& hp = t.fitted.hps[i];
      f << "output " << i + 1 << ": lambda = " << format_double(hp.length_scale)
        << ", sigma_f = " << format_double(hp.signal_std) << ", sigma_n = " << format_double(hp.noise_std)
        << ", log_likelihood = " << format_double(t.fitted.log_likelihood[i]) << '\n';
    }
  }
  log << "train: " << m << " points (" << t.generated.report.dropped << " dropped cells), " << t.fitted.hps.size()
      << " output(s)\n";
  for (std::size_t i = 0; i < t.fitted.hps.size(); ++i)
    log << "  output " << i + 1 << " log likelihood " << format_double(t.fitted.log_likelihood[i]) << '\n';
  return kExitOk;
}

/// Loads the training set and hyperparameters written by `train`.
inline std::shared_ptr<const gp::MultiGP> load_gp(const Scenario& sc, const std::filesystem::path& dir) {
  const std::string data_path = training_path(sc, dir);
  const std::string hp_path = hyperparameter_path(sc, dir);
  if (!std::filesystem::exists(data_path)) throw ConfigError("missing training set '" + data_path + "' (run train)");
  if (!std::filesystem::exists(hp_path)) throw ConfigError("missing hyperparameters '" + hp_path + "' (run train)");
  const gp::TrainingSet data = gp::load_training_csv(data_path);
  const auto hps = gp::load_hyperparameters(hp_path);
  const Eigen::Index n = sc.plant.dof();
  if (data.input_dim() != 3 * n || data.output_dim() != n)
    throw ConfigError("training set dimensions do not match the plant");
  try {
    return std::make_shared<const gp::MultiGP>(gp::fit(data, hps));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("inconsistent GP artifacts: ") + e.what());
  }
}

struct ControllerRun {
  std::string type;
  long training_points = 0;
  sim::Ensemble ensemble;
  std::optional<sim::LyapunovTrace> lyapunov;
};

/// Simulates one controller per the scenario: a single run, or an ensemble
/// when realizations > 1.
template <dynamics::ManipulatorModel Plant>
ControllerRun run_controller(const Scenario& sc, const Plant& plant, const control::AnyController& ctrl,
                             const std::string& type, long training_points) {
  ControllerRun run;
  run.type = type;
  run.training_points = training_points;
  if (sc.sim.realizations == 1) {
    run.ensemble.runs.push_back(sim::simulate(plant, ctrl, sc.reference, sc.sim, sc.sim.base_seed));
    run.ensemble.stats = sim::ensemble_statistics(run.ensemble.runs, sc.t_skip);
  } else {
    run.ensemble = sim::run_ensemble(plant, ctrl, sc.reference, sc.sim, sc.t_skip);
  }
  if (sc.lyapunov) {
    auto& first = run.ensemble.runs.front();
    run.lyapunov = sim::lyapunov_trace(first, plant, type == "hg-pd" ? sc.controller.hg_gains : sc.controller.gains,
                                       sc.sim.lyapunov_epsilon);
    first.lyapunov = run.lyapunov->values;
  }
  return run;
}

inline void write_controller_outputs(const Scenario& sc, const std::filesystem::path& dir, const ControllerRun& run) {
  const std::string m = manifest(sc, run.type, run.training_points);
  {
    auto f = open_output(dir / ("trajectory_" + run.type + ".csv"));
    sim::write_sim_csv(f, run.ensemble.runs.front(), m);
  }
  if (run.ensemble.runs.size() > 1 && run.ensemble.stats.included > 0) {
    auto f = open_output(dir / ("ensemble_" + run.type + ".csv"));
    sim::write_ensemble_csv(f, run.ensemble.stats, m);
  }
  auto f = open_output(dir / ("runs_" + run.type + ".csv"));
  f << "# " << m << '\n' << "run,seed,diverged";
  const Eigen::Index n = sc.plant.dof();
  for (Eigen::Index i = 1; i <= n; ++i) f << ",rmse_" << i;
  f << ",ball_radius\n";
  for (std::size_t i = 0; i < run.ensemble.runs.size(); ++i) {
    const auto& r = run.ensemble.runs[i];
    f << i << ',' << r.seed << ',' << (r.diverged ? 1 : 0);
    for (Eigen::Index j = 0; j < n; ++j)
      f << ',' << (r.diverged ? std::string("nan") : format_double(run.ensemble.stats.run_rmse[i][j]));
    f << ',' << (r.diverged ? std::string("nan") : format_double(sim::ball_radius(r, sc.settle_time))) << '\n';
  }
}

inline std::string version_line() {
  std::ostringstream os;
  os << "gpct " << kVersion << ", eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
     << EIGEN_MINOR_VERSION << ", boost " << BOOST_LIB_VERSION;
  return os.str();
}

inline int cmd_simulate(const Scenario& sc, const std::string& out_dir, std::ostream& log) {
  const auto dir = ensure_dir(out_dir);
  std::shared_ptr<const gp::MultiGP> gp;
  if (std::count(sc.controller.types.begin(), sc.controller.types.end(), "ct-gp") > 0) gp = load_gp(sc, dir);

  bool all_diverged_somewhere = false;
  with_models(sc, [&](const auto& plant, const auto& est, const auto& est_sp) {
    for (const auto& type : sc.controller.types) {
      const auto ctrl = make_controller(type, sc, est, est_sp, type == "ct-gp" ? gp : nullptr);
      const long points = type == "ct-gp" ? static_cast<long>(gp->training_size()) : 0;
      const ControllerRun run = run_controller(sc, plant, ctrl, type, points);
      write_controller_outputs(sc, dir, run);
      const auto& stats = run.ensemble.stats;
      log << "simulate " << type << ": " << run.ensemble.runs.size() << " run(s), " << stats.divergent
          << " diverged";
      if (stats.included > 0) {
        const Vector rmse = stats.run_rmse[0].size() ? stats.run_rmse[0] : Vector();
        log << ", rmse(run 0) =";
        for (Eigen::Index i = 0; i < rmse.size(); ++i) log << ' ' << format_double(rmse[i]);
      }
      log << '\n';
      if (run.lyapunov && run.lyapunov->indefinite_warning)
        log << "warning: Lyapunov form indefinite for " << type << " (min eigenvalue "
            << format_double(run.lyapunov->min_form_eigenvalue) << "); reduce lyapunov_epsilon\n";
      if (stats.included == 0) all_diverged_somewhere = true;
    }
  });
  {
    auto f = open_output(dir / "run_manifest.txt");
    f << version_line() << '\n';
    f << "config_hash = " << sc.config_hash << '\n';
    f << "base_seed = " << sc.seed << '\n';
    f << "realizations = " << sc.sim.realizations << '\n';
    f << "run_seeds = " << sc.seed << " .. " << sc.seed + static_cast<std::uint64_t>(sc.sim.realizations - 1) << '\n';
    f << "frequency_unit = " << sim::to_string(sc.reference.unit) << '\n';
    f << "integrator = " << sim::to_string(sc.sim.integrator) << '\n';
    f << "t_skip = " << format_double(sc.t_skip) << '\n';
    f << "--- config ---\n" << sc.config_text;
  }
  if (all_diverged_somewhere) {
    log << "error: every run of at least one controller diverged\n";
    return kExitDivergence;
  }
  return kExitOk;
}

/// Controller name and training-point count from a manifest comment.
inline std::pair<std::string, long> manifest_fields(const sim::CsvTable& table, const std::string& fallback) {
  std::string controller = fallback;
  long points = 0;
  for (const auto& line : table.comments) {
    std::istringstream in(line.substr(1));
    std::string token;
    while (in >> token) {
      if (token.rfind("controller=", 0) == 0) controller = token.substr(11);
      if (token.rfind("training_points=", 0) == 0) points = std::stol(token.substr(16));
    }
  }
  return {controller, points};
}

/// Per-joint RMSE of the e_i columns over t >= t_skip; same arithmetic as
/// sim::rmse.
inline Vector rmse_from_table(const sim::CsvTable& table, double t_skip) {
  const auto& t = table.column("t");
  Eigen::Index n = 0;
  while (table.has_column("e_" + std::to_string(n + 1))) ++n;
  if (n == 0) throw ConfigError("trajectory has no e_i columns");
  Vector sum = Vector::Zero(n);
  Eigen::Index count = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_skip) continue;
    Vector e(n);
    for (Eigen::Index i = 0; i < n; ++i) e[i] = table.column("e_" + std::to_string(i + 1))[k];
    sum += e.cwiseAbs2();
    ++count;
  }
  if (count == 0) throw ConfigError("no samples at or after t_skip");
  return (sum / static_cast<double>(count)).cwiseSqrt();
}

struct RmseRow {
  std::string controller;
  long training_points = 0;
  Vector rmse;
};

inline std::vector<RmseRow> evaluate_files(const std::vector<std::string>& files, double t_skip) {
  if (files.empty()) throw ConfigError("evaluate needs at least one trajectory file");
  std::vector<RmseRow> rows;
  std::vector<double> grid;
  for (const auto& file : files) {
    const sim::CsvTable table = sim::load_csv_table(file);
    const auto& t = table.column("t");
    if (grid.empty()) {
      grid = t;
    } else if (t != grid) {
      throw ConfigError("time grid of '" + file + "' differs from '" + files.front() + "'");
    }
    auto [controller, points] = manifest_fields(table, std::filesystem::path(file).stem().string());
    rows.push_back({controller, points, rmse_from_table(table, t_skip)});
  }
  return rows;
}

inline int cmd_evaluate(const std::vector<std::string>& files, double t_skip, const std::string& out_dir,
                        std::ostream& log) {
  const auto rows = evaluate_files(files, t_skip);
  const auto dir = ensure_dir(out_dir);
  auto f = open_output(dir / "rmse_report.csv");
  f << "# gpct v" << kVersion << " rmse over t >= " << format_double(t_skip) << " s\n";
  const Eigen::Index n = rows.front().rmse.size();
  f << "controller,training_points";
  for (Eigen::Index i = 1; i <= n; ++i) f << ",rmse_" << i;
  f << '\n';
  for (const auto& row : rows) {
    if (row.rmse.size() != n) throw ConfigError("trajectories differ in joint count");
    f << row.controller << ',' << row.training_points;
    log << row.controller << " (m = " << row.training_points << "):";
    for (Eigen::Index i = 0; i < n; ++i) {
      f << ',' << format_double(row.rmse[i]);
      log << ' ' << format_double(row.rmse[i]);
    }
    f << '\n';
    log << '\n';
  }
  return kExitOk;
}

/// Held-out inputs and true residuals for the consistency probe: cell
/// centres of the open-loop grid, or noise-free closed-loop samples taken
/// half a period after the training instants.
inline gp::TrainingSet probe_set(const Scenario& sc) {
  Scenario probe = sc;
  auto& plan = probe.training.plan;
  if (plan.mode == training::ExcitationMode::open_loop_torque) {
    plan.torque = sc.learning_curve.probe_torque;
    plan.initial_position = sc.learning_curve.probe_position;
  } else {
    plan.sample_offset = 0.5 * plan.sample_period;
    plan.sample_count = sc.learning_curve.probe_points;
    plan.duration = plan.sample_offset + plan.sample_period * plan.sample_count;
    plan.noise_q = 0.0;
    plan.noise_qd = 0.0;
  }
  return generate_training(probe).data;
}

/// Median over probe points of |mu(x) - residual(x)|.
inline double probe_median_error(const gp::MultiGP& gp, const gp::TrainingSet& probe) {
  std::vector<double> err;
  err.reserve(static_cast<std::size_t>(probe.size()));
  for (Eigen::Index j = 0; j < probe.size(); ++j)
    err.push_back((gp.predict_mean(probe.inputs.col(j)) - probe.outputs.row(j).transpose()).norm());
  if (err.empty()) throw DomainError("empty probe set");
  const std::size_t mid = err.size() / 2;
  std::nth_element(err.begin(), err.begin() + static_cast<std::ptrdiff_t>(mid), err.end());
  if (err.size() % 2 == 1) return err[mid];
  const double upper = err[mid];
  const double lower = *std::max_element(err.begin(), err.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

struct LearningCurvePoint {
  long m = 0;
  Vector rmse;
  double probe_median = 0.0;
  std::vector<gp::Hyperparameters> hps;
};

/// Deterministic CT-GP runs for each size. The full set is read from the
/// training file when present and generated otherwise.
inline std::vector<LearningCurvePoint> learning_curve(const Scenario& sc, const std::filesystem::path& dir,
                                                      const std::vector<int>& sizes, std::ostream& log) {
  const std::string path = training_path(sc, dir);
  gp::TrainingSet full;
  if (std::filesystem::exists(path) && sc.training.points < 0) {
    full = gp::load_training_csv(path);
  } else {
    full = generate_training(sc).data;
  }
  const gp::TrainingSet probe = probe_set(sc);
  Scenario det = sc;
  det.controller.gp_mode = control::GpMode::deterministic;
  det.sim.realizations = 1;
  det.sim.integrator = sim::Integrator::rk4;
  det.sim.record_gp_std = false;

  std::vector<LearningCurvePoint> points;
  for (int m : sizes) {
    const auto idx = stratified_subsample(full.size(), m, sc.seed);
    const gp::TrainingSet data = full.subset(idx);
    LearningCurvePoint p;
    p.m = m;
    p.hps = fit_hyperparameters(data, sc.training).hps;
    const auto gp = std::make_shared<const gp::MultiGP>(gp::fit(data, p.hps));
    p.probe_median = probe_median_error(*gp, probe);
    with_models(det, [&](const auto& plant, const auto& est, const auto& est_sp) {
      const auto ctrl = make_controller("ct-gp", det, est, est_sp, gp);
      const sim::SimResult r = sim::simulate(plant, ctrl, det.reference, det.sim, det.sim.base_seed);
      if (r.diverged) throw DivergenceError("CT-GP with " + std::to_string(m) + " points diverged");
      p.rmse = sim::rmse(r, det.t_skip);
    });
    log << "learning-curve m = " << m << ": rmse";
    for (Eigen::Index i = 0; i < p.rmse.size(); ++i) log << ' ' << format_double(p.rmse[i]);
    log << ", probe median " << format_double(p.probe_median) << '\n';
    points.push_back(std::move(p));
  }
  return points;
}

inline int cmd_learning_curve(const Scenario& sc, const std::string& out_dir, const std::vector<int>& sizes,
                              std::ostream& log) {
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1]) throw ConfigError("sizes must be strictly ascending");
  const auto dir = ensure_dir(out_dir);
  const auto points = learning_curve(sc, dir, sizes, log);
  auto f = open_output(dir / "learning_curve.csv");
  f << "# " << manifest(sc, "ct-gp", sizes.empty() ? 0 : sizes.back()) << '\n';
  const Eigen::Index n = sc.plant.dof();
  f << 'm';
  for (Eigen::Index i = 1; i <= n; ++i) f << ",rmse_" << i;
  f << ",probe_median";
  for (Eigen::Index i = 1; i <= n; ++i) f << ",lambda_" << i << ",sigma_f_" << i << ",sigma_n_" << i;
  f << '\n';
  for (const auto& p : points) {
    f << p.m;
    for (Eigen::Index i = 0; i < n; ++i) f << ',' << format_double(p.rmse[i]);
    f << ',' << format_double(p.probe_median);
    for (const auto& hp : p.hps)
      f << ',' << format_double(hp.length_scale) << ',' << format_double(hp.signal_std) << ','
        << format_double(hp.noise_std);
    f << '\n';
  }
  return kExitOk;
}

struct CheckOutcome {
  dynamics::StructuralReport plant_structure;
  dynamics::StructuralReport estimate_structure;
  control::ModelErrorBound bound;
  control::ConditionReport conditions;

  bool passed() const { return plant_structure.passed() && estimate_structure.passed() && conditions.passed(); }

  std::string summary() const {
    std::ostringstream os;
    os << "structural properties of the plant (" << plant_structure.samples << " samples):\n"
       << plant_structure.summary();
    os << "structural properties of the estimate:\n" << estimate_structure.summary();
    os << "model error bound (" << bound.probe_count << " probes, |qd| <= " << format_double(bound.max_probe_speed)
       << "): alpha = " << format_double(bound.alpha) << ", beta = " << format_double(bound.beta) << '\n';
    if (bound.superlinear_warning) os << "WARN C3 model error grows faster than affinely in |qd|\n";
    os << conditions.summary();
    os << (passed() ? "PASS" : "FAIL") << " overall\n";
    return os.str();
  }
};

inline CheckOutcome run_check(const Scenario& sc) {
  CheckOutcome out;
  with_models(sc, [&](const auto& plant, const auto& est, const auto&) {
    using Plant = std::remove_cvref_t<decltype(plant)>;
    if (sc.plant.corrupt_coriolis) {
      out.plant_structure = dynamics::check_structural_properties(dynamics::CorruptedCoriolis<Plant>{plant},
                                                                  sc.check.structural_samples, sc.seed);
    } else {
      out.plant_structure = dynamics::check_structural_properties(plant, sc.check.structural_samples, sc.seed);
    }
    out.estimate_structure = dynamics::check_structural_properties(est, sc.check.structural_samples, sc.seed);
    out.bound = control::estimate_error_bound(plant, est, sc.reference.bounds(),
                                              static_cast<std::size_t>(sc.check.probes), sc.seed);
  });
  out.conditions = control::verify_conditions(sc.controller.gains, out.bound, sc.reference.bounds());
  return out;
}

inline int cmd_check(const Scenario& sc, const std::string& out_dir, std::ostream& log) {
  const CheckOutcome outcome = run_check(sc);
  const std::string text = outcome.summary();
  log << text;
  if (!out_dir.empty()) {
    const auto dir = ensure_dir(out_dir);
    auto f = open_output(dir / "check_report.txt");
    f << "# " << manifest(sc, "check", 0) << '\n' << text;
  }
  return outcome.passed() ? kExitOk : kExitNumerical;
}

}  // namespace gpct::harness
