#pragma once
// Scenario configuration: an INI file with a fixed schema. Unknown sections
// and keys are rejected so that a misspelled gain never goes unnoticed.
//
// Lists (gains, amplitudes, sizes) are comma separated; a single value is
// broadcast to every joint. Relative paths are resolved against the
// directory of the configuration file.

#include "gpct/common.hpp"
#include "gpct/dynamics/aero.hpp"
#include "gpct/dynamics/two_link_arm.hpp"
#include "gpct/dynamics/wing.hpp"
#include "gpct/sim/reference.hpp"
#include "gpct/sim/simulate.hpp"
#include "gpct/training/excitation.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace gpct::harness {

enum class PlantKind { wing, two_link_arm };

struct PlantSpec {
  PlantKind kind = PlantKind::wing;
  dynamics::WingModel wing;
  dynamics::TwoLinkArm arm;
  bool corrupt_coriolis = false;  ///< negative control for `check`
  double estimate_scale = 0.9;

  Eigen::Index dof() const { return kind == PlantKind::wing ? 1 : 2; }
};

struct ControllerSpec {
  std::vector<std::string> types{"ct-gp"};
  control::GpMode gp_mode = control::GpMode::deterministic;
  control::Gains gains;     ///< used by lg-pd, ct, ct-sp and ct-gp
  control::Gains hg_gains;  ///< used by hg-pd
};

struct TrainingSpec {
  training::ExcitationPlan plan;
  std::string controller = "hg-pd";  ///< closed-loop excitation controller
  int points = -1;                   ///< stratified subsample size; negative keeps all
  int optimizer_budget = 25;
  int optimizer_restarts = 5;
  std::string data_path;             ///< empty: <out>/training.csv
  std::string hyperparameter_path;   ///< empty: <out>/hyperparameters.txt
};

struct CheckSpec {
  int probes = 4000;
  int structural_samples = 1000;
};

struct LearningCurveSpec {
  std::vector<int> sizes{0, 50, 200, 500, 990};
  training::Grid probe_torque{-7.6, 7.6, 20};
  training::Grid probe_position{-std::numbers::pi * 24.0 / 25.0, std::numbers::pi * 24.0 / 25.0, 25};
  int probe_points = 500;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  PlantSpec plant;
  ControllerSpec controller;
  sim::SinusoidalReference reference;
  TrainingSpec training;
  sim::SimConfig sim;
  double t_skip = 1.0;
  double settle_time = 3.0;
  bool lyapunov = false;
  CheckSpec check;
  LearningCurveSpec learning_curve;
  std::string config_hash = "00000000";
  std::string config_text;
  std::filesystem::path base_dir;

  std::string resolve(const std::string& path) const {
    if (path.empty()) return path;
    const std::filesystem::path p(path);
    return p.is_absolute() ? path : (base_dir / p).string();
  }
};

namespace detail {

using boost::property_tree::ptree;

/// Allowed keys per section.
inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"scenario", {"name", "plant", "seed"}},
      {"plant",
       {"inertia", "mass", "lever", "gravity", "air_density", "airspeed", "chord", "span", "aero_lever",
        "apparent_wind", "aero_table", "length1", "length2", "mass1", "mass2", "inertia1", "inertia2", "viscous",
        "coulomb", "friction_smoothing", "spring_k1", "spring_k3", "anchor_x", "anchor_y", "corrupt_coriolis"}},
      {"estimate", {"scale"}},
      {"controller", {"types", "gp_mode", "kp", "kd", "hg_kp", "hg_kd"}},
      {"reference", {"amplitude", "frequency", "phase", "offset", "frequency_unit"}},
      {"training",
       {"mode", "torque_min", "torque_max", "torque_count", "position_min", "position_max", "position_count", "hold",
        "sample_period", "sample_count", "duration", "noise_q", "noise_qd", "dt", "controller", "points",
        "optimizer_budget", "optimizer_restarts", "data", "hyperparameters"}},
      {"sim",
       {"dt", "duration", "integrator", "realizations", "lyapunov", "lyapunov_epsilon", "t_skip", "settle_time",
        "threads"}},
      {"check", {"probes", "structural_samples"}},
      {"learning_curve", {"sizes", "probe_torque_count", "probe_position_count", "probe_points"}},
  };
  return s;
}

class Reader {
 public:
  explicit Reader(const ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    auto value = sec->get_optional<std::string>(ptree::path_type(key, '\0'));
    if (!value) return std::nullopt;
    std::string v = *value;
    boost::algorithm::trim(v);
    return v;
  }

  std::string str(const std::string& s, const std::string& k, const std::string& def) const {
    return raw(s, k).value_or(def);
  }

  double num(const std::string& s, const std::string& k, double def) const {
    auto v = raw(s, k);
    if (!v) return def;
    try {
      return parse_double(*v);
    } catch (const ConfigError&) {
      throw ConfigError("[" + s + "] " + k + ": expected a number, got '" + *v + "'");
    }
  }

  long integer(const std::string& s, const std::string& k, long def) const {
    auto v = raw(s, k);
    if (!v) return def;
    long out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size())
      throw ConfigError("[" + s + "] " + k + ": expected an integer, got '" + *v + "'");
    return out;
  }

  bool flag(const std::string& s, const std::string& k, bool def) const {
    auto v = raw(s, k);
    if (!v) return def;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("[" + s + "] " + k + ": expected true or false, got '" + *v + "'");
  }

  std::vector<std::string> list(const std::string& s, const std::string& k) const {
    auto v = raw(s, k);
    std::vector<std::string> out;
    if (!v) return out;
    boost::algorithm::split(out, *v, boost::is_any_of(","));
    for (auto& item : out) boost::algorithm::trim(item);
    out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
    return out;
  }

  /// Per-joint vector; one entry is broadcast to n joints.
  Vector joints(const std::string& s, const std::string& k, Eigen::Index n, double def) const {
    const auto items = list(s, k);
    if (items.empty()) return Vector::Constant(n, def);
    if (items.size() == 1) return Vector::Constant(n, num_item(s, k, items[0]));
    if (static_cast<Eigen::Index>(items.size()) != n)
      throw ConfigError("[" + s + "] " + k + ": expected 1 or " + std::to_string(n) + " values, got " +
                        std::to_string(items.size()));
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = num_item(s, k, items[static_cast<std::size_t>(i)]);
    return v;
  }

 private:
  static double num_item(const std::string& s, const std::string& k, const std::string& item) {
    try {
      return parse_double(item);
    } catch (const ConfigError&) {
      throw ConfigError("[" + s + "] " + k + ": expected a number, got '" + item + "'");
    }
  }

  const ptree& tree_;
};

inline void validate_schema(const ptree& tree) {
  const auto& s = schema();
  for (const auto& [section, body] : tree) {
    auto it = s.find(section);
    if (it == s.end()) {
      if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
  }
}

inline std::string crc_hex(const std::string& text) {
  boost::crc_32_type crc;
  crc.process_bytes(text.data(), text.size());
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%08x", static_cast<unsigned>(crc.checksum()));
  return buffer;
}

inline control::Gains read_gains(const Reader& r, const std::string& kp_key, const std::string& kd_key,
                                 Eigen::Index n, double kp_def, double kd_def) {
  return control::Gains::diagonal(r.joints("controller", kp_key, n, kp_def), r.joints("controller", kd_key, n, kd_def));
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {}) {
  detail::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  detail::validate_schema(tree);
  const detail::Reader r(tree);

  Scenario sc;
  sc.config_text = text;
  sc.config_hash = detail::crc_hex(text);
  sc.base_dir = base_dir;
  sc.name = r.str("scenario", "name", "scenario");
  const long seed = r.integer("scenario", "seed", 0);
  if (seed < 0) throw ConfigError("[scenario] seed must be non-negative");
  sc.seed = static_cast<std::uint64_t>(seed);

  // Plant and estimate.
  const std::string plant = r.str("scenario", "plant", "wing");
  PlantSpec& p = sc.plant;
  if (plant == "wing") {
    p.kind = PlantKind::wing;
    auto& w = p.wing;
    w.inertia = r.num("plant", "inertia", w.inertia);
    w.mass = r.num("plant", "mass", w.mass);
    w.lever = r.num("plant", "lever", w.lever);
    w.gravity = r.num("plant", "gravity", w.gravity);
    w.aero.air_density = r.num("plant", "air_density", w.aero.air_density);
    w.aero.airspeed = r.num("plant", "airspeed", w.aero.airspeed);
    w.aero.chord = r.num("plant", "chord", w.aero.chord);
    w.aero.span = r.num("plant", "span", w.aero.span);
    w.aero.lever = r.num("plant", "aero_lever", w.aero.lever);
    w.aero.apparent_wind = r.flag("plant", "apparent_wind", false);
    const std::string table = r.str("plant", "aero_table", "");
    if (!table.empty()) w.table = dynamics::load_aero_csv(sc.resolve(table));
    if (!(w.inertia > 0.0)) throw ConfigError("[plant] inertia must be positive");
  } else if (plant == "two-link-arm") {
    p.kind = PlantKind::two_link_arm;
    auto& a = p.arm;
    a.length1 = r.num("plant", "length1", a.length1);
    a.length2 = r.num("plant", "length2", a.length2);
    a.mass1 = r.num("plant", "mass1", a.mass1);
    a.mass2 = r.num("plant", "mass2", a.mass2);
    a.inertia1 = r.num("plant", "inertia1", a.inertia1);
    a.inertia2 = r.num("plant", "inertia2", a.inertia2);
    a.gravity = r.num("plant", "gravity", a.gravity);
    const Vector viscous = r.joints("plant", "viscous", 2, 0.0);
    const Vector coulomb = r.joints("plant", "coulomb", 2, 0.0);
    const double smoothing = r.num("plant", "friction_smoothing", 0.05);
    if (!(smoothing > 0.0)) throw ConfigError("[plant] friction_smoothing must be positive");
    a.friction1 = {viscous[0], coulomb[0], smoothing};
    a.friction2 = {viscous[1], coulomb[1], smoothing};
    a.spring.k1 = r.num("plant", "spring_k1", 0.0);
    a.spring.k3 = r.num("plant", "spring_k3", 0.0);
    a.spring.anchor_x = r.num("plant", "anchor_x", a.spring.anchor_x);
    a.spring.anchor_y = r.num("plant", "anchor_y", a.spring.anchor_y);
    if (!(a.mass1 > 0.0) || !(a.mass2 > 0.0) || !(a.length1 > 0.0) || !(a.length2 > 0.0))
      throw ConfigError("[plant] link masses and lengths must be positive");
  } else {
    throw ConfigError("[scenario] plant must be wing or two-link-arm, got '" + plant + "'");
  }
  p.corrupt_coriolis = r.flag("plant", "corrupt_coriolis", false);
  p.estimate_scale = r.num("estimate", "scale", 0.9);
  if (!(p.estimate_scale > 0.0)) throw ConfigError("[estimate] scale must be positive");
  const Eigen::Index n = p.dof();

  // Controllers.
  auto& c = sc.controller;
  const auto types = r.list("controller", "types");
  if (!types.empty()) c.types = types;
  for (const auto& t : c.types)
    if (t != "hg-pd" && t != "lg-pd" && t != "ct" && t != "ct-sp" && t != "ct-gp")
      throw ConfigError("[controller] unknown controller type '" + t + "'");
  const std::string mode = r.str("controller", "gp_mode", "deterministic");
  if (mode == "deterministic") {
    c.gp_mode = control::GpMode::deterministic;
  } else if (mode == "stochastic") {
    c.gp_mode = control::GpMode::stochastic;
  } else {
    throw ConfigError("[controller] gp_mode must be deterministic or stochastic");
  }
  c.gains = detail::read_gains(r, "kp", "kd", n, 5.0, 5.0);
  c.hg_gains = detail::read_gains(r, "hg_kp", "hg_kd", n, 800.0, 5.0);
  try {
    c.gains.validate();
    c.hg_gains.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("[controller] ") + e.what());
  }

  // Reference.
  auto& ref = sc.reference;
  ref.amplitude = r.joints("reference", "amplitude", n, 0.5);
  ref.frequency = r.joints("reference", "frequency", n, 1.0);
  ref.phase = r.joints("reference", "phase", n, 0.0);
  ref.offset = r.joints("reference", "offset", n, 0.0);
  ref.unit = sim::parse_frequency_unit(r.str("reference", "frequency_unit", "hz"));
  ref.validate();

  // Training.
  auto& t = sc.training;
  auto& plan = t.plan;
  plan.mode = training::parse_excitation_mode(
      r.str("training", "mode", p.kind == PlantKind::wing ? "open-loop-torque" : "closed-loop-tracking"));
  plan.torque = {r.num("training", "torque_min", -8.0), r.num("training", "torque_max", 8.0),
                 static_cast<int>(r.integer("training", "torque_count", 33))};
  plan.initial_position = {r.num("training", "position_min", -std::numbers::pi),
                           r.num("training", "position_max", std::numbers::pi),
                           static_cast<int>(r.integer("training", "position_count", 30))};
  plan.hold = r.num("training", "hold", 0.5);
  plan.sample_period = r.num("training", "sample_period", 0.03);
  plan.sample_count = static_cast<int>(r.integer("training", "sample_count", 351));
  plan.duration = r.num("training", "duration", plan.sample_period * plan.sample_count);
  plan.noise_q = r.num("training", "noise_q", 1e-3);
  plan.noise_qd = r.num("training", "noise_qd", 1e-2);
  plan.dt = r.num("training", "dt", 1e-3);
  plan.seed = sc.seed;
  plan.validate();
  t.controller = r.str("training", "controller", "hg-pd");
  if (t.controller != "hg-pd" && t.controller != "lg-pd" && t.controller != "ct" && t.controller != "ct-sp")
    throw ConfigError("[training] controller must be hg-pd, lg-pd, ct or ct-sp");
  t.points = static_cast<int>(r.integer("training", "points", -1));
  t.optimizer_budget = static_cast<int>(r.integer("training", "optimizer_budget", 25));
  t.optimizer_restarts = static_cast<int>(r.integer("training", "optimizer_restarts", 5));
  if (t.optimizer_budget < 0 || t.optimizer_restarts < 1) throw ConfigError("[training] invalid optimizer settings");
  t.data_path = sc.resolve(r.str("training", "data", ""));
  t.hyperparameter_path = sc.resolve(r.str("training", "hyperparameters", ""));

  // Simulation.
  auto& s = sc.sim;
  s.dt = r.num("sim", "dt", 1e-3);
  s.duration = r.num("sim", "duration", 10.0);
  s.integrator = sim::parse_integrator(r.str("sim", "integrator", "rk4"));
  s.realizations = static_cast<int>(r.integer("sim", "realizations", 1));
  s.base_seed = sc.seed;
  s.lyapunov_epsilon = r.num("sim", "lyapunov_epsilon", 0.1);
  s.threads = static_cast<int>(r.integer("sim", "threads", 0));
  s.validate();
  sc.lyapunov = r.flag("sim", "lyapunov", false);
  sc.t_skip = r.num("sim", "t_skip", 1.0);
  sc.settle_time = r.num("sim", "settle_time", 3.0);
  if (sc.t_skip < 0.0 || sc.t_skip > s.duration) throw ConfigError("[sim] t_skip must lie within the duration");
  const bool any_stochastic =
      c.gp_mode == control::GpMode::stochastic && std::count(c.types.begin(), c.types.end(), "ct-gp") > 0;
  if (any_stochastic && s.integrator != sim::Integrator::euler_maruyama)
    throw ConfigError("[controller] gp_mode = stochastic requires [sim] integrator = euler-maruyama");

  // Check.
  sc.check.probes = static_cast<int>(r.integer("check", "probes", 4000));
  sc.check.structural_samples = static_cast<int>(r.integer("check", "structural_samples", 1000));
  if (sc.check.probes < 2 || sc.check.structural_samples < 1) throw ConfigError("[check] counts must be positive");

  // Learning curve.
  auto& lc = sc.learning_curve;
  const auto sizes = r.list("learning_curve", "sizes");
  if (!sizes.empty()) {
    lc.sizes.clear();
    for (const auto& item : sizes) {
      const double v = parse_double(item);
      if (v < 0.0 || v != std::floor(v)) throw ConfigError("[learning_curve] sizes must be non-negative integers");
      lc.sizes.push_back(static_cast<int>(v));
    }
  }
  for (std::size_t i = 1; i < lc.sizes.size(); ++i)
    if (lc.sizes[i] <= lc.sizes[i - 1]) throw ConfigError("[learning_curve] sizes must be strictly ascending");
  const int tc = static_cast<int>(r.integer("learning_curve", "probe_torque_count", 20));
  const int pc = static_cast<int>(r.integer("learning_curve", "probe_position_count", 25));
  if (tc < 1 || pc < 1) throw ConfigError("[learning_curve] probe grid counts must be positive");
  // Cell centres of a tc x pc partition of the excitation rectangle.
  const double th = 0.5 * (plan.torque.hi - plan.torque.lo) / tc;
  const double ph = 0.5 * (plan.initial_position.hi - plan.initial_position.lo) / pc;
  lc.probe_torque = {plan.torque.lo + th, plan.torque.hi - th, tc};
  lc.probe_position = {plan.initial_position.lo + ph, plan.initial_position.hi - ph, pc};
  lc.probe_points = static_cast<int>(r.integer("learning_curve", "probe_points", 500));
  if (lc.probe_points < 1) throw ConfigError("[learning_curve] probe_points must be positive");
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open configuration '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), std::filesystem::path(path).parent_path());
}

/// Comment line carried by every output CSV.
inline std::string manifest(const Scenario& sc, const std::string& controller, long training_points) {
  std::ostringstream os;
  os << "gpct v" << kVersion << " config_hash=" << sc.config_hash << " base_seed=" << sc.seed
     << " frequency_unit=" << sim::to_string(sc.reference.unit) << " controller=" << controller
     << " training_points=" << training_points;
  return os.str();
}

}  // namespace gpct::harness
