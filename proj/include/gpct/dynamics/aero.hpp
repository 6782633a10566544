#pragma once
// Lift/drag coefficient tables and the aerodynamic joint load of a wing.

#include "gpct/common.hpp"

#include <boost/algorithm/string.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

namespace gpct::dynamics {

struct AeroCoefficients {
  double lift = 0.0;
  double drag = 0.0;
};

/// Rows (alpha [deg], c_l, c_d) with strictly increasing alpha covering [-180, 180].
class AeroTable {
 public:
  struct Row {
    double alpha_deg;
    double cl;
    double cd;
  };

  AeroTable() = default;
  explicit AeroTable(std::vector<Row> rows) : rows_(std::move(rows)) { validate(); }

  const std::vector<Row>& rows() const { return rows_; }

  void validate() const {
    if (rows_.size() < 2) throw ConfigError("aero table needs at least two rows");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const Row& r = rows_[i];
      if (!std::isfinite(r.alpha_deg) || !std::isfinite(r.cl) || !std::isfinite(r.cd))
        throw ConfigError("aero table has a non-finite entry");
      if (r.cd < 0.0) throw ConfigError("aero table has a negative drag coefficient");
      if (i > 0 && !(r.alpha_deg > rows_[i - 1].alpha_deg))
        throw ConfigError("aero table angles must be strictly increasing");
    }
    if (rows_.front().alpha_deg > -180.0 || rows_.back().alpha_deg < 180.0)
      throw ConfigError("aero table must cover [-180, 180] degrees");
  }

  /// Linear interpolation at alpha (degrees). Nodes are returned exactly.
  AeroCoefficients lookup(double alpha_deg) const {
    if (!std::isfinite(alpha_deg)) throw DomainError("angle of attack is not finite");
    if (rows_.empty() || alpha_deg < rows_.front().alpha_deg || alpha_deg > rows_.back().alpha_deg)
      throw DomainError("angle of attack " + std::to_string(alpha_deg) + " deg is outside the aero table");
    auto hi = std::lower_bound(rows_.begin(), rows_.end(), alpha_deg,
                               [](const Row& r, double a) { return r.alpha_deg < a; });
    if (hi->alpha_deg == alpha_deg) return {hi->cl, hi->cd};
    auto lo = hi - 1;
    const double w = (alpha_deg - lo->alpha_deg) / (hi->alpha_deg - lo->alpha_deg);
    return {lo->cl + w * (hi->cl - lo->cl), lo->cd + w * (hi->cd - lo->cd)};
  }

 private:
  std::vector<Row> rows_;
};

/// Wraps an angle in degrees to [-180, 180].
inline double wrap_degrees(double deg) {
  double wrapped = std::remainder(deg, 360.0);
  if (wrapped == -180.0 && deg > 0.0) wrapped = 180.0;
  return wrapped;
}

/// Synthetic symmetric NACA-0015-like table on a 1 degree grid: thin-airfoil
/// lift 2 pi sin(a) blended into flat-plate lift 1.1 sin(2a) around 12 deg
/// (logistic blend, 2 deg width), drag 0.01 + 1.3 sin^2(a).
inline AeroTable synthetic_naca0015_table(double step_deg = 1.0) {
  std::vector<AeroTable::Row> rows;
  const int count = static_cast<int>(std::lround(360.0 / step_deg));
  for (int i = 0; i <= count; ++i) {
    const double deg = -180.0 + step_deg * i;
    const double a = deg * std::numbers::pi / 180.0;
    const double attached = 1.0 / (1.0 + std::exp((std::abs(deg) - 12.0) / 2.0));
    double cl = attached * 2.0 * std::numbers::pi * std::sin(a) + (1.0 - attached) * 1.1 * std::sin(2.0 * a);
    const double s = std::sin(a);
    double cd = 0.01 + 1.3 * s * s;
    if (i == 0 || i == count || deg == 0.0) cl = 0.0;
    rows.push_back({deg, cl, cd});
  }
  // Exact odd/even symmetry: mirror the positive half.
  const std::size_t mid = rows.size() / 2;
  for (std::size_t k = 1; k <= mid; ++k) {
    rows[mid - k].cl = -rows[mid + k].cl;
    rows[mid - k].cd = rows[mid + k].cd;
  }
  return AeroTable(std::move(rows));
}

inline AeroTable read_aero_csv(std::istream& in) {
  std::string line;
  bool header_seen = false;
  std::vector<AeroTable::Row> rows;
  std::vector<std::string> fields;
  while (std::getline(in, line)) {
    boost::algorithm::trim(line);
    if (line.empty() || line.front() == '#') continue;
    boost::algorithm::split(fields, line, boost::is_any_of(","));
    for (auto& f : fields) boost::algorithm::trim(f);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"alpha_deg", "cl", "cd"})
        throw ConfigError("aero table header must be 'alpha_deg,cl,cd'");
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) throw ConfigError("aero table row needs 3 fields");
    rows.push_back({parse_double(fields[0]), parse_double(fields[1]), parse_double(fields[2])});
  }
  if (!header_seen) throw ConfigError("aero table has no header");
  return AeroTable(std::move(rows));
}

inline AeroTable load_aero_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open aero table '" + path + "'");
  return read_aero_csv(in);
}

inline void write_aero_csv(std::ostream& out, const AeroTable& table) {
  out << "alpha_deg,cl,cd\n";
  for (const auto& r : table.rows())
    out << format_double(r.alpha_deg) << ',' << format_double(r.cl) << ',' << format_double(r.cd) << '\n';
}

/// Air and planform parameters. Defaults give a peak load near 2 N m.
struct AeroGeometry {
  double air_density = 1.225;  ///< kg/m^3
  double airspeed = 2.86;      ///< m/s, flow along +x
  double chord = 0.3;          ///< m
  double span = 1.0;           ///< m
  double lever = 1.0;          ///< m, joint to centre of pressure
  bool apparent_wind = false;  ///< include the wing's own motion in the relative flow
};

/// Joint load (enters g) of the aerodynamic force on a wing at angle q.
/// With still air relative to the joint and flow along +x this is
/// lever * Q * S * (c_l(q) cos q + c_d(q) sin q), Q the dynamic pressure.
inline double aero_torque(const AeroTable& table, double q, double qd, const AeroGeometry& geo) {
  double wx = geo.airspeed;
  double wy = 0.0;
  if (geo.apparent_wind) {
    wx += geo.lever * qd * std::sin(q);
    wy -= geo.lever * qd * std::cos(q);
  }
  const double speed2 = wx * wx + wy * wy;
  if (speed2 == 0.0) return 0.0;
  const double flow_angle = std::atan2(wy, wx);
  const double alpha_deg = wrap_degrees((q - flow_angle) * 180.0 / std::numbers::pi);
  const AeroCoefficients c = table.lookup(alpha_deg);
  const double pressure_area = 0.5 * geo.air_density * speed2 * geo.chord * geo.span;
  // Force: drag along the flow, lift normal to it, oriented to oppose positive alpha.
  const double ux = std::cos(flow_angle), uy = std::sin(flow_angle);
  const double fx = pressure_area * (c.drag * ux + c.lift * uy);
  const double fy = pressure_area * (c.drag * uy - c.lift * ux);
  const double torque_on_wing = geo.lever * (std::cos(q) * fy - std::sin(q) * fx);
  return -torque_on_wing;
}

}  // namespace gpct::dynamics
