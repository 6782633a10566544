#pragma once
// CSV output of trajectories and ensemble statistics, plus a reader for
// numeric CSV tables with '#' comment lines.

#include "gpct/common.hpp"
#include "gpct/sim/simulate.hpp"

#include <boost/algorithm/string.hpp>

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace gpct::sim {

namespace detail {

inline void append_columns(std::vector<std::string>& header, const std::string& prefix, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) header.push_back(prefix + std::to_string(i + 1));
}

}  // namespace detail

/// t, q_i, qd_i, e_i, ed_i, tau_i, gp_mean_i, gp_std_i [, V]
inline void write_sim_csv(std::ostream& out, const SimResult& r, const std::string& manifest = {}) {
  if (!manifest.empty()) out << "# " << manifest << '\n';
  const Eigen::Index n = r.dof();
  std::vector<std::string> header{"t"};
  for (const char* p : {"q_", "qd_", "e_", "ed_", "tau_", "gp_mean_", "gp_std_"}) detail::append_columns(header, p, n);
  if (r.lyapunov) header.push_back("V");
  out << boost::algorithm::join(header, ",") << '\n';
  for (Eigen::Index k = 0; k < r.steps(); ++k) {
    out << format_double(r.t[k]);
    for (const Matrix* m : {&r.q, &r.qd, &r.e, &r.ed, &r.tau, &r.gp_mean, &r.gp_std})
      for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double((*m)(k, i));
    if (r.lyapunov) out << ',' << format_double((*r.lyapunov)[k]);
    out << '\n';
  }
}

/// t, then mean_q_i, std_q_i, mean_qd_i, std_qd_i for each joint.
inline void write_ensemble_csv(std::ostream& out, const EnsembleStats& s, const std::string& manifest = {}) {
  if (!manifest.empty()) out << "# " << manifest << '\n';
  const Eigen::Index n = s.mean_q.cols();
  out << 't';
  for (Eigen::Index i = 1; i <= n; ++i)
    out << ",mean_q_" << i << ",std_q_" << i << ",mean_qd_" << i << ",std_qd_" << i;
  out << '\n';
  for (Eigen::Index k = 0; k < s.t.size(); ++k) {
    out << format_double(s.t[k]);
    for (Eigen::Index i = 0; i < n; ++i)
      out << ',' << format_double(s.mean_q(k, i)) << ',' << format_double(s.std_q(k, i)) << ','
          << format_double(s.mean_qd(k, i)) << ',' << format_double(s.std_qd(k, i));
    out << '\n';
  }
}

/// Numeric CSV with a header row. Comment lines are kept verbatim.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return columns[k];
    throw ConfigError("missing CSV column '" + name + "'");
  }

  bool has_column(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
  }
};

inline CsvTable read_csv_table(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    boost::algorithm::trim_right(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      table.comments.push_back(line);
      continue;
    }
    std::vector<std::string> fields;
    boost::algorithm::split(fields, line, boost::is_any_of(","));
    if (table.header.empty()) {
      for (auto& f : fields) boost::algorithm::trim(f);
      table.header = fields;
      table.columns.resize(fields.size());
      continue;
    }
    if (fields.size() != table.header.size())
      throw ConfigError("CSV line " + std::to_string(line_number) + " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(table.header.size()));
    for (std::size_t k = 0; k < fields.size(); ++k) table.columns[k].push_back(parse_double(fields[k]));
  }
  if (table.header.empty()) throw ConfigError("CSV has no header row");
  return table;
}

inline CsvTable load_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return read_csv_table(in);
}

}  // namespace gpct::sim
