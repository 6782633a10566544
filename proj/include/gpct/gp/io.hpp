#pragma once
// Text formats for training sets (CSV) and hyperparameters (key = value).

#include "gpct/common.hpp"
#include "gpct/gp/kernel.hpp"
#include "gpct/gp/regression.hpp"

#include <boost/algorithm/string.hpp>

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace gpct::gp {

/// Lines starting with '#' carry provenance; the first non-comment line is
/// the header x_1..x_d,y_1..y_n.
inline void write_training_csv(std::ostream& out, const TrainingSet& data, const std::string& manifest = {}) {
  if (!manifest.empty()) out << "# " << manifest << '\n';
  std::vector<std::string> header;
  for (Eigen::Index k = 0; k < data.input_dim(); ++k) header.push_back("x_" + std::to_string(k + 1));
  for (Eigen::Index k = 0; k < data.output_dim(); ++k) header.push_back("y_" + std::to_string(k + 1));
  out << boost::algorithm::join(header, ",") << '\n';
  for (Eigen::Index j = 0; j < data.size(); ++j) {
    for (Eigen::Index k = 0; k < data.input_dim(); ++k) out << (k ? "," : "") << format_double(data.inputs(k, j));
    for (Eigen::Index k = 0; k < data.output_dim(); ++k) out << ',' << format_double(data.outputs(j, k));
    out << '\n';
  }
}

inline TrainingSet read_training_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    boost::algorithm::trim(line);
    if (line.empty() || line.front() == '#') continue;
    boost::algorithm::split(header, line, boost::is_any_of(","));
    break;
  }
  if (header.empty()) throw ConfigError("training CSV has no header row");
  Eigen::Index d = 0, n = 0;
  for (std::size_t k = 0; k < header.size(); ++k) {
    boost::algorithm::trim(header[k]);
    const bool is_x = header[k] == "x_" + std::to_string(d + 1);
    const bool is_y = header[k] == "y_" + std::to_string(n + 1);
    if (is_x && n == 0) {
      ++d;
    } else if (is_y) {
      ++n;
    } else {
      throw ConfigError("unexpected training CSV column '" + header[k] + "'");
    }
  }
  if (d == 0 || n == 0) throw ConfigError("training CSV needs at least one x and one y column");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> fields;
  while (std::getline(in, line)) {
    boost::algorithm::trim(line);
    if (line.empty() || line.front() == '#') continue;
    boost::algorithm::split(fields, line, boost::is_any_of(","));
    if (static_cast<Eigen::Index>(fields.size()) != d + n)
      throw ConfigError("training CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(d + n));
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(parse_double(f));
    rows.push_back(std::move(row));
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  TrainingSet data = TrainingSet::empty(d, n);
  data.inputs.resize(d, m);
  data.outputs.resize(m, n);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) data.inputs(k, j) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
    for (Eigen::Index k = 0; k < n; ++k)
      data.outputs(j, k) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(d + k)];
  }
  data.validate();
  return data;
}

inline TrainingSet load_training_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open training set '" + path + "'");
  return read_training_csv(in);
}

/// Keys lambda_i, sigma_f_i, sigma_n_i (1-based output index).
inline void write_hyperparameters(std::ostream& out, const std::vector<Hyperparameters>& hps,
                                  const std::string& manifest = {}) {
  if (!manifest.empty()) out << "# " << manifest << '\n';
  for (std::size_t i = 0; i < hps.size(); ++i) {
    const std::string idx = std::to_string(i + 1);
    out << "lambda_" << idx << " = " << format_double(hps[i].length_scale) << '\n';
    out << "sigma_f_" << idx << " = " << format_double(hps[i].signal_std) << '\n';
    out << "sigma_n_" << idx << " = " << format_double(hps[i].noise_std) << '\n';
  }
}

inline std::vector<Hyperparameters> read_hyperparameters(std::istream& in) {
  std::map<std::string, double> values;
  std::string line;
  while (std::getline(in, line)) {
    boost::algorithm::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("hyperparameter line without '=': " + line);
    std::string key = line.substr(0, eq);
    boost::algorithm::trim(key);
    if (values.count(key)) throw ConfigError("duplicate hyperparameter key '" + key + "'");
    values[key] = parse_double(line.substr(eq + 1));
  }
  std::vector<Hyperparameters> hps;
  for (std::size_t i = 1;; ++i) {
    const std::string idx = std::to_string(i);
    const bool has = values.count("lambda_" + idx) || values.count("sigma_f_" + idx) || values.count("sigma_n_" + idx);
    if (!has) break;
    Hyperparameters hp;
    for (auto [key, field] : {std::pair{"lambda_", &hp.length_scale}, std::pair{"sigma_f_", &hp.signal_std},
                              std::pair{"sigma_n_", &hp.noise_std}}) {
      auto it = values.find(key + idx);
      if (it == values.end()) throw ConfigError("missing hyperparameter '" + std::string(key) + idx + "'");
      *field = it->second;
      values.erase(it);
    }
    hp.validate();
    hps.push_back(hp);
  }
  if (!values.empty()) throw ConfigError("unknown hyperparameter key '" + values.begin()->first + "'");
  if (hps.empty()) throw ConfigError("hyperparameter file defines no outputs");
  return hps;
}

inline std::vector<Hyperparameters> load_hyperparameters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open hyperparameter file '" + path + "'");
  return read_hyperparameters(in);
}

}  // namespace gpct::gp
