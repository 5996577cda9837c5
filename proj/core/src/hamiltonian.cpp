#include "qtransport/hamiltonian.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "qtransport/errors.hpp"

namespace qtransport {

double to_internal_factor(EnergyUnit unit) noexcept {
  switch (unit) {
    case EnergyUnit::kRadPerSecond:
      return 1.0;
    case EnergyUnit::kPlanckHertz:
      return 2.0 * std::numbers::pi;
    case EnergyUnit::kWavenumber:
      return 2.0 * std::numbers::pi * kSpeedOfLightCmPerS;
  }
  return 1.0;
}

EnergyUnit parse_energy_unit(std::string_view tag) {
  if (tag == "rad_per_s") return EnergyUnit::kRadPerSecond;
  if (tag == "h_hz") return EnergyUnit::kPlanckHertz;
  if (tag == "per_cm") return EnergyUnit::kWavenumber;
  throw ConfigError("unknown energy unit tag: " + std::string(tag));
}

std::string_view energy_unit_tag(EnergyUnit unit) noexcept {
  switch (unit) {
    case EnergyUnit::kRadPerSecond:
      return "rad_per_s";
    case EnergyUnit::kPlanckHertz:
      return "h_hz";
    case EnergyUnit::kWavenumber:
      return "per_cm";
  }
  return "rad_per_s";
}

Hamiltonian make_hamiltonian(const Eigen::MatrixXd& matrix,
                             std::size_t input_index,
                             std::size_t output_index) {
  if (matrix.rows() != matrix.cols()) {
    throw InvalidArgument("Hamiltonian matrix must be square");
  }
  const auto n = static_cast<std::size_t>(matrix.rows());
  if (n < 2) throw InvalidArgument("Hamiltonian needs at least 2 sites");
  if (input_index >= n || output_index >= n || input_index == output_index) {
    throw InvalidArgument("invalid input/output site indices");
  }
  if (!matrix.allFinite()) throw InvalidArgument("Hamiltonian has non-finite entries");
  Hamiltonian h;
  h.matrix = 0.5 * (matrix + matrix.transpose());
  h.input_index = input_index;
  h.output_index = output_index;
  return h;
}

Hamiltonian coupling_matrix(const Conformation& conf) {
  validate(conf);
  const std::size_t n = conf.size();
  Hamiltonian h;
  h.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                   static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = (conf.positions[i] - conf.positions[j]).norm();
      const double coupling = conf.alpha / (r * r * r);
      const auto a = static_cast<Eigen::Index>(i);
      const auto b = static_cast<Eigen::Index>(j);
      h.matrix(a, b) = coupling;
      h.matrix(b, a) = coupling;
    }
  }
  h.input_index = conf.input_index;
  h.output_index = conf.output_index;
  return h;
}

double default_time_window(const Hamiltonian& h, double factor) {
  if (!(factor > 0.0)) throw InvalidArgument("window factor must be positive");
  const double coupling = std::abs(h.io_coupling());
  if (!(coupling > 0.0)) {
    throw InvalidArgument("input-output coupling is zero; time window undefined");
  }
  return factor * std::numbers::pi / (2.0 * coupling);
}

Hamiltonian parse_hamiltonian(const std::string& text, const std::string& origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(origin + ": invalid JSON: " + e.what());
  }
  try {
    const EnergyUnit unit = parse_energy_unit(doc.at("unit").get<std::string>());
    const auto& rows = doc.at("matrix");
    if (!rows.is_array() || rows.empty()) {
      throw ConfigError(origin + ": matrix must be a non-empty array of rows");
    }
    const auto n = rows.size();
    if (doc.contains("dim") && doc.at("dim").get<std::size_t>() != n) {
      throw ConfigError(origin + ": dim does not match the number of matrix rows");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (!rows[i].is_array() || rows[i].size() != n) {
        throw ConfigError(origin + ": matrix is not square");
      }
      for (std::size_t j = 0; j < n; ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            rows[i][j].get<double>();
      }
    }
    if (!m.allFinite()) throw ConfigError(origin + ": non-finite matrix entry");
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance * scale) {
      std::ostringstream msg;
      msg << origin << ": matrix asymmetry " << asym / (scale > 0 ? scale : 1.0)
          << " (relative) exceeds " << kSymmetryTolerance;
      throw ConfigError(msg.str());
    }

    const std::size_t default_in = 0;
    const std::size_t default_out = n >= 3 ? 2 : 1;
    const auto in = doc.value("input_site", default_in);
    const auto out = doc.value("output_site", default_out);
    if (in >= n || out >= n || in == out) {
      throw ConfigError(origin + ": invalid input_site/output_site");
    }
    Hamiltonian h = make_hamiltonian(m * to_internal_factor(unit), in, out);
    h.source_unit = unit;
    if (doc.contains("labels")) {
      h.labels = doc.at("labels").get<std::vector<std::string>>();
      if (h.labels.size() != n) {
        throw ConfigError(origin + ": labels length does not match dim");
      }
    }
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(origin + ": malformed Hamiltonian file: " + e.what());
  }
}

Hamiltonian load_hamiltonian(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open Hamiltonian file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_hamiltonian(buf.str(), path);
}

Eigen::MatrixXd matrix_in_unit(const Hamiltonian& h, EnergyUnit unit) {
  return h.matrix / to_internal_factor(unit);
}

std::string serialize_hamiltonian(const Hamiltonian& h, EnergyUnit unit) {
  const Eigen::MatrixXd m = matrix_in_unit(h, unit);
  nlohmann::json doc;
  doc["unit"] = std::string(energy_unit_tag(unit));
  doc["dim"] = h.dim();
  doc["matrix"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    doc["matrix"].push_back(row);
  }
  doc["input_site"] = h.input_index;
  doc["output_site"] = h.output_index;
  if (!h.labels.empty()) doc["labels"] = h.labels;
  return doc.dump(2);
}

void save_hamiltonian(const Hamiltonian& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write Hamiltonian file: " + path);
  out << serialize_hamiltonian(h, h.source_unit) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace qtransport
