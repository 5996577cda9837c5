#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "qtransport/conformation.hpp"

namespace qtransport {

/// Energy unit of a matrix on disk. Internally everything is an angular
/// frequency (hbar = 1), so an eigenvalue times a time is a phase.
enum class EnergyUnit {
  kRadPerSecond,  // "rad_per_s", identity
  kPlanckHertz,   // "h_hz", E = h * nu -> omega = 2 pi nu
  kWavenumber,    // "per_cm", omega = 2 pi c[cm/s] * nu~
};

inline constexpr double kSpeedOfLightCmPerS = 2.99792458e10;

double to_internal_factor(EnergyUnit unit) noexcept;
EnergyUnit parse_energy_unit(std::string_view tag);
std::string_view energy_unit_tag(EnergyUnit unit) noexcept;

/// Real-symmetric coupling/energy matrix in the single-excitation basis.
struct Hamiltonian {
  Eigen::MatrixXd matrix;
  std::size_t input_index = 0;
  std::size_t output_index = 1;
  std::vector<std::string> labels;
  /// Unit the matrix was read from; used when writing it back.
  EnergyUnit source_unit = EnergyUnit::kRadPerSecond;

  std::size_t dim() const noexcept {
    return static_cast<std::size_t>(matrix.rows());
  }
  double io_coupling() const { return matrix(input_index, output_index); }
};

/// Builds a Hamiltonian from a matrix, enforcing exact symmetry.
Hamiltonian make_hamiltonian(const Eigen::MatrixXd& matrix,
                             std::size_t input_index, std::size_t output_index);

/// Off-diagonal entries alpha / r_ij^3, zero diagonal.
Hamiltonian coupling_matrix(const Conformation& conf);

/// factor * pi / (2 |H[in][out]|).
double default_time_window(const Hamiltonian& h, double factor = 0.1);

/// Relative tolerance on file asymmetry, measured against the largest entry.
inline constexpr double kSymmetryTolerance = 1e-12;

/// Reads the Hamiltonian JSON schema. Missing input/output default to
/// chromophores 1 and 3 (indices 0 and 2) when dim >= 3.
Hamiltonian load_hamiltonian(const std::string& path);

/// Parses the same schema from a string (no file access).
Hamiltonian parse_hamiltonian(const std::string& text,
                              const std::string& origin = "<string>");

/// Matrix expressed in `unit` (inverse of the ingestion conversion).
Eigen::MatrixXd matrix_in_unit(const Hamiltonian& h, EnergyUnit unit);

std::string serialize_hamiltonian(const Hamiltonian& h, EnergyUnit unit);
void save_hamiltonian(const Hamiltonian& h, const std::string& path);

}  // namespace qtransport
