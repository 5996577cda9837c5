#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "qtransport/conformation.hpp"
#include "qtransport/dynamics.hpp"
#include "qtransport/hamiltonian.hpp"
#include "qtransport/histogram.hpp"

namespace qtransport {

enum class BallConstraint { kProject, kPenalty };

BallConstraint parse_ball_constraint(std::string_view tag);
std::string_view ball_constraint_tag(BallConstraint c) noexcept;

struct ConformationOptConfig {
  std::size_t n_sites = 7;
  std::size_t n_restarts = 50;
  std::size_t max_evals = 20000;  // per restart
  double f_tol = 1e-8;
  double x_tol = 1e-6;
  double initial_step = 0.1;
  BallConstraint constraint = BallConstraint::kProject;
  /// Weight of the squared out-of-ball distance in penalty mode.
  double penalty_weight = 1e3;
  std::uint64_t seed = 0;
  double window_factor = 0.1;
  double alpha = 1.0;
  GridConfig grid;
  std::size_t threads = 1;
};

struct RestartSummary {
  double initial_p_out = 0.0;
  double final_p_out = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

struct ConformationOptResult {
  Conformation conformation;
  TransferResult transfer;
  std::size_t best_restart = 0;
  std::size_t total_evaluations = 0;
  std::vector<RestartSummary> restarts;
};

/// Nelder-Mead over the 3(N-2) intermediate coordinates with the poles held
/// fixed, maximizing the transfer efficiency; best of independent random
/// restarts (ties go to the lowest restart index).
ConformationOptResult optimize_conformation(const ConformationOptConfig& cfg);

/// Transfer efficiency of an arbitrary conformation in its own default window.
TransferResult evaluate_conformation(const Conformation& conf, double window_factor = 0.1,
                                     const GridConfig& grid = {});

/// Experimental error margins on the FMO entries, in units of h * s^-1.
inline constexpr double kFmoOffDiagonalMarginHz = 3.2e11;
inline constexpr double kFmoDiagonalMarginHz = 17e11;
/// Spreads used for the robustness scan, same units.
inline constexpr double kFmoOffDiagonalSigmaHz = 1e11;
inline constexpr double kFmoDiagonalSigmaHz = 5.4e11;

struct HamiltonianBoxConfig {
  Hamiltonian base;
  /// Per-entry margins in internal (angular-frequency) units.
  double off_diag_margin = 0.0;
  double diag_margin = 0.0;
  std::size_t n_restarts = 200;
  std::size_t max_evals = 2000;  // per restart
  double f_tol = 1e-10;
  double x_tol = 1e-7;
  std::uint64_t seed = 0;
  GridConfig grid;
  std::size_t threads = 1;
};

struct HamiltonianOptResult {
  Hamiltonian optimized;
  TransferResult transfer;
  TransferResult base_transfer;
  std::size_t best_restart = 0;
  std::size_t total_evaluations = 0;
  std::vector<RestartSummary> restarts;
};

/// Box-constrained search over the N(N+1)/2 independent entries, each kept
/// within base +- margin. Restart 0 starts from the base matrix.
HamiltonianOptResult optimize_hamiltonian_box(const HamiltonianBoxConfig& cfg, double window);

/// True when every entry of h lies within the box around base.
bool within_box(const Hamiltonian& h, const Hamiltonian& base, double off_diag_margin,
                double diag_margin);

struct RobustnessConfig {
  /// Gaussian spreads in internal units.
  double sigma_off = 0.0;
  double sigma_diag = 0.0;
  std::uint64_t n_samples = 10000;
  std::uint64_t seed = 0;
  GridConfig grid;
  std::size_t bins = 200;
  std::size_t threads = 1;
};

struct RobustnessResult {
  double mean = 0.0;
  double stddev = 0.0;
  Histogram1D histogram;
};

/// Transfer efficiency under i.i.d. zero-mean Gaussian perturbations of the
/// independent entries, symmetry preserved.
RobustnessResult robustness_scan(const Hamiltonian& h_star, const RobustnessConfig& cfg,
                                 double window);

/// Coherent-vs-dephased evaluation in a fixed window.
TransferResult dephased_evaluation(const Hamiltonian& h, const DephasingConfig& deph,
                                   double window, const GridConfig& grid = {});

}  // namespace qtransport
