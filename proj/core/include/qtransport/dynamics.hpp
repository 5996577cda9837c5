#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "qtransport/hamiltonian.hpp"

namespace qtransport {

using StateVector = Eigen::VectorXcd;
using DensityMatrix = Eigen::MatrixXcd;

inline constexpr double kStateTolerance = 1e-9;

/// Time-maximization grid: uniform scan, then golden-section refinement
/// around the best grid point down to refine_tol * window.
struct GridConfig {
  std::size_t grid_points = 1024;
  double refine_tol = 1e-6;
};

void validate(const GridConfig& grid);

/// Transfer efficiency over [0, window] and the time it is reached.
struct TransferResult {
  double p_out = 0.0;
  double t_star = 0.0;
  double window = 0.0;
};

/// projector: off-diagonal coherences decay at gamma.
/// double:    they decay at 2 * gamma.
enum class DephasingConvention { kProjector, kDouble };

DephasingConvention parse_dephasing_convention(std::string_view tag);
std::string_view dephasing_convention_tag(DephasingConvention c) noexcept;

struct DephasingConfig {
  double gamma = 0.0;
  DephasingConvention convention = DephasingConvention::kProjector;

  double coherence_decay_rate() const noexcept {
    return convention == DephasingConvention::kDouble ? 2.0 * gamma : gamma;
  }
};

StateVector site_state(std::size_t dim, std::size_t site);
DensityMatrix pure_density(const StateVector& psi);

/// Throws InvalidArgument unless ||psi|| = 1 within kStateTolerance.
void check_pure_state(const StateVector& psi);
/// Throws InvalidArgument unless rho is Hermitian, unit-trace and PSD
/// within kStateTolerance.
void check_density_matrix(const DensityMatrix& rho);

/// Site populations |<j|psi>|^2 or rho_jj.
Eigen::VectorXd populations(const StateVector& psi);
Eigen::VectorXd populations(const DensityMatrix& rho);

/// Maximum of a scalar function of time over [0, window].
struct WindowMaximum {
  double value = 0.0;
  double time = 0.0;
};

namespace detail {

/// Golden-section refinement of the best grid point. grid_values[i] holds
/// f(i * window / (n - 1)). The returned value is never below the best grid
/// value.
template <class F>
WindowMaximum refine_window_maximum(std::span<const double> grid_values,
                                    double window, double tol, F&& f) {
  const std::size_t n = grid_values.size();
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (grid_values[i] > grid_values[best]) best = i;
  }
  const double dt = window / static_cast<double>(n - 1);
  WindowMaximum result{grid_values[best], static_cast<double>(best) * dt};
  if (best == n - 1) result.time = window;

  double lo = best == 0 ? 0.0 : static_cast<double>(best - 1) * dt;
  double hi = best == n - 1 ? window : static_cast<double>(best + 1) * dt;
  constexpr double kInvPhi = 0.6180339887498948482;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  auto consider = [&result](double t, double v) {
    if (v > result.value) result = {v, t};
  };
  consider(x1, f1);
  consider(x2, f2);
  while (hi - lo > tol) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
      consider(x1, f1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
      consider(x2, f2);
    }
  }
  return result;
}

}  // namespace detail

/// Unitary evolution through the spectral decomposition of H.
///
/// psi(t) = sum_k exp(-i E_k t) v_k <v_k|psi0>. The factorization is done
/// once; evaluating many times is cheap.
class ClosedEvolution {
 public:
  explicit ClosedEvolution(const Hamiltonian& h);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(energies_.size()); }
  const Eigen::VectorXd& energies() const noexcept { return energies_; }
  const Eigen::MatrixXd& modes() const noexcept { return modes_; }

  StateVector evolve(const StateVector& psi0, double t) const;
  StateVector evolve_from_site(std::size_t site, double t) const;

  /// |<to| exp(-iHt) |from>|^2.
  double transition_probability(std::size_t from, std::size_t to, double t) const;

  /// out[i] = transition_probability(from, to, i * dt), evaluated by phase
  /// stepping with periodic re-anchoring.
  void transition_probability_grid(std::size_t from, std::size_t to, double dt,
                                   std::span<double> out) const;

  /// Populations of exp(-iHt)|from> at t = i * dt for i < count; row i of
  /// `out` (count x N) receives the populations at the i-th time.
  void population_grid(std::size_t from, double dt, std::size_t count,
                       Eigen::MatrixXd& out) const;

 private:
  Eigen::VectorXd energies_;
  Eigen::MatrixXd modes_;
};

/// Real coordinates of a Hermitian N x N matrix: the N diagonal entries,
/// then (Re, Im) of each upper-triangle entry in row-major order.
Eigen::VectorXd hermitian_to_coords(const DensityMatrix& rho);
DensityMatrix coords_to_hermitian(const Eigen::VectorXd& coords, std::size_t dim);

/// Real N^2 x N^2 generator of drho/dt = -i[H, rho] + dephasing.
Eigen::MatrixXd liouvillian(const Hamiltonian& h, const DephasingConfig& deph);

/// Open evolution with local dephasing.
///
/// The generator is diagonalized once when its eigenvector basis is well
/// conditioned; otherwise (e.g. the degenerate gamma = 0 spectrum) the
/// propagator falls back to scaling-and-squaring matrix exponentials.
class OpenEvolution {
 public:
  OpenEvolution(const Hamiltonian& h, const DephasingConfig& deph);

  std::size_t dim() const noexcept { return dim_; }
  bool spectral() const noexcept { return spectral_; }
  const Eigen::MatrixXd& generator() const noexcept { return generator_; }

  DensityMatrix evolve(const DensityMatrix& rho0, double t) const;

  /// rho_site,site(t) starting from rho0.
  double population(const DensityMatrix& rho0, std::size_t site, double t) const;

  /// out[i] = population(rho0, site, i * dt).
  void population_grid(const DensityMatrix& rho0, std::size_t site, double dt,
                       std::span<double> out) const;

 private:
  Eigen::VectorXd evolve_coords(const Eigen::VectorXd& v0, double t) const;

  std::size_t dim_;
  Eigen::MatrixXd generator_;
  bool spectral_ = false;
  Eigen::VectorXcd eigenvalues_;
  Eigen::MatrixXcd eigenvectors_;
  Eigen::MatrixXcd inverse_eigenvectors_;
};

StateVector propagate_closed(const Hamiltonian& h, const StateVector& psi0, double t);

DensityMatrix propagate_open(const Hamiltonian& h, const DensityMatrix& rho0,
                             const DephasingConfig& deph, double t);

/// max over [0, window] of |<out|psi(t)>|^2 with psi(0) = |in>.
TransferResult transfer_efficiency_closed(const Hamiltonian& h, double window,
                                          const GridConfig& grid = {});
TransferResult transfer_efficiency_closed(const ClosedEvolution& evolution,
                                          std::size_t input, std::size_t output,
                                          double window, const GridConfig& grid = {});

/// Same objective with <out|rho(t)|out>, rho(0) = |in><in|.
TransferResult transfer_efficiency_open(const Hamiltonian& h,
                                        const DephasingConfig& deph, double window,
                                        const GridConfig& grid = {});
TransferResult transfer_efficiency_open(const OpenEvolution& evolution,
                                        std::size_t input, std::size_t output,
                                        double window, const GridConfig& grid = {});

struct PureTrajectoryPoint {
  double time;
  StateVector state;
};

struct MixedTrajectoryPoint {
  double time;
  DensityMatrix state;
};

/// n_samples uniformly spaced times on [0, window], both endpoints included.
std::vector<PureTrajectoryPoint> state_trajectory(const Hamiltonian& h,
                                                  const StateVector& psi0,
                                                  double window,
                                                  std::size_t n_samples);
std::vector<MixedTrajectoryPoint> state_trajectory(const Hamiltonian& h,
                                                   const DensityMatrix& rho0,
                                                   const DephasingConfig& deph,
                                                   double window,
                                                   std::size_t n_samples);

}  // namespace qtransport
