#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "qtransport/dynamics.hpp"

namespace qtransport {

/// M_k = sum_j p_j^k for k = 1..k_max, where p_j are site populations.
/// m[k - 1] holds M_k.
std::vector<double> moments(std::span<const double> populations, std::size_t k_max);
std::vector<double> moments(const StateVector& psi, std::size_t k_max);

/// Bipartite member of the moment hierarchy, sqrt((1 - M2) / (1 - 1/N)).
/// Depends on the state only through its site populations.
double c2(std::span<const double> populations);
double c2(const StateVector& psi);

/// Quadripartite measure; requires N >= 4. A numerator that rounding pushes
/// below zero (states on <= 3 sites) is clamped to zero before the root.
double c4(std::span<const double> populations);
double c4(const StateVector& psi);

/// c_nu for nu in {2, 4}.
double c_nu(std::span<const double> populations, int nu);

struct EntanglementRecord {
  double c2 = 0.0;
  double c4 = 0.0;
  double c2_max = 0.0;
  double c4_max = 0.0;
};

/// Maxima of c2 and c4 over trajectory samples with time <= t_star. c4 is
/// reported as 0 when N < 4. c2/c4 hold the values at the last such sample.
EntanglementRecord max_entanglement_over(std::span<const PureTrajectoryPoint> trajectory,
                                         double t_star);

/// Name recorded in outputs for the mixed-state estimator below.
inline constexpr std::string_view kMixedEstimatorName = "dominant-eigenvector-purity-gated";

/// Quasi-pure surrogate for mixed states: c_nu of the dominant eigenvector
/// of rho, scaled by max(0, 2 lambda_max - 1). Exact for pure states, zero
/// once lambda_max <= 1/2.
double c_nu_mixed_estimate(const DensityMatrix& rho, int nu);

}  // namespace qtransport
