#include "qtransport/entanglement.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "qtransport/errors.hpp"

namespace qtransport {

std::vector<double> moments(std::span<const double> populations, std::size_t k_max) {
  if (k_max < 1) throw InvalidArgument("k_max must be >= 1");
  std::vector<double> m(k_max, 0.0);
  for (const double p : populations) {
    double power = p;
    for (std::size_t k = 0; k < k_max; ++k) {
      m[k] += power;
      power *= p;
    }
  }
  return m;
}

std::vector<double> moments(const StateVector& psi, std::size_t k_max) {
  const Eigen::VectorXd p = populations(psi);
  return moments(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                 k_max);
}

double c2(std::span<const double> populations) {
  const std::size_t n = populations.size();
  if (n < 2) throw InvalidArgument("c2 requires N >= 2");
  double m2 = 0.0;
  for (const double p : populations) m2 += p * p;
  const double value = (1.0 - m2) / (1.0 - 1.0 / static_cast<double>(n));
  return std::clamp(std::sqrt(std::max(value, 0.0)), 0.0, 1.0);
}

double c4(std::span<const double> populations) {
  const std::size_t n = populations.size();
  if (n < 4) throw InvalidArgument("c4 requires N >= 4");
  // With sum p = 1 the numerator 1 - 6 M2 + 8 M3 + 3 M2^2 - 6 M4 equals
  // 24 e4, e4 the fourth elementary symmetric polynomial of the
  // populations. That form is a sum of non-negative products, so it is
  // exactly zero on states with fewer than four occupied sites instead of
  // rounding noise of either sign.
  double e[5] = {1.0, 0.0, 0.0, 0.0, 0.0};
  for (const double p : populations) {
    for (int k = 4; k >= 1; --k) e[k] += p * e[k - 1];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double numerator = 24.0 * e[4];
  const double denominator =
      1.0 - 6.0 * inv_n + 11.0 * inv_n * inv_n - 6.0 * inv_n * inv_n * inv_n;
  const double ratio = std::max(numerator, 0.0) / denominator;
  return std::clamp(std::sqrt(std::sqrt(ratio)), 0.0, 1.0);
}

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

double c2(const StateVector& psi) {
  const Eigen::VectorXd p = populations(psi);
  return c2(as_span(p));
}

double c4(const StateVector& psi) {
  const Eigen::VectorXd p = populations(psi);
  return c4(as_span(p));
}

double c_nu(std::span<const double> populations, int nu) {
  switch (nu) {
    case 2:
      return c2(populations);
    case 4:
      return c4(populations);
    default:
      throw InvalidArgument("only nu = 2 and nu = 4 are supported");
  }
}

EntanglementRecord max_entanglement_over(std::span<const PureTrajectoryPoint> trajectory,
                                         double t_star) {
  if (trajectory.empty()) throw InvalidArgument("empty trajectory");
  EntanglementRecord record;
  bool any = false;
  for (const auto& point : trajectory) {
    if (point.time > t_star) continue;
    const Eigen::VectorXd p = populations(point.state);
    record.c2 = c2(as_span(p));
    record.c4 = p.size() >= 4 ? c4(as_span(p)) : 0.0;
    record.c2_max = std::max(record.c2_max, record.c2);
    record.c4_max = std::max(record.c4_max, record.c4);
    any = true;
  }
  if (!any) throw InvalidArgument("trajectory has no sample at or before t_star");
  return record;
}

double c_nu_mixed_estimate(const DensityMatrix& rho, int nu) {
  if (nu != 2 && nu != 4) throw InvalidArgument("only nu = 2 and nu = 4 are supported");
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho);
  const Eigen::Index top = es.eigenvalues().size() - 1;
  const double lambda_max = es.eigenvalues()(top);
  const double gate = std::max(0.0, 2.0 * lambda_max - 1.0);
  if (gate == 0.0) return 0.0;
  const Eigen::VectorXd p = es.eigenvectors().col(top).cwiseAbs2();
  return std::clamp(gate * c_nu(as_span(p), nu), 0.0, 1.0);
}

}  // namespace qtransport
