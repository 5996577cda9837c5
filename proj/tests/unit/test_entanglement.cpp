#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "qtransport/dynamics.hpp"
#include "qtransport/entanglement.hpp"
#include "qtransport/errors.hpp"
#include "test_support.hpp"

namespace qtransport {
namespace {

using test::uniform_over;

// Moment formulas written out directly, as an oracle for the library's
// evaluation. c2 uses 1 - M2 = 2 e2 (pairs), c4 the moment polynomial.
double c2_from_pairs(const std::vector<double>& p) {
  double e2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) e2 += p[i] * p[j];
  }
  const double n = static_cast<double>(p.size());
  return std::sqrt(2.0 * e2 / (1.0 - 1.0 / n));
}

double c4_fourth_power_from_moments(const std::vector<double>& p) {
  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : p) {
    m2 += x * x;
    m3 += x * x * x;
    m4 += x * x * x * x;
  }
  const double n = static_cast<double>(p.size());
  const double den = 1.0 - 6.0 / n + 11.0 / (n * n) - 6.0 / (n * n * n);
  return (1.0 - 6.0 * m2 + 8.0 * m3 + 3.0 * m2 * m2 - 6.0 * m4) / den;
}

std::vector<double> pops_of(const StateVector& psi) {
  const Eigen::VectorXd p = populations(psi);
  return {p.data(), p.data() + p.size()};
}

TEST(Moments, LocalizedState) {
  const auto m = moments(site_state(7, 3), 4);
  ASSERT_EQ(m.size(), 4u);
  for (double v : m) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Moments, UniformStates) {
  const auto w = moments(uniform_over(7, 7), 4);
  EXPECT_NEAR(w[0], 1.0, 1e-15);
  EXPECT_NEAR(w[1], 1.0 / 7.0, 1e-15);
  EXPECT_NEAR(w[2], 1.0 / 49.0, 1e-15);
  EXPECT_NEAR(w[3], 1.0 / 343.0, 1e-15);
  const auto two = moments(uniform_over(7, 2), 4);
  EXPECT_NEAR(two[1], 0.5, 1e-15);
  EXPECT_NEAR(two[2], 0.25, 1e-15);
  EXPECT_NEAR(two[3], 0.125, 1e-15);
}

TEST(Moments, MonotoneAndBounded) {
  SampleStream s = test::stream(20);
  for (int i = 0; i < 1000; ++i) {
    const auto m = moments(test::random_state(7, s), 5);
    ASSERT_NEAR(m[0], 1.0, 1e-12);
    for (std::size_t k = 1; k < m.size(); ++k) {
      ASSERT_LE(m[k], m[k - 1]);
      ASSERT_GE(m[k], std::pow(7.0, -static_cast<double>(k)) * (1 - 1e-12));
    }
  }
}

TEST(C2, ReferenceStates) {
  EXPECT_EQ(c2(site_state(7, 0)), 0.0);
  EXPECT_NEAR(c2(uniform_over(7, 7)), 1.0, 1e-12);
  EXPECT_NEAR(c2(uniform_over(2, 2)), 1.0, 1e-12);
  // Kink constant.
  EXPECT_NEAR(c2(uniform_over(7, 2)), std::sqrt(7.0 / 12.0), 1e-12);
  EXPECT_THROW(c2(site_state(1, 0)), InvalidArgument);
}

TEST(C2, StrictlyIncreasingInSupport) {
  double prev = -1.0;
  for (std::size_t m = 1; m <= 7; ++m) {
    const double v = c2(uniform_over(7, m));
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(C4, ReferenceStates) {
  EXPECT_EQ(c4(uniform_over(7, 3)), 0.0);
  EXPECT_EQ(c4(uniform_over(4, 3)), 0.0);
  EXPECT_NEAR(c4(uniform_over(4, 4)), 1.0, 1e-12);
  EXPECT_NEAR(c4(uniform_over(7, 4)), std::pow(0.09375 * 343.0 / 120.0, 0.25), 1e-12);
  EXPECT_NEAR(c4(uniform_over(7, 4)), 0.7195, 1e-4);
  EXPECT_THROW(c4(uniform_over(3, 3)), InvalidArgument);
}

TEST(Measures, MatchDirectFormulas) {
  SampleStream s = test::stream(21);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t n = 4 + static_cast<std::size_t>(s.uniform() * 6.0);
    const auto p = pops_of(test::random_state(n, s));
    ASSERT_NEAR(c2(p), c2_from_pairs(p), 1e-12);
    ASSERT_NEAR(std::pow(c4(p), 4), c4_fourth_power_from_moments(p), 1e-12);
  }
}

TEST(Measures, BoundedOnRandomStates) {
  SampleStream s = test::stream(22);
  for (int i = 0; i < 10000; ++i) {
    const StateVector psi = test::random_state(7, s);
    const double a = c2(psi);
    const double b = c4(psi);
    ASSERT_GE(a, 0.0);
    ASSERT_LE(a, 1.0);
    ASSERT_GE(b, 0.0);
    ASSERT_LE(b, 1.0);
  }
}

TEST(Measures, PermutationAndPhaseInvariance) {
  SampleStream s = test::stream(23);
  for (int i = 0; i < 10000; ++i) {
    StateVector psi = test::random_state(7, s);
    const double a = c2(psi);
    const double b = c4(psi);
    StateVector other(7);
    std::vector<int> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    for (int k = 6; k > 0; --k) {
      std::swap(perm[static_cast<std::size_t>(k)],
                perm[static_cast<std::size_t>(s.uniform() * (k + 1))]);
    }
    for (int k = 0; k < 7; ++k) {
      other(k) = psi(perm[static_cast<std::size_t>(k)]) * std::polar(1.0, s.uniform(0.0, 6.3));
    }
    ASSERT_NEAR(c2(other), a, 1e-12);
    ASSERT_NEAR(c4(other), b, 1e-6);
  }
}

TEST(Measures, C4VanishesOnThreeSiteSupport) {
  SampleStream s = test::stream(24);
  for (int i = 0; i < 10000; ++i) {
    StateVector psi = StateVector::Zero(7);
    std::vector<int> sites = {0, 1, 2, 3, 4, 5, 6};
    for (int k = 0; k < 3; ++k) {
      const auto pick = static_cast<std::size_t>(k) +
                        static_cast<std::size_t>(s.uniform() * static_cast<double>(7 - k));
      std::swap(sites[static_cast<std::size_t>(k)], sites[pick]);
      psi(sites[static_cast<std::size_t>(k)]) = {s.normal(), s.normal()};
    }
    psi /= psi.norm();
    ASSERT_EQ(c4(psi), 0.0);
  }
}

TEST(C2, ZeroExactlyWhenLocalized) {
  SampleStream s = test::stream(25);
  for (int i = 0; i < 1000; ++i) {
    const StateVector psi = test::random_state(7, s);
    ASSERT_GT(c2(psi), 0.0);
  }
  EXPECT_EQ(c2(site_state(5, 4)), 0.0);
}

TEST(CNu, Dispatch) {
  const auto p = pops_of(uniform_over(7, 4));
  EXPECT_EQ(c_nu(p, 2), c2(p));
  EXPECT_EQ(c_nu(p, 4), c4(p));
  EXPECT_THROW(c_nu(p, 3), InvalidArgument);
}

TEST(TrajectoryMaxima, StationaryLocalized) {
  const Hamiltonian h = make_hamiltonian(Eigen::MatrixXd::Zero(5, 5), 0, 4);
  const auto traj = state_trajectory(h, site_state(5, 0), 1.0, 50);
  const EntanglementRecord r = max_entanglement_over(traj, 1.0);
  EXPECT_EQ(r.c2_max, 0.0);
  EXPECT_EQ(r.c4_max, 0.0);
}

TEST(TrajectoryMaxima, SingleSample) {
  std::vector<PureTrajectoryPoint> traj = {{0.0, site_state(7, 0)}};
  const EntanglementRecord r = max_entanglement_over(traj, 0.0);
  EXPECT_EQ(r.c2_max, 0.0);
  EXPECT_EQ(r.c4_max, 0.0);
  EXPECT_THROW(max_entanglement_over({}, 0.0), InvalidArgument);
}

TEST(TrajectoryMaxima, RabiHalfPeriod) {
  Eigen::MatrixXd m(2, 2);
  m << 0, 1, 1, 0;
  const Hamiltonian h = make_hamiltonian(m, 0, 1);
  const double half = test::kPi / 2.0;
  const auto traj = state_trajectory(h, site_state(2, 0), half, 1024);
  const EntanglementRecord r = max_entanglement_over(traj, half);
  EXPECT_NEAR(r.c2_max, 1.0, 1e-4);
  EXPECT_EQ(r.c4_max, 0.0);  // N < 4
  // Only the samples up to t_star count.
  const EntanglementRecord early = max_entanglement_over(traj, 0.1);
  EXPECT_LT(early.c2_max, 0.3);
}

TEST(MixedEstimate, PureLimit) {
  SampleStream s = test::stream(26);
  for (int i = 0; i < 200; ++i) {
    const StateVector psi = test::random_state(7, s);
    const DensityMatrix rho = pure_density(psi);
    EXPECT_NEAR(c_nu_mixed_estimate(rho, 2), c2(psi), 1e-9);
    EXPECT_NEAR(c_nu_mixed_estimate(rho, 4), c4(psi), 1e-9);
  }
}

TEST(MixedEstimate, MaximallyMixedIsZero) {
  const DensityMatrix rho = DensityMatrix::Identity(7, 7) / 7.0;
  EXPECT_EQ(c_nu_mixed_estimate(rho, 2), 0.0);
  EXPECT_EQ(c_nu_mixed_estimate(rho, 4), 0.0);
}

TEST(MixedEstimate, PartiallyMixedW) {
  const StateVector w = uniform_over(7, 7);
  const DensityMatrix rho = 0.9 * pure_density(w) + 0.1 * DensityMatrix::Identity(7, 7) / 7.0;
  const double v = c_nu_mixed_estimate(rho, 2);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, c2(w));
  // Dominant eigenvalue 0.9 + 0.1/7, eigenvector W.
  EXPECT_NEAR(v, 2.0 * (0.9 + 0.1 / 7.0) - 1.0, 1e-9);
}

}  // namespace
}  // namespace qtransport
