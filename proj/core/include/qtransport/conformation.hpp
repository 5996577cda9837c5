#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qtransport/rng.hpp"

namespace qtransport {

using Vec3 = Eigen::Vector3d;

/// Pairs closer than this (in units of the sphere diameter) are rejected.
inline constexpr double kMinSeparation = 1e-6;

/// Center and radius of the sphere whose poles hold the input and output.
inline const Vec3 kBallCenter{0.0, 0.0, 0.5};
inline constexpr double kBallRadius = 0.5;

/// Spatial arrangement of N sites, lengths in units of the sphere diameter.
struct Conformation {
  std::vector<Vec3> positions;
  std::size_t input_index = 0;
  std::size_t output_index = 1;
  double alpha = 1.0;

  std::size_t size() const noexcept { return positions.size(); }
};

/// True when |r - center| <= radius, evaluated exactly as the sampler does.
bool inside_ball(const Vec3& r) noexcept;

/// Radially projects r onto the closed ball. Points inside are returned as-is.
Vec3 project_into_ball(const Vec3& r) noexcept;

/// Smallest pairwise distance; +inf for fewer than two sites.
double min_pair_distance(const Conformation& conf) noexcept;

/// Throws InvalidArgument / DegenerateGeometry if any invariant fails.
void validate(const Conformation& conf);

/// Input at (0,0,0), output at (0,0,1), the n-2 remaining sites i.i.d.
/// uniform in the ball. Site 0 is the input, site n-1 the output.
Conformation sample_conformation(std::size_t n_sites, SampleStream& rng);

/// Two sites at the poles only.
Conformation pole_pair(double alpha = 1.0);

Conformation load_conformation(const std::string& path);
void save_conformation(const Conformation& conf, const std::string& path);

}  // namespace qtransport
