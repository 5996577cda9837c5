#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace qtransport {

struct NelderMeadOptions {
  std::size_t max_evals = 2000;
  /// Converged when the spread of simplex values is below f_tol and every
  /// vertex lies within x_tol (max-norm) of the best one.
  double f_tol = 1e-8;
  double x_tol = 1e-6;
  /// Dimension-dependent coefficients (Gao & Han); standard 1/2/0.5/0.5
  /// otherwise.
  bool adaptive = true;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;
/// Maps a trial point onto the feasible set, in place.
using Projection = std::function<void(std::span<double>)>;

/// Minimizes `f` from x0 with an axis-aligned initial simplex of the given
/// per-coordinate steps. Every trial point passes through `project` (when
/// set) before evaluation, so all returned points are feasible. With zero
/// parameters the objective is evaluated once at x0.
NelderMeadResult nelder_mead_minimize(const Objective& f, std::vector<double> x0,
                                      std::span<const double> steps,
                                      const NelderMeadOptions& options = {},
                                      const Projection& project = {});

}  // namespace qtransport
