#include "qtransport/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qtransport/errors.hpp"

namespace qtransport {

NelderMeadResult nelder_mead_minimize(const Objective& f, std::vector<double> x0,
                                      std::span<const double> steps,
                                      const NelderMeadOptions& options,
                                      const Projection& project) {
  const std::size_t n = x0.size();
  if (steps.size() != n) throw InvalidArgument("step vector size mismatch");
  if (options.max_evals < 1) throw InvalidArgument("max_evals must be >= 1");

  NelderMeadResult result;
  std::size_t evals = 0;
  auto evaluate = [&](std::vector<double>& x) {
    if (project) project(x);
    ++evals;
    return f(x);
  };

  if (n == 0) {
    result.value = evaluate(x0);
    result.x = std::move(x0);
    result.evaluations = evals;
    result.converged = true;
    return result;
  }

  const double dim = static_cast<double>(n);
  const double reflect = 1.0;
  const double expand = options.adaptive ? 1.0 + 2.0 / dim : 2.0;
  const double contract = options.adaptive ? 0.75 - 1.0 / (2.0 * dim) : 0.5;
  const double shrink = options.adaptive ? 1.0 - 1.0 / dim : 0.5;

  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  values[0] = evaluate(simplex[0]);
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1] = simplex[0];
    simplex[i + 1][i] += steps[i];
    if (evals < options.max_evals) {
      values[i + 1] = evaluate(simplex[i + 1]);
    } else {
      values[i + 1] = values[0];
      simplex[i + 1] = simplex[0];
    }
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), second(n);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> s(n + 1);
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = std::move(simplex[order[i]]);
      v[i] = values[order[i]];
    }
    simplex = std::move(s);
    values = std::move(v);
  };
  auto along = [&](double coeff, const std::vector<double>& from, std::vector<double>& out) {
    for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + coeff * (from[j] - centroid[j]);
  };

  std::size_t iterations = 0;
  bool converged = false;
  while (true) {
    sort_simplex();
    double x_spread = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        x_spread = std::max(x_spread, std::abs(simplex[i][j] - simplex[0][j]));
      }
    }
    if (values[n] - values[0] <= options.f_tol && x_spread <= options.x_tol) {
      converged = true;
      break;
    }
    if (evals >= options.max_evals) break;
    ++iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
    }
    for (auto& c : centroid) c /= dim;

    along(-reflect, simplex[n], trial);
    const double f_reflect = evaluate(trial);
    if (f_reflect < values[0]) {
      if (evals < options.max_evals) {
        along(-reflect * expand, simplex[n], second);
        const double f_expand = evaluate(second);
        if (f_expand < f_reflect) {
          simplex[n] = second;
          values[n] = f_expand;
          continue;
        }
      }
      simplex[n] = trial;
      values[n] = f_reflect;
      continue;
    }
    if (f_reflect < values[n - 1]) {
      simplex[n] = trial;
      values[n] = f_reflect;
      continue;
    }
    if (evals >= options.max_evals) {
      if (f_reflect < values[n]) {
        simplex[n] = trial;
        values[n] = f_reflect;
      }
      continue;
    }
    const bool outside = f_reflect < values[n];
    if (outside) {
      along(-reflect * contract, simplex[n], second);
    } else {
      along(contract, simplex[n], second);
    }
    const double f_contract = evaluate(second);
    if (f_contract < (outside ? f_reflect : values[n])) {
      simplex[n] = second;
      values[n] = f_contract;
      continue;
    }
    for (std::size_t i = 1; i <= n && evals < options.max_evals; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        simplex[i][j] = simplex[0][j] + shrink * (simplex[i][j] - simplex[0][j]);
      }
      values[i] = evaluate(simplex[i]);
    }
  }

  result.x = simplex[0];
  result.value = values[0];
  result.evaluations = evals;
  result.iterations = iterations;
  result.converged = converged;
  return result;
}

}  // namespace qtransport
