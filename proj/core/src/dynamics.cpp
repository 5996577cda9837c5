#include "qtransport/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include "qtransport/errors.hpp"

namespace qtransport {

namespace {

using cd = std::complex<double>;

// Phases are recomputed exactly every this many grid steps.
constexpr std::size_t kReanchorStride = 256;

// Spectral route for the Liouvillian is accepted only if the eigenvector
// basis reproduces the generator this well and is this well conditioned.
constexpr double kReconstructionTolerance = 1e-11;
constexpr double kConditionLimit = 1e6;

std::size_t checked_grid(const GridConfig& grid) {
  validate(grid);
  return grid.grid_points;
}

}  // namespace

void validate(const GridConfig& grid) {
  if (grid.grid_points < 2) throw InvalidArgument("grid_points must be >= 2");
  if (!(grid.refine_tol > 0.0)) throw InvalidArgument("refine_tol must be positive");
}

DephasingConvention parse_dephasing_convention(std::string_view tag) {
  if (tag == "projector") return DephasingConvention::kProjector;
  if (tag == "double") return DephasingConvention::kDouble;
  throw ConfigError("unknown dephasing convention: " + std::string(tag));
}

std::string_view dephasing_convention_tag(DephasingConvention c) noexcept {
  return c == DephasingConvention::kDouble ? "double" : "projector";
}

StateVector site_state(std::size_t dim, std::size_t site) {
  if (site >= dim) throw InvalidArgument("site index out of range");
  StateVector psi = StateVector::Zero(static_cast<Eigen::Index>(dim));
  psi(static_cast<Eigen::Index>(site)) = 1.0;
  return psi;
}

DensityMatrix pure_density(const StateVector& psi) { return psi * psi.adjoint(); }

void check_pure_state(const StateVector& psi) {
  if (psi.size() == 0) throw InvalidArgument("empty state vector");
  if (std::abs(psi.norm() - 1.0) > kStateTolerance) {
    throw InvalidArgument("state vector is not normalized");
  }
}

void check_density_matrix(const DensityMatrix& rho) {
  if (rho.rows() == 0 || rho.rows() != rho.cols()) {
    throw InvalidArgument("density matrix must be square and non-empty");
  }
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kStateTolerance) {
    throw InvalidArgument("density matrix is not Hermitian");
  }
  if (std::abs(rho.trace() - cd(1.0, 0.0)) > kStateTolerance) {
    throw InvalidArgument("density matrix trace differs from 1");
  }
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kStateTolerance) {
    throw InvalidArgument("density matrix has a negative eigenvalue");
  }
}

Eigen::VectorXd populations(const StateVector& psi) { return psi.cwiseAbs2(); }

Eigen::VectorXd populations(const DensityMatrix& rho) {
  return rho.diagonal().real();
}

// ---------------------------------------------------------------------------
// Closed evolution

ClosedEvolution::ClosedEvolution(const Hamiltonian& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition of the Hamiltonian failed");
  }
  energies_ = es.eigenvalues();
  modes_ = es.eigenvectors();
}

StateVector ClosedEvolution::evolve(const StateVector& psi0, double t) const {
  if (psi0.size() != energies_.size()) throw InvalidArgument("state dimension mismatch");
  const Eigen::VectorXcd overlaps = modes_.transpose().cast<cd>() * psi0;
  Eigen::VectorXcd phased(overlaps.size());
  for (Eigen::Index k = 0; k < overlaps.size(); ++k) {
    phased(k) = std::polar(1.0, -energies_(k) * t) * overlaps(k);
  }
  return modes_.cast<cd>() * phased;
}

StateVector ClosedEvolution::evolve_from_site(std::size_t site, double t) const {
  return evolve(site_state(dim(), site), t);
}

double ClosedEvolution::transition_probability(std::size_t from, std::size_t to,
                                               double t) const {
  const auto a = static_cast<Eigen::Index>(from);
  const auto b = static_cast<Eigen::Index>(to);
  double re = 0.0;
  double im = 0.0;
  for (Eigen::Index k = 0; k < energies_.size(); ++k) {
    const double w = modes_(a, k) * modes_(b, k);
    const double phase = energies_(k) * t;
    re += w * std::cos(phase);
    im -= w * std::sin(phase);
  }
  return re * re + im * im;
}

namespace {

// Phase-stepping kernel over K padded lanes (unused lanes carry zero
// weight). A compile-time lane count lets the inner loop vectorize. Real
// arithmetic throughout: std::complex products carry NaN handling that
// would dominate this loop.
template <std::size_t K>
void stepped_probability(const double* energy, const double* weight, std::size_t n,
                         double dt, std::span<double> out) {
  alignas(64) double re[K] = {}, im[K] = {}, step_re[K] = {}, step_im[K] = {},
                     w[K] = {}, e[K] = {};
  for (std::size_t k = 0; k < n; ++k) {
    e[k] = energy[k];
    w[k] = weight[k];
    step_re[k] = std::cos(e[k] * dt);
    step_im[k] = -std::sin(e[k] * dt);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i % kReanchorStride == 0) {
      const double t = static_cast<double>(i) * dt;
      for (std::size_t k = 0; k < K; ++k) {
        re[k] = std::cos(e[k] * t);
        im[k] = -std::sin(e[k] * t);
      }
    }
    double acc_re = 0.0;
    double acc_im = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      acc_re += w[k] * re[k];
      acc_im += w[k] * im[k];
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double r = re[k] * step_re[k] - im[k] * step_im[k];
      im[k] = re[k] * step_im[k] + im[k] * step_re[k];
      re[k] = r;
    }
    out[i] = acc_re * acc_re + acc_im * acc_im;
  }
}

}  // namespace

void ClosedEvolution::transition_probability_grid(std::size_t from, std::size_t to,
                                                  double dt,
                                                  std::span<double> out) const {
  const auto n = static_cast<std::size_t>(energies_.size());
  const auto a = static_cast<Eigen::Index>(from);
  const auto b = static_cast<Eigen::Index>(to);
  std::vector<double> weight(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    weight[k] = modes_(a, kk) * modes_(b, kk);
  }
  if (n <= 8) {
    stepped_probability<8>(energies_.data(), weight.data(), n, dt, out);
  } else if (n <= 16) {
    stepped_probability<16>(energies_.data(), weight.data(), n, dt, out);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = transition_probability(from, to, static_cast<double>(i) * dt);
    }
  }
}

void ClosedEvolution::population_grid(std::size_t from, double dt, std::size_t count,
                                      Eigen::MatrixXd& out) const {
  const Eigen::Index n = energies_.size();
  const auto a = static_cast<Eigen::Index>(from);
  out.resize(static_cast<Eigen::Index>(count), n);
  Eigen::VectorXcd phase(n), step(n), coeff(n), amp(n);
  for (Eigen::Index k = 0; k < n; ++k) step(k) = std::polar(1.0, -energies_(k) * dt);
  for (std::size_t i = 0; i < count; ++i) {
    if (i % kReanchorStride == 0) {
      const double t = static_cast<double>(i) * dt;
      for (Eigen::Index k = 0; k < n; ++k) phase(k) = std::polar(1.0, -energies_(k) * t);
    }
    for (Eigen::Index k = 0; k < n; ++k) coeff(k) = modes_(a, k) * phase(k);
    amp.noalias() = modes_.cast<cd>() * coeff;
    out.row(static_cast<Eigen::Index>(i)) = amp.cwiseAbs2().transpose();
    phase = phase.cwiseProduct(step);
  }
}

// ---------------------------------------------------------------------------
// Liouvillian

Eigen::VectorXd hermitian_to_coords(const DensityMatrix& rho) {
  const Eigen::Index n = rho.rows();
  Eigen::VectorXd v(n * n);
  for (Eigen::Index j = 0; j < n; ++j) v(j) = rho(j, j).real();
  Eigen::Index p = n;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      v(p++) = rho(i, j).real();
      v(p++) = rho(i, j).imag();
    }
  }
  return v;
}

DensityMatrix coords_to_hermitian(const Eigen::VectorXd& coords, std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  if (coords.size() != n * n) throw InvalidArgument("coordinate vector size mismatch");
  DensityMatrix rho(n, n);
  for (Eigen::Index j = 0; j < n; ++j) rho(j, j) = coords(j);
  Eigen::Index p = n;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const cd value(coords(p), coords(p + 1));
      rho(i, j) = value;
      rho(j, i) = std::conj(value);
      p += 2;
    }
  }
  return rho;
}

Eigen::MatrixXd liouvillian(const Hamiltonian& h, const DephasingConfig& deph) {
  if (!(deph.gamma >= 0.0) || !std::isfinite(deph.gamma)) {
    throw InvalidArgument("dephasing rate must be finite and >= 0");
  }
  const Eigen::Index n = h.matrix.rows();
  const Eigen::Index dim = n * n;
  const double kappa = deph.coherence_decay_rate();
  const Eigen::MatrixXcd hc = h.matrix.cast<cd>();
  Eigen::MatrixXd gen(dim, dim);
  Eigen::VectorXd basis = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index m = 0; m < dim; ++m) {
    basis.setZero();
    basis(m) = 1.0;
    const DensityMatrix b = coords_to_hermitian(basis, static_cast<std::size_t>(n));
    DensityMatrix image = cd(0.0, -1.0) * (hc * b - b * hc);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j) image(i, j) -= kappa * b(i, j);
      }
    }
    gen.col(m) = hermitian_to_coords(image);
  }
  return gen;
}

OpenEvolution::OpenEvolution(const Hamiltonian& h, const DephasingConfig& deph)
    : dim_(h.dim()), generator_(liouvillian(h, deph)) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(generator_);
  if (es.info() != Eigen::Success) return;
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(eigenvectors_);
  inverse_eigenvectors_ = lu.inverse();
  if (!inverse_eigenvectors_.allFinite()) return;
  const double gen_norm = std::max(generator_.norm(), 1e-300);
  const double reconstruction =
      (eigenvectors_ * eigenvalues_.asDiagonal() * inverse_eigenvectors_ -
       generator_.cast<cd>())
          .norm() /
      gen_norm;
  // Columns are unit-norm, so ||V||_F = sqrt(dim); this bounds cond_F.
  const double condition = eigenvectors_.norm() * inverse_eigenvectors_.norm();
  spectral_ = reconstruction <= kReconstructionTolerance &&
              condition <= kConditionLimit * static_cast<double>(generator_.rows());
}

Eigen::VectorXd OpenEvolution::evolve_coords(const Eigen::VectorXd& v0, double t) const {
  if (spectral_) {
    Eigen::VectorXcd c = inverse_eigenvectors_ * v0.cast<cd>();
    for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::exp(eigenvalues_(k) * t);
    return (eigenvectors_ * c).real();
  }
  const Eigen::MatrixXd scaled = generator_ * t;
  return scaled.exp() * v0;
}

DensityMatrix OpenEvolution::evolve(const DensityMatrix& rho0, double t) const {
  if (!(t >= 0.0)) throw InvalidArgument("evolution time must be >= 0");
  if (static_cast<std::size_t>(rho0.rows()) != dim_) {
    throw InvalidArgument("density matrix dimension mismatch");
  }
  return coords_to_hermitian(evolve_coords(hermitian_to_coords(rho0), t), dim_);
}

double OpenEvolution::population(const DensityMatrix& rho0, std::size_t site,
                                 double t) const {
  const auto s = static_cast<Eigen::Index>(site);
  const Eigen::VectorXd v0 = hermitian_to_coords(rho0);
  if (spectral_) {
    const Eigen::VectorXcd c = inverse_eigenvectors_ * v0.cast<cd>();
    cd acc = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      acc += eigenvectors_(s, k) * c(k) * std::exp(eigenvalues_(k) * t);
    }
    return acc.real();
  }
  return evolve_coords(v0, t)(s);
}

void OpenEvolution::population_grid(const DensityMatrix& rho0, std::size_t site,
                                    double dt, std::span<double> out) const {
  const auto s = static_cast<Eigen::Index>(site);
  const Eigen::VectorXd v0 = hermitian_to_coords(rho0);
  if (spectral_) {
    const Eigen::VectorXcd c = inverse_eigenvectors_ * v0.cast<cd>();
    const Eigen::Index m = c.size();
    Eigen::VectorXcd weight(m), factor(m), step(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      weight(k) = eigenvectors_(s, k) * c(k);
      step(k) = std::exp(eigenvalues_(k) * dt);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (i % kReanchorStride == 0) {
        const double t = static_cast<double>(i) * dt;
        for (Eigen::Index k = 0; k < m; ++k) factor(k) = std::exp(eigenvalues_(k) * t);
      }
      double acc = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) {
        acc += (weight(k) * factor(k)).real();
        factor(k) *= step(k);
      }
      out[i] = acc;
    }
    return;
  }
  const Eigen::MatrixXd scaled = generator_ * dt;
  const Eigen::MatrixXd step = scaled.exp();
  Eigen::VectorXd v = v0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = v(s);
    v = step * v;
  }
}

// ---------------------------------------------------------------------------
// Public operations

StateVector propagate_closed(const Hamiltonian& h, const StateVector& psi0, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("evolution time must be >= 0");
  if (t == 0.0) return psi0;
  return ClosedEvolution(h).evolve(psi0, t);
}

DensityMatrix propagate_open(const Hamiltonian& h, const DensityMatrix& rho0,
                             const DephasingConfig& deph, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("evolution time must be >= 0");
  return OpenEvolution(h, deph).evolve(rho0, t);
}

TransferResult transfer_efficiency_closed(const ClosedEvolution& evolution,
                                          std::size_t input, std::size_t output,
                                          double window, const GridConfig& grid) {
  if (!(window > 0.0)) throw InvalidArgument("time window must be positive");
  const std::size_t n = checked_grid(grid);
  std::vector<double> values(n);
  const double dt = window / static_cast<double>(n - 1);
  evolution.transition_probability_grid(input, output, dt, values);
  const WindowMaximum best = detail::refine_window_maximum(
      values, window, grid.refine_tol * window,
      [&](double t) { return evolution.transition_probability(input, output, t); });
  return {std::clamp(best.value, 0.0, 1.0), std::clamp(best.time, 0.0, window), window};
}

TransferResult transfer_efficiency_closed(const Hamiltonian& h, double window,
                                          const GridConfig& grid) {
  return transfer_efficiency_closed(ClosedEvolution(h), h.input_index, h.output_index,
                                    window, grid);
}

TransferResult transfer_efficiency_open(const OpenEvolution& evolution,
                                        std::size_t input, std::size_t output,
                                        double window, const GridConfig& grid) {
  if (!(window > 0.0)) throw InvalidArgument("time window must be positive");
  const std::size_t n = checked_grid(grid);
  const DensityMatrix rho0 = pure_density(site_state(evolution.dim(), input));
  std::vector<double> values(n);
  const double dt = window / static_cast<double>(n - 1);
  evolution.population_grid(rho0, output, dt, values);
  const WindowMaximum best = detail::refine_window_maximum(
      values, window, grid.refine_tol * window,
      [&](double t) { return evolution.population(rho0, output, t); });
  return {std::clamp(best.value, 0.0, 1.0), std::clamp(best.time, 0.0, window), window};
}

TransferResult transfer_efficiency_open(const Hamiltonian& h,
                                        const DephasingConfig& deph, double window,
                                        const GridConfig& grid) {
  return transfer_efficiency_open(OpenEvolution(h, deph), h.input_index,
                                  h.output_index, window, grid);
}

namespace {

void check_trajectory_args(double window, std::size_t n_samples) {
  if (!(window > 0.0)) throw InvalidArgument("trajectory window must be positive");
  if (n_samples < 2) throw InvalidArgument("trajectory needs at least 2 samples");
}

double sample_time(double window, std::size_t i, std::size_t n_samples) {
  if (i + 1 == n_samples) return window;
  return window * static_cast<double>(i) / static_cast<double>(n_samples - 1);
}

}  // namespace

std::vector<PureTrajectoryPoint> state_trajectory(const Hamiltonian& h,
                                                  const StateVector& psi0,
                                                  double window,
                                                  std::size_t n_samples) {
  check_trajectory_args(window, n_samples);
  check_pure_state(psi0);
  const ClosedEvolution evolution(h);
  std::vector<PureTrajectoryPoint> out;
  out.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = sample_time(window, i, n_samples);
    out.push_back({t, i == 0 ? psi0 : evolution.evolve(psi0, t)});
  }
  return out;
}

std::vector<MixedTrajectoryPoint> state_trajectory(const Hamiltonian& h,
                                                   const DensityMatrix& rho0,
                                                   const DephasingConfig& deph,
                                                   double window,
                                                   std::size_t n_samples) {
  check_trajectory_args(window, n_samples);
  check_density_matrix(rho0);
  const OpenEvolution evolution(h, deph);
  std::vector<MixedTrajectoryPoint> out;
  out.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = sample_time(window, i, n_samples);
    out.push_back({t, i == 0 ? rho0 : evolution.evolve(rho0, t)});
  }
  return out;
}

}  // namespace qtransport
