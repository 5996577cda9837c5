#include "qtransport/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qtransport/errors.hpp"
#include "qtransport/nelder_mead.hpp"
#include "qtransport/parallel.hpp"
#include "qtransport/rng.hpp"
#include "qtransport/statistics.hpp"

namespace qtransport {

BallConstraint parse_ball_constraint(std::string_view tag) {
  if (tag == "project") return BallConstraint::kProject;
  if (tag == "penalty") return BallConstraint::kPenalty;
  throw ConfigError("unknown ball-constraint mode: " + std::string(tag));
}

std::string_view ball_constraint_tag(BallConstraint c) noexcept {
  return c == BallConstraint::kPenalty ? "penalty" : "project";
}

TransferResult evaluate_conformation(const Conformation& conf, double window_factor,
                                     const GridConfig& grid) {
  const Hamiltonian h = coupling_matrix(conf);
  return transfer_efficiency_closed(h, default_time_window(h, window_factor), grid);
}

namespace {

// Free coordinates are the intermediate sites 1..N-2 of a sampled layout
// (input 0, output N-1), three per site.
Conformation decode(const Conformation& frame, std::span<const double> x) {
  Conformation conf = frame;
  for (std::size_t s = 0; s + 2 < conf.size(); ++s) {
    conf.positions[s + 1] = Vec3(x[3 * s], x[3 * s + 1], x[3 * s + 2]);
  }
  return conf;
}

std::vector<double> encode(const Conformation& conf) {
  std::vector<double> x;
  for (std::size_t s = 1; s + 1 < conf.size(); ++s) {
    x.insert(x.end(), conf.positions[s].data(), conf.positions[s].data() + 3);
  }
  return x;
}

void project_coordinates(std::span<double> x) {
  for (std::size_t s = 0; 3 * s < x.size(); ++s) {
    const Vec3 p = project_into_ball(Vec3(x[3 * s], x[3 * s + 1], x[3 * s + 2]));
    x[3 * s] = p.x();
    x[3 * s + 1] = p.y();
    x[3 * s + 2] = p.z();
  }
}

double efficiency_or_zero(const Conformation& conf, double window, const GridConfig& grid) {
  if (min_pair_distance(conf) <= kMinSeparation) return 0.0;
  const Hamiltonian h = coupling_matrix(conf);
  return transfer_efficiency_closed(h, window, grid).p_out;
}

struct RestartOutcome {
  std::vector<double> x;
  double p_out = 0.0;
  RestartSummary summary;
};

template <class Outcome>
std::size_t best_index(const std::vector<Outcome>& outcomes) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    if (outcomes[i].p_out > outcomes[best].p_out) best = i;
  }
  return best;
}

}  // namespace

ConformationOptResult optimize_conformation(const ConformationOptConfig& cfg) {
  if (cfg.n_sites < 2) throw InvalidArgument("n_sites must be >= 2");
  if (cfg.n_restarts < 1 || cfg.max_evals < 1) {
    throw InvalidArgument("restart and evaluation counts must be positive");
  }
  const Conformation poles = [&] {
    SampleStream unused(cfg.seed, 0, StreamPurpose::kRestart);
    Conformation c = sample_conformation(2, unused);
    c.alpha = cfg.alpha;
    return c;
  }();
  // The pole coupling alpha/d^3 fixes the window for every trial point.
  const double window = default_time_window(coupling_matrix(poles), cfg.window_factor);

  std::vector<RestartOutcome> outcomes(cfg.n_restarts);
  parallel_for(cfg.n_restarts, cfg.threads, [&](std::size_t r) {
    SampleStream stream(cfg.seed, r, StreamPurpose::kRestart);
    Conformation frame = sample_conformation(cfg.n_sites, stream);
    frame.alpha = cfg.alpha;
    const std::vector<double> x0 = encode(frame);

    const bool penalty = cfg.constraint == BallConstraint::kPenalty;
    const Objective objective = [&](std::span<const double> x) {
      if (!penalty) return -efficiency_or_zero(decode(frame, x), window, cfg.grid);
      double excess = 0.0;
      std::vector<double> projected(x.begin(), x.end());
      for (std::size_t s = 0; 3 * s < x.size(); ++s) {
        const double d = (Vec3(x[3 * s], x[3 * s + 1], x[3 * s + 2]) - kBallCenter).norm();
        if (d > kBallRadius) excess += (d - kBallRadius) * (d - kBallRadius);
      }
      project_coordinates(projected);
      return -efficiency_or_zero(decode(frame, projected), window, cfg.grid) +
             cfg.penalty_weight * excess;
    };
    NelderMeadOptions options;
    options.max_evals = cfg.max_evals;
    options.f_tol = cfg.f_tol;
    options.x_tol = cfg.x_tol;
    const std::vector<double> steps(x0.size(), cfg.initial_step);
    const NelderMeadResult nm = nelder_mead_minimize(
        objective, x0, steps, options,
        penalty ? Projection{} : Projection{project_coordinates});

    RestartOutcome& out = outcomes[r];
    out.x = nm.x;
    project_coordinates(out.x);
    out.p_out = efficiency_or_zero(decode(frame, out.x), window, cfg.grid);
    out.summary.initial_p_out = efficiency_or_zero(frame, window, cfg.grid);
    out.summary.final_p_out = out.p_out;
    out.summary.evaluations = nm.evaluations;
    out.summary.converged = nm.converged;
  });

  ConformationOptResult result;
  result.best_restart = best_index(outcomes);
  {
    SampleStream stream(cfg.seed, result.best_restart, StreamPurpose::kRestart);
    Conformation frame = sample_conformation(cfg.n_sites, stream);
    frame.alpha = cfg.alpha;
    result.conformation = decode(frame, outcomes[result.best_restart].x);
  }
  validate(result.conformation);
  const Hamiltonian h = coupling_matrix(result.conformation);
  result.transfer = transfer_efficiency_closed(h, window, cfg.grid);
  for (const auto& o : outcomes) {
    result.restarts.push_back(o.summary);
    result.total_evaluations += o.summary.evaluations;
  }
  return result;
}

namespace {

struct BoxEntry {
  Eigen::Index row;
  Eigen::Index col;
  double margin;
};

std::vector<BoxEntry> free_entries(const HamiltonianBoxConfig& cfg) {
  std::vector<BoxEntry> entries;
  const Eigen::Index n = cfg.base.matrix.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double margin = i == j ? cfg.diag_margin : cfg.off_diag_margin;
      if (margin > 0.0) entries.push_back({i, j, margin});
    }
  }
  return entries;
}

Hamiltonian apply_box(const Hamiltonian& base, const std::vector<BoxEntry>& entries,
                      std::span<const double> u) {
  Hamiltonian h = base;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    const double value = base.matrix(e.row, e.col) + e.margin * std::clamp(u[k], -1.0, 1.0);
    h.matrix(e.row, e.col) = value;
    h.matrix(e.col, e.row) = value;
  }
  return h;
}

void clamp_unit_box(std::span<double> u) {
  for (auto& v : u) v = std::clamp(v, -1.0, 1.0);
}

}  // namespace

bool within_box(const Hamiltonian& h, const Hamiltonian& base, double off_diag_margin,
                double diag_margin) {
  if (h.matrix.rows() != base.matrix.rows()) return false;
  for (Eigen::Index i = 0; i < h.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.matrix.cols(); ++j) {
      const double margin = i == j ? diag_margin : off_diag_margin;
      // One ulp of slack for base + margin * 1.0 rounding.
      const double slack = 4.0 * std::numeric_limits<double>::epsilon() *
                           (std::abs(base.matrix(i, j)) + margin);
      if (std::abs(h.matrix(i, j) - base.matrix(i, j)) > margin + slack) return false;
    }
  }
  return true;
}

HamiltonianOptResult optimize_hamiltonian_box(const HamiltonianBoxConfig& cfg, double window) {
  if (!(cfg.off_diag_margin >= 0.0) || !(cfg.diag_margin >= 0.0)) {
    throw InvalidArgument("margins must be >= 0");
  }
  if (cfg.n_restarts < 1 || cfg.max_evals < 1) {
    throw InvalidArgument("restart and evaluation counts must be positive");
  }
  if (!(window > 0.0)) throw InvalidArgument("time window must be positive");
  const Hamiltonian& base = cfg.base;
  const auto entries = free_entries(cfg);
  const std::size_t dim = entries.size();

  HamiltonianOptResult result;
  result.base_transfer = transfer_efficiency_closed(base, window, cfg.grid);
  if (dim == 0) {
    result.optimized = base;
    result.transfer = result.base_transfer;
    result.total_evaluations = 1;
    result.restarts.push_back({result.transfer.p_out, result.transfer.p_out, 1, true});
    return result;
  }

  std::vector<RestartOutcome> outcomes(cfg.n_restarts);
  parallel_for(cfg.n_restarts, cfg.threads, [&](std::size_t r) {
    std::vector<double> u0(dim, 0.0);
    if (r > 0) {
      SampleStream stream(cfg.seed, r, StreamPurpose::kRestart);
      for (auto& v : u0) v = stream.uniform(-1.0, 1.0);
    }
    const Objective objective = [&](std::span<const double> u) {
      return -transfer_efficiency_closed(apply_box(base, entries, u), window, cfg.grid).p_out;
    };
    NelderMeadOptions options;
    options.max_evals = cfg.max_evals;
    options.f_tol = cfg.f_tol;
    options.x_tol = cfg.x_tol;
    std::vector<double> steps(dim);
    for (std::size_t k = 0; k < dim; ++k) steps[k] = u0[k] > 0.0 ? -0.5 : 0.5;
    const NelderMeadResult nm =
        nelder_mead_minimize(objective, u0, steps, options, clamp_unit_box);
    RestartOutcome& out = outcomes[r];
    out.x = nm.x;
    out.p_out = -nm.value;
    out.summary.initial_p_out =
        transfer_efficiency_closed(apply_box(base, entries, u0), window, cfg.grid).p_out;
    out.summary.final_p_out = out.p_out;
    out.summary.evaluations = nm.evaluations;
    out.summary.converged = nm.converged;
  });

  result.best_restart = best_index(outcomes);
  result.optimized = apply_box(base, entries, outcomes[result.best_restart].x);
  result.transfer = transfer_efficiency_closed(result.optimized, window, cfg.grid);
  for (const auto& o : outcomes) {
    result.restarts.push_back(o.summary);
    result.total_evaluations += o.summary.evaluations;
  }
  return result;
}

RobustnessResult robustness_scan(const Hamiltonian& h_star, const RobustnessConfig& cfg,
                                 double window) {
  if (!(cfg.sigma_off >= 0.0) || !(cfg.sigma_diag >= 0.0)) {
    throw InvalidArgument("spreads must be >= 0");
  }
  if (cfg.n_samples < 1) throw InvalidArgument("n_samples must be >= 1");
  std::vector<double> p(cfg.n_samples);
  const Eigen::Index n = h_star.matrix.rows();
  parallel_for(cfg.n_samples, cfg.threads, [&](std::size_t s) {
    SampleStream stream(cfg.seed, s, StreamPurpose::kPerturbation);
    Hamiltonian h = h_star;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        const double sigma = i == j ? cfg.sigma_diag : cfg.sigma_off;
        const double shift = sigma * stream.normal();
        h.matrix(i, j) += shift;
        if (i != j) h.matrix(j, i) += shift;
      }
    }
    p[s] = transfer_efficiency_closed(h, window, cfg.grid).p_out;
  });
  RunningStats stats;
  RobustnessResult result{0.0, 0.0, Histogram1D({cfg.bins, 0.0, 1.0})};
  for (const double v : p) {
    stats.add(v);
    result.histogram.add(v);
  }
  result.mean = stats.mean();
  result.stddev = stats.stddev();
  return result;
}

TransferResult dephased_evaluation(const Hamiltonian& h, const DephasingConfig& deph,
                                   double window, const GridConfig& grid) {
  return transfer_efficiency_open(h, deph, window, grid);
}

}  // namespace qtransport
