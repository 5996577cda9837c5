#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "json_config.hpp"
#include "qtransport/conformation.hpp"
#include "qtransport/dynamics.hpp"
#include "qtransport/ensemble.hpp"
#include "qtransport/entanglement.hpp"
#include "qtransport/errors.hpp"
#include "qtransport/hamiltonian.hpp"
#include "qtransport/optimize.hpp"
#include "qtransport/report.hpp"

namespace qtransport::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Flags that never enter a manifest: they steer where output goes or how
// chatty the run is, not what is computed.
const std::vector<std::string> kUnrecorded = {"help", "config", "out", "progress"};

struct WindowOptions {
  double factor = 0.1;
  double absolute = 0.0;
  CLI::Option* absolute_opt = nullptr;

  void add(CLI::App* app) {
    auto* f = app->add_option("--window-factor", factor,
                              "Window T as a fraction of pi / (2 |H_in,out|)")
                  ->check(CLI::PositiveNumber);
    absolute_opt = app->add_option("--window", absolute, "Absolute window T (internal time units)")
                       ->check(CLI::PositiveNumber)
                       ->default_str("");
    absolute_opt->excludes(f);
  }
  double resolve(const Hamiltonian& h) const {
    return absolute_opt->count() > 0 ? absolute : default_time_window(h, factor);
  }
};

struct DephasingOptions {
  bool enabled = false;
  double gamma = 0.0;
  double gamma_over_t = 2.0;
  std::string convention = "projector";
  CLI::Option* gamma_opt = nullptr;

  void add(CLI::App* app) {
    app->add_flag("--dephased", enabled, "Also evaluate under local dephasing");
    gamma_opt = app->add_option("--gamma", gamma, "Absolute dephasing rate")
                    ->check(CLI::NonNegativeNumber)
                    ->default_str("");
    auto* rel = app->add_option("--gamma-over-T", gamma_over_t,
                                "Dephasing rate in units of 1/T (default mode)")
                    ->check(CLI::NonNegativeNumber);
    gamma_opt->excludes(rel);
    app->add_option("--dephasing-convention", convention,
                    "Coherence decay at gamma (projector) or 2 gamma (double)")
        ->check(CLI::IsMember({"projector", "double"}));
  }
  DephasingSpec spec() const {
    DephasingSpec s;
    s.relative_to_window = gamma_opt->count() == 0;
    s.value = s.relative_to_window ? gamma_over_t : gamma;
    s.convention = parse_dephasing_convention(convention);
    return s;
  }
};

struct GridOptions {
  GridConfig grid;
  void add(CLI::App* app) {
    app->add_option("--grid-points", grid.grid_points, "Uniform time-grid points over [0, T]");
    app->add_option("--refine-tol", grid.refine_tol, "Golden-section tolerance relative to T");
  }
};

void add_threads(CLI::App* app, std::size_t& threads) {
  app->add_option("--threads", threads, "Worker threads (0: all hardware threads)")
      ->envname(kThreadsEnv);
}

json transfer_json(const TransferResult& r) {
  return {{"p_out", r.p_out}, {"T", r.window}, {"t_star", r.t_star}};
}

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

void finish_manifest(RunManifest& m, const CLI::App& sub, std::uint64_t seed,
                     const fs::path& dir) {
  m.subcommand = sub.get_name();
  m.config_json = resolved_options_json(sub, kUnrecorded);
  m.seed = seed;
  m.estimator = std::string(kMixedEstimatorName);
  m.finished_utc = utc_timestamp();
  write_manifest(m, dir);
}

fs::path output_dir(const std::string& out) {
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

Hamiltonian load_model(const std::string& hamiltonian_path, const std::string& conformation_path) {
  if (!hamiltonian_path.empty()) return load_hamiltonian(hamiltonian_path);
  return coupling_matrix(load_conformation(conformation_path));
}

// ---------------------------------------------------------------------------

struct SampleCommand {
  CampaignConfig cfg;
  DephasingOptions deph;
  GridOptions grid;
  std::string out;
  bool progress = false;

  void add(CLI::App* app) {
    app->add_option("--sites", cfg.n_sites, "Number of sites N");
    app->add_option("--samples", cfg.n_samples, "Number of random conformations");
    app->add_option("--seed", cfg.seed, "Master seed");
    app->add_option("--window-factor", cfg.window_factor, "Window T as a fraction of pi / (2 |H_in,out|)");
    app->add_option("--alpha", cfg.alpha, "Coupling prefactor in alpha / r^3");
    deph.add(app);
    app->add_option("--bins", cfg.bins, "Bins of the efficiency histograms");
    app->add_option("--conditional-bins", cfg.conditional_bins, "Bins per axis of conditional sketches");
    app->add_option("--tail", cfg.tail_thresholds, "Tail thresholds counted exactly");
    app->add_option("--dichotomy-threshold", cfg.dichotomy_threshold,
                    "Coherent efficiency above which suppression is tallied");
    app->add_option("--record-cap", cfg.record_cap, "Maximum raw records kept");
    app->add_flag("--record-entanglement", cfg.record_entanglement,
                  "Track maximal c2 and c4 up to the arrival time");
    grid.add(app);
    add_threads(app, cfg.threads);
    app->add_option("--out", out, "Output directory")->required();
    app->add_flag("--progress", progress, "Report progress on standard error");
  }

  int run(const CLI::App& sub, std::ostream& out_stream, std::ostream& err) {
    RunManifest manifest;
    manifest.started_utc = utc_timestamp();
    if (deph.enabled) cfg.dephasing = deph.spec();
    cfg.grid = grid.grid;
    validate(cfg);
    ProgressCallback cb;
    if (progress) {
      cb = [&err](std::uint64_t done, std::uint64_t total) {
        err << "\r" << done << "/" << total << std::flush;
        if (done == total) err << "\n";
      };
    }
    const CampaignResult result = run_campaign(cfg, cb);
    const fs::path dir = output_dir(out);
    write_report(result, dir);
    manifest.dephasing_convention = deph.convention;
    finish_manifest(manifest, sub, cfg.seed, dir);
    json brief = {{"samples", result.n_samples()}, {"mean_coherent", result.p_coherent.mean()}};
    if (cfg.dephasing) brief["mean_dephased"] = result.p_dephased.mean();
    out_stream << brief.dump() << "\n";
    return kExitOk;
  }
};

struct EvaluateCommand {
  std::string hamiltonian;
  std::string conformation;
  WindowOptions window;
  DephasingOptions deph;
  GridOptions grid;
  std::string trajectory;
  std::string trajectory_dephased;
  std::size_t trajectory_points = 201;
  std::string out;

  void add(CLI::App* app) {
    auto* h = app->add_option("--hamiltonian", hamiltonian, "Hamiltonian JSON file")
                  ->check(CLI::ExistingFile);
    auto* c = app->add_option("--conformation", conformation, "Conformation JSON file")
                  ->check(CLI::ExistingFile);
    h->excludes(c);
    window.add(app);
    deph.add(app);
    grid.add(app);
    app->add_option("--trajectory", trajectory, "Write coherent site populations to this CSV");
    app->add_option("--trajectory-dephased", trajectory_dephased,
                    "Write dephased site populations to this CSV");
    app->add_option("--trajectory-points", trajectory_points, "Time points per trajectory")
        ->check(CLI::Range(std::size_t{2}, std::size_t{10'000'000}));
    app->add_option("--out", out, "Also write evaluate.json and a manifest here");
  }

  int run(const CLI::App& sub, std::ostream& out_stream, std::ostream&) {
    RunManifest manifest;
    manifest.started_utc = utc_timestamp();
    if (hamiltonian.empty() && conformation.empty()) {
      throw ConfigError("evaluate needs --hamiltonian or --conformation");
    }
    if (!trajectory_dephased.empty() && !deph.enabled) {
      throw ConfigError("--trajectory-dephased requires --dephased");
    }
    validate(grid.grid);
    const Hamiltonian h = load_model(hamiltonian, conformation);
    const double t = window.resolve(h);
    const ClosedEvolution closed(h);
    const TransferResult coherent =
        transfer_efficiency_closed(closed, h.input_index, h.output_index, t, grid.grid);

    json j = transfer_json(coherent);
    j["n_sites"] = h.dim();
    j["input"] = h.input_index;
    j["output"] = h.output_index;
    std::optional<DephasingConfig> dc;
    if (deph.enabled) {
      dc = deph.spec().at_window(t);
      const TransferResult d = transfer_efficiency_open(h, *dc, t, grid.grid);
      j["dephased"] = {{"p_out", d.p_out},
                       {"t_star", d.t_star},
                       {"gamma", dc->gamma},
                       {"convention", deph.convention}};
    }

    const std::size_t n = trajectory_points;
    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) {
      times[i] = i + 1 == n ? t : t * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    if (!trajectory.empty()) {
      Eigen::MatrixXd pops;
      closed.population_grid(h.input_index, t / static_cast<double>(n - 1), n, pops);
      pops.row(static_cast<Eigen::Index>(n - 1)) =
          populations(closed.evolve_from_site(h.input_index, t)).transpose();
      write_trajectory_csv(times, pops, trajectory);
    }
    if (!trajectory_dephased.empty()) {
      const auto traj =
          state_trajectory(h, pure_density(site_state(h.dim(), h.input_index)), *dc, t, n);
      Eigen::MatrixXd pops(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(h.dim()));
      for (std::size_t i = 0; i < n; ++i) {
        pops.row(static_cast<Eigen::Index>(i)) = populations(traj[i].state).transpose();
      }
      write_trajectory_csv(times, pops, trajectory_dephased);
    }

    if (!out.empty()) {
      const fs::path dir = output_dir(out);
      write_json(dir / "evaluate.json", j);
      manifest.dephasing_convention = deph.convention;
      finish_manifest(manifest, sub, 0, dir);
    }
    out_stream << j.dump() << "\n";
    return kExitOk;
  }
};

struct OptimizeConformationCommand {
  ConformationOptConfig cfg;
  std::string constraint = "project";
  GridOptions grid;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--sites", cfg.n_sites, "Number of sites N");
    app->add_option("--restarts", cfg.n_restarts, "Independent random restarts");
    app->add_option("--max-evals", cfg.max_evals, "Objective evaluations per restart");
    app->add_option("--f-tol", cfg.f_tol, "Simplex value spread for convergence");
    app->add_option("--x-tol", cfg.x_tol, "Simplex size for convergence");
    app->add_option("--step", cfg.initial_step, "Initial simplex edge");
    app->add_option("--constraint", constraint, "Ball handling: project or penalty")
        ->check(CLI::IsMember({"project", "penalty"}));
    app->add_option("--penalty-weight", cfg.penalty_weight, "Weight of the penalty term");
    app->add_option("--seed", cfg.seed, "Master seed");
    app->add_option("--window-factor", cfg.window_factor, "Window T as a fraction of pi / (2 |H_in,out|)");
    app->add_option("--alpha", cfg.alpha, "Coupling prefactor in alpha / r^3");
    grid.add(app);
    add_threads(app, cfg.threads);
    app->add_option("--out", out, "Write conformation, Hamiltonian and opt_report.json here");
  }

  int run(const CLI::App& sub, std::ostream& out_stream, std::ostream&) {
    RunManifest manifest;
    manifest.started_utc = utc_timestamp();
    cfg.constraint = parse_ball_constraint(constraint);
    cfg.grid = grid.grid;
    const ConformationOptResult r = optimize_conformation(cfg);
    json j = transfer_json(r.transfer);
    j["best_restart"] = r.best_restart;
    j["total_evaluations"] = r.total_evaluations;
    json restarts = json::array();
    for (const auto& s : r.restarts) {
      restarts.push_back({{"initial_p_out", s.initial_p_out},
                          {"final_p_out", s.final_p_out},
                          {"evaluations", s.evaluations},
                          {"converged", s.converged}});
    }
    if (!out.empty()) {
      const fs::path dir = output_dir(out);
      save_conformation(r.conformation, (dir / "conformation.json").string());
      save_hamiltonian(coupling_matrix(r.conformation), (dir / "hamiltonian.json").string());
      json report = j;
      report["seed"] = cfg.seed;
      report["budget"] = {{"restarts", cfg.n_restarts}, {"max_evals_per_restart", cfg.max_evals}};
      report["restarts"] = restarts;
      write_json(dir / "opt_report.json", report);
      finish_manifest(manifest, sub, cfg.seed, dir);
    }
    out_stream << j.dump() << "\n";
    return kExitOk;
  }
};

struct OptimizeHamiltonianCommand {
  HamiltonianBoxConfig cfg;
  std::string hamiltonian;
  double off_margin = kFmoOffDiagonalMarginHz;
  double diag_margin = kFmoDiagonalMarginHz;
  std::string margin_unit = "h_hz";
  WindowOptions window;
  GridOptions grid;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--hamiltonian", hamiltonian, "Base Hamiltonian JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--off-diag-margin", off_margin, "Per-entry margin on couplings");
    app->add_option("--diag-margin", diag_margin, "Per-entry margin on site energies");
    app->add_option("--margin-unit", margin_unit, "Unit of the margins: rad_per_s, h_hz, per_cm")
        ->check(CLI::IsMember({"rad_per_s", "h_hz", "per_cm"}));
    app->add_option("--restarts", cfg.n_restarts, "Restarts (restart 0 starts at the base)");
    app->add_option("--max-evals", cfg.max_evals, "Objective evaluations per restart");
    app->add_option("--f-tol", cfg.f_tol, "Simplex value spread for convergence");
    app->add_option("--x-tol", cfg.x_tol, "Simplex size for convergence");
    app->add_option("--seed", cfg.seed, "Master seed");
    window.add(app);
    grid.add(app);
    add_threads(app, cfg.threads);
    app->add_option("--out", out, "Write the optimized Hamiltonian and opt_report.json here");
  }

  int run(const CLI::App& sub, std::ostream& out_stream, std::ostream&) {
    RunManifest manifest;
    manifest.started_utc = utc_timestamp();
    if (off_margin < 0.0 || diag_margin < 0.0) throw ConfigError("margins must be >= 0");
    cfg.base = load_hamiltonian(hamiltonian);
    const double unit = to_internal_factor(parse_energy_unit(margin_unit));
    cfg.off_diag_margin = off_margin * unit;
    cfg.diag_margin = diag_margin * unit;
    cfg.grid = grid.grid;
    const double t = window.resolve(cfg.base);
    const HamiltonianOptResult r = optimize_hamiltonian_box(cfg, t);
    json j = {{"T", t},
              {"base", transfer_json(r.base_transfer)},
              {"optimized", transfer_json(r.transfer)},
              {"within_box", within_box(r.optimized, cfg.base, cfg.off_diag_margin,
                                        cfg.diag_margin)},
              {"best_restart", r.best_restart},
              {"total_evaluations", r.total_evaluations}};
    if (!out.empty()) {
      const fs::path dir = output_dir(out);
      save_hamiltonian(r.optimized, (dir / "hamiltonian_star.json").string());
      json report = j;
      report["seed"] = cfg.seed;
      report["budget"] = {{"restarts", cfg.n_restarts}, {"max_evals_per_restart", cfg.max_evals}};
      write_json(dir / "opt_report.json", report);
      finish_manifest(manifest, sub, cfg.seed, dir);
    }
    out_stream << j.dump() << "\n";
    return kExitOk;
  }
};

struct RobustnessCommand {
  RobustnessConfig cfg;
  std::string hamiltonian;
  std::string window_from;
  double sigma_off = kFmoOffDiagonalSigmaHz;
  double sigma_diag = kFmoDiagonalSigmaHz;
  std::string sigma_unit = "h_hz";
  WindowOptions window;
  GridOptions grid;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--hamiltonian", hamiltonian, "Hamiltonian to perturb")
        ->required()
        ->check(CLI::ExistingFile);
    auto* from = app->add_option("--window-from", window_from,
                                 "Take the default window of this Hamiltonian instead")
                     ->check(CLI::ExistingFile);
    app->add_option("--sigma-off", sigma_off, "Gaussian spread of couplings");
    app->add_option("--sigma-diag", sigma_diag, "Gaussian spread of site energies");
    app->add_option("--sigma-unit", sigma_unit, "Unit of the spreads: rad_per_s, h_hz, per_cm")
        ->check(CLI::IsMember({"rad_per_s", "h_hz", "per_cm"}));
    app->add_option("--samples", cfg.n_samples, "Perturbed copies");
    app->add_option("--seed", cfg.seed, "Master seed");
    app->add_option("--bins", cfg.bins, "Histogram bins");
    window.add(app);
    from->excludes(window.absolute_opt);
    grid.add(app);
    add_threads(app, cfg.threads);
    app->add_option("--out", out, "Write summary and histogram here");
  }

  int run(const CLI::App& sub, std::ostream& out_stream, std::ostream&) {
    RunManifest manifest;
    manifest.started_utc = utc_timestamp();
    if (sigma_off < 0.0 || sigma_diag < 0.0) throw ConfigError("spreads must be >= 0");
    const Hamiltonian h = load_hamiltonian(hamiltonian);
    const double unit = to_internal_factor(parse_energy_unit(sigma_unit));
    cfg.sigma_off = sigma_off * unit;
    cfg.sigma_diag = sigma_diag * unit;
    cfg.grid = grid.grid;
    const double t = window_from.empty()
                         ? window.resolve(h)
                         : default_time_window(load_hamiltonian(window_from), window.factor);
    const RobustnessResult r = robustness_scan(h, cfg, t);
    json j = {{"T", t},
              {"nominal", transfer_json(transfer_efficiency_closed(h, t, cfg.grid))},
              {"samples", cfg.n_samples},
              {"mean", r.mean},
              {"std", r.stddev},
              {"relative_std", r.mean > 0.0 ? json(r.stddev / r.mean) : json(nullptr)}};
    if (!out.empty()) {
      const fs::path dir = output_dir(out);
      write_json(dir / "robustness.json", j);
      write_histogram_csv(r.histogram, dir / "histogram.csv");
      finish_manifest(manifest, sub, cfg.seed, dir);
    }
    out_stream << j.dump() << "\n";
    return kExitOk;
  }
};

struct CrossingCommand {
  std::string coherent;
  std::string dephased;

  void add(CLI::App* app) {
    app->add_option("--coherent", coherent, "Coherent histogram CSV")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--dephased", dephased, "Dephased histogram CSV")
        ->required()
        ->check(CLI::ExistingFile);
  }

  int run(const CLI::App&, std::ostream& out_stream, std::ostream&) {
    const CrossingResult c =
        density_crossing(read_histogram_csv(coherent), read_histogram_csv(dephased));
    json j = {{"found", c.found}, {"crossing", c.found ? json(c.abscissa) : json(nullptr)}};
    out_stream << j.dump() << "\n";
    return kExitOk;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coherent transport on disordered molecular networks", "qtransport"};
  app.set_version_flag("--version", code_version());
  app.option_defaults()->always_capture_default();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON config file or manifest.json of an earlier run");

  SampleCommand sample;
  EvaluateCommand evaluate;
  OptimizeConformationCommand opt_conf;
  OptimizeHamiltonianCommand opt_ham;
  RobustnessCommand robustness;
  CrossingCommand crossing;

  auto* s_sample = app.add_subcommand("sample", "Random-conformation ensemble campaign");
  sample.add(s_sample);
  auto* s_eval = app.add_subcommand("evaluate", "Transfer efficiency of one Hamiltonian");
  evaluate.add(s_eval);
  auto* s_conf = app.add_subcommand("optimize-conformation", "Search site positions for efficiency");
  opt_conf.add(s_conf);
  auto* s_ham = app.add_subcommand("optimize-hamiltonian", "Box-constrained Hamiltonian search");
  opt_ham.add(s_ham);
  auto* s_rob = app.add_subcommand("robustness", "Efficiency under Gaussian entry noise");
  robustness.add(s_rob);
  auto* s_cross = app.add_subcommand("crossing", "Crossing of two efficiency densities");
  crossing.add(s_cross);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (s_sample->parsed()) return sample.run(*s_sample, out, err);
    if (s_eval->parsed()) return evaluate.run(*s_eval, out, err);
    if (s_conf->parsed()) return opt_conf.run(*s_conf, out, err);
    if (s_ham->parsed()) return opt_ham.run(*s_ham, out, err);
    if (s_rob->parsed()) return robustness.run(*s_rob, out, err);
    if (s_cross->parsed()) return crossing.run(*s_cross, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace qtransport::cli
