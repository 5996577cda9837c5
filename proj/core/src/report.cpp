#include "qtransport/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qtransport/entanglement.hpp"
#include "qtransport/errors.hpp"

#ifndef QTRANSPORT_VERSION
#define QTRANSPORT_VERSION "unknown"
#endif

namespace qtransport {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("refusing to serialize a non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

std::string optional_cell(const std::optional<double>& v) {
  return format_double(v ? *v : kMissingFieldSentinel);
}

json tails_json(const CampaignResult& r, bool dephased) {
  json arr = json::array();
  const auto& counters = dephased ? r.tails_dephased : r.tails_coherent;
  for (const auto& c : counters) {
    const TailEstimate est = tail_fraction(r, c.threshold, dephased);
    arr.push_back({{"threshold", c.threshold},
                   {"count", est.count},
                   {"fraction", est.fraction},
                   {"wilson95_low", est.wilson95.lower},
                   {"wilson95_high", est.wilson95.upper}});
  }
  return arr;
}

json histogram_meta(const Histogram1D& h) {
  return {{"bins", h.binning().bins},
          {"lo", h.binning().lo},
          {"hi", h.binning().hi},
          {"underflow", h.underflow()},
          {"overflow", h.overflow()},
          {"total", h.total()}};
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  finish(out, path);
}

void write_histogram_csv(const Histogram1D& h, const fs::path& path) {
  auto out = open_output(path);
  out << "bin_left,bin_right,count,density\n";
  const auto density = h.density();
  for (std::size_t b = 0; b < h.binning().bins; ++b) {
    out << format_double(h.binning().left(b)) << ',' << format_double(h.binning().right(b))
        << ',' << h.counts()[b] << ',' << format_double(density[b]) << '\n';
  }
  finish(out, path);
}

Histogram1D read_histogram_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open histogram file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "bin_left,bin_right,count,density") {
    throw ConfigError(path.string() + ": unexpected histogram header");
  }
  std::vector<double> lefts, rights;
  std::vector<std::uint64_t> counts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 4) throw ConfigError(path.string() + ": malformed histogram row");
    try {
      lefts.push_back(std::stod(cells[0]));
      rights.push_back(std::stod(cells[1]));
      counts.push_back(std::stoull(cells[2]));
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ": unparsable histogram row: " + line);
    }
  }
  if (counts.size() < 2) throw ConfigError(path.string() + ": histogram needs >= 2 bins");
  const Binning binning{counts.size(), lefts.front(), rights.back()};
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (std::abs(binning.left(b) - lefts[b]) > 1e-12 * (binning.hi - binning.lo)) {
      throw ConfigError(path.string() + ": bins are not uniform");
    }
  }
  return Histogram1D::from_counts(binning, std::move(counts), 0, 0);
}

void write_conditional_csv(const Histogram2D& h, const fs::path& path) {
  auto out = open_output(path);
  out << "x_bin,y_bin,density,count\n";
  const ConditionalDensity view = column_normalized(h);
  for (std::size_t xb = 0; xb < view.x.bins; ++xb) {
    for (std::size_t yb = 0; yb < view.y.bins; ++yb) {
      const double d = view.column_populated[xb] ? view.at(xb, yb) : kEmptyColumnSentinel;
      out << xb << ',' << yb << ',' << format_double(d) << ',' << h.count(xb, yb) << '\n';
    }
  }
  finish(out, path);
}

void write_records_csv(const std::vector<SampleRecord>& records, const fs::path& path) {
  auto out = open_output(path);
  out << "index,p_out_coherent,t_star,window,p_out_dephased,t_star_dephased,c2_max,c4_max,"
         "c2_max_dephased\n";
  for (const auto& r : records) {
    out << r.index << ',' << format_double(r.p_out_coherent) << ',' << format_double(r.t_star)
        << ',' << format_double(r.window) << ',' << optional_cell(r.p_out_dephased) << ','
        << optional_cell(r.t_star_dephased) << ',' << optional_cell(r.c2_max) << ','
        << optional_cell(r.c4_max) << ',' << optional_cell(r.c2_max_dephased) << '\n';
  }
  finish(out, path);
}

void write_trajectory_csv(const std::vector<double>& times, const Eigen::MatrixXd& pops,
                          const fs::path& path) {
  if (static_cast<Eigen::Index>(times.size()) != pops.rows()) {
    throw InvalidArgument("trajectory times and populations differ in length");
  }
  auto out = open_output(path);
  out << "time";
  for (Eigen::Index j = 0; j < pops.cols(); ++j) out << ",p_site_" << j;
  out << '\n';
  for (Eigen::Index i = 0; i < pops.rows(); ++i) {
    out << format_double(times[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < pops.cols(); ++j) out << ',' << format_double(pops(i, j));
    out << '\n';
  }
  finish(out, path);
}

std::string campaign_config_json(const CampaignConfig& cfg) {
  json j;
  j["sites"] = cfg.n_sites;
  j["samples"] = cfg.n_samples;
  j["seed"] = cfg.seed;
  j["window_factor"] = cfg.window_factor;
  j["alpha"] = cfg.alpha;
  if (cfg.dephasing) {
    j["dephasing"] = {{"value", cfg.dephasing->value},
                      {"mode", cfg.dephasing->relative_to_window ? "gamma_over_T" : "gamma"},
                      {"convention", dephasing_convention_tag(cfg.dephasing->convention)}};
  } else {
    j["dephasing"] = nullptr;
  }
  j["grid"] = {{"grid_points", cfg.grid.grid_points}, {"refine_tol", cfg.grid.refine_tol}};
  j["record_entanglement"] = cfg.record_entanglement;
  j["bins"] = cfg.bins;
  j["conditional_bins"] = cfg.conditional_bins;
  j["tail_thresholds"] = cfg.tail_thresholds;
  j["dichotomy_threshold"] = cfg.dichotomy_threshold;
  j["record_cap"] = cfg.record_cap;
  return j.dump(2);
}

std::string campaign_summary_json(const CampaignResult& r) {
  const auto& cfg = r.config;
  json j;
  j["schema_version"] = 1;
  j["code_version"] = code_version();
  j["config"] = json::parse(campaign_config_json(cfg));
  j["n_samples"] = r.n_samples();
  j["estimator"] = std::string(kMixedEstimatorName);
  j["dephasing_convention"] =
      cfg.dephasing ? json(std::string(dephasing_convention_tag(cfg.dephasing->convention)))
                    : json(nullptr);
  j["coherent"] = {{"mean", r.p_coherent.mean()},
                   {"std", r.p_coherent.stddev()},
                   {"tails", tails_json(r, false)},
                   {"histogram", histogram_meta(r.hist_coherent)}};
  if (cfg.dephasing) {
    j["dephased"] = {{"mean", r.p_dephased.mean()},
                     {"std", r.p_dephased.stddev()},
                     {"tails", tails_json(r, true)},
                     {"histogram", histogram_meta(r.hist_dephased)}};
    const auto& g = r.gain_loss;
    const double n = static_cast<double>(r.n_samples());
    j["gain_loss"] = {
        {"enhanced", g.enhanced},
        {"suppressed", g.suppressed},
        {"unchanged", g.unchanged},
        {"fraction_enhanced", static_cast<double>(g.enhanced) / n},
        {"fraction_suppressed", static_cast<double>(g.suppressed) / n},
        {"mean_gain", g.gain_delta.mean()},
        {"mean_loss", g.loss_delta.mean()},
        {"dichotomy_threshold", cfg.dichotomy_threshold},
        {"high", g.high},
        {"high_suppressed", g.high_suppressed},
        {"high_suppressed_fraction",
         g.high > 0 ? json(static_cast<double>(g.high_suppressed) / static_cast<double>(g.high))
                    : json(nullptr)}};
    const CrossingResult crossing = density_crossing(r.hist_coherent, r.hist_dephased);
    j["crossing"] = {{"found", crossing.found},
                     {"value", crossing.found ? json(crossing.abscissa) : json(nullptr)}};
  } else {
    j["dephased"] = nullptr;
    j["gain_loss"] = nullptr;
    j["crossing"] = nullptr;
  }
  if (cfg.record_entanglement) {
    json e;
    e["p_out_ge_0.5_given_c2_max_lt_0.8"] =
        optional_number(conditional_exceedance(r.cond_c2, 0.8, 0.5));
    e["p_out_ge_0.5_given_c4_max_lt_0.5"] =
        optional_number(conditional_exceedance(r.cond_c4, 0.5, 0.5));
    e["c2_histogram"] = histogram_meta(r.hist_c2_max);
    e["c4_histogram"] = histogram_meta(r.hist_c4_max);
    j["entanglement"] = e;
  } else {
    j["entanglement"] = nullptr;
  }
  j["records"] = {{"retained", r.records.size()}, {"complete", r.records_complete()}};
  return j.dump(2) + "\n";
}

std::string code_version() { return QTRANSPORT_VERSION; }

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const RunManifest& m, const fs::path& dir) {
  json j;
  j["subcommand"] = m.subcommand;
  j["config"] = json::parse(m.config_json);
  j["seed"] = m.seed;
  j["code_version"] = code_version();
  j["dephasing_convention"] = m.dephasing_convention;
  j["estimator"] = m.estimator;
  j["timestamps"] = {{"started", m.started_utc}, {"finished", m.finished_utc}};
  write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

std::vector<fs::path> write_report(const CampaignResult& r, const fs::path& dir) {
  std::vector<fs::path> written;
  auto emit = [&](const fs::path& name) {
    written.push_back(dir / name);
    return dir / name;
  };
  write_text_file(emit("summary.json"), campaign_summary_json(r));
  write_histogram_csv(r.hist_coherent, emit("hist_coherent.csv"));
  if (r.config.dephasing) write_histogram_csv(r.hist_dephased, emit("hist_dephased.csv"));
  if (r.config.record_entanglement) {
    write_histogram_csv(r.hist_c2_max, emit("hist_c2_max.csv"));
    write_histogram_csv(r.hist_c4_max, emit("hist_c4_max.csv"));
    write_conditional_csv(r.cond_c2, emit("cond_c2.csv"));
    write_conditional_csv(r.cond_c4, emit("cond_c4.csv"));
    if (r.config.dephasing) write_conditional_csv(r.cond_c2_dephased, emit("cond_c2_dephased.csv"));
  }
  write_records_csv(r.records, emit("records.csv"));
  return written;
}

}  // namespace qtransport
