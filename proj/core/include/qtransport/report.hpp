#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qtransport/ensemble.hpp"
#include "qtransport/histogram.hpp"

namespace qtransport {

/// Decimal text with 17 significant digits; round-trips every double.
std::string format_double(double x);

/// Absent optional fields in records.csv are written as this value.
inline constexpr double kMissingFieldSentinel = -1.0;

/// Columns: bin_left,bin_right,count,density.
void write_histogram_csv(const Histogram1D& h, const std::filesystem::path& path);
/// Inverse of write_histogram_csv (under/overflow are not stored and read
/// back as zero).
Histogram1D read_histogram_csv(const std::filesystem::path& path);

/// Columns: x_bin,y_bin,density,count. density is column-normalized; cells
/// of empty columns carry kEmptyColumnSentinel.
void write_conditional_csv(const Histogram2D& h, const std::filesystem::path& path);

/// Columns: index,p_out_coherent,t_star,window,p_out_dephased,
/// t_star_dephased,c2_max,c4_max,c2_max_dephased.
void write_records_csv(const std::vector<SampleRecord>& records,
                       const std::filesystem::path& path);

/// Columns: time,p_site_0,...,p_site_{N-1}; row i of `pops` belongs to
/// times[i].
void write_trajectory_csv(const std::vector<double>& times, const Eigen::MatrixXd& pops,
                          const std::filesystem::path& path);

/// Resolved campaign configuration as a JSON object.
std::string campaign_config_json(const CampaignConfig& cfg);

/// Means, tails, crossing, gain/loss tallies, histogram bookkeeping, config
/// echo and estimator/convention metadata.
std::string campaign_summary_json(const CampaignResult& result);

struct RunManifest {
  std::string subcommand;
  /// JSON object of the resolved flag values, usable as --config.
  std::string config_json = "{}";
  std::uint64_t seed = 0;
  std::string dephasing_convention = "projector";
  std::string estimator;
  std::string started_utc;
  std::string finished_utc;
};

std::string code_version();
std::string utc_timestamp();

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

/// Writes summary.json and the CSV set for a campaign into `dir` (created if
/// needed). Returns the files written, manifest excluded.
std::vector<std::filesystem::path> write_report(const CampaignResult& result,
                                                const std::filesystem::path& dir);

/// Writes `text` to `path`, creating parent directories; throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace qtransport
