#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qtransport/dynamics.hpp"
#include "qtransport/histogram.hpp"
#include "qtransport/statistics.hpp"

namespace qtransport {

/// Dephasing rate either absolute or as a multiple of 1/T.
struct DephasingSpec {
  double value = 2.0;
  bool relative_to_window = true;
  DephasingConvention convention = DephasingConvention::kProjector;

  DephasingConfig at_window(double window) const;
};

inline constexpr std::size_t kDefaultRecordCap = 1'000'000;
inline constexpr std::size_t kMaxRecordCap = 20'000'000;
/// Samples per accumulation block. Floating-point summaries are formed per
/// block and merged in block order, so results do not depend on threads.
inline constexpr std::uint64_t kCampaignBlock = 1024;

struct CampaignConfig {
  std::size_t n_sites = 7;
  std::uint64_t n_samples = 1000;
  std::uint64_t seed = 0;
  double window_factor = 0.1;
  double alpha = 1.0;
  std::optional<DephasingSpec> dephasing;
  GridConfig grid;
  bool record_entanglement = false;
  std::size_t bins = 200;
  std::size_t conditional_bins = 100;
  std::vector<double> tail_thresholds{0.5, 0.76, 0.9};
  /// Coherent efficiency above which the dephasing dichotomy is tallied.
  double dichotomy_threshold = 0.3;
  std::size_t record_cap = kDefaultRecordCap;
  /// 0 selects std::thread::hardware_concurrency().
  std::size_t threads = 1;
};

/// Throws ConfigError on any invalid field.
void validate(const CampaignConfig& cfg);

struct SampleRecord {
  std::uint64_t index = 0;
  double p_out_coherent = 0.0;
  double t_star = 0.0;
  double window = 0.0;
  std::optional<double> p_out_dephased;
  std::optional<double> t_star_dephased;
  std::optional<double> c2_max;
  std::optional<double> c4_max;
  /// Mixed-state estimate over the dephased trajectory.
  std::optional<double> c2_max_dephased;

  bool operator==(const SampleRecord&) const = default;
};

/// One Monte Carlo sample; depends only on (cfg, index).
SampleRecord evaluate_sample(const CampaignConfig& cfg, std::uint64_t index);

struct TailCounter {
  double threshold = 0.0;
  std::uint64_t count = 0;  // samples with p_out >= threshold
};

struct GainLossCounters {
  std::uint64_t enhanced = 0;
  std::uint64_t suppressed = 0;
  std::uint64_t unchanged = 0;
  std::uint64_t high = 0;             // coherent p_out > dichotomy threshold
  std::uint64_t high_suppressed = 0;  // ... and reduced by dephasing
  RunningStats gain_delta;
  RunningStats loss_delta;
};

struct CampaignResult {
  CampaignConfig config;
  RunningStats p_coherent;
  RunningStats p_dephased;
  Histogram1D hist_coherent;
  Histogram1D hist_dephased;
  Histogram1D hist_c2_max;
  Histogram1D hist_c4_max;
  Histogram2D cond_c2;
  Histogram2D cond_c4;
  Histogram2D cond_c2_dephased;
  std::vector<TailCounter> tails_coherent;
  std::vector<TailCounter> tails_dephased;
  GainLossCounters gain_loss;
  /// Retained raw records sorted by index; all of them when
  /// n_samples <= record_cap, otherwise a deterministic uniform subset.
  std::vector<SampleRecord> records;

  std::uint64_t n_samples() const noexcept { return p_coherent.count(); }
  bool records_complete() const noexcept { return records.size() == n_samples(); }
};

/// Called after each finished block with (samples done, total).
using ProgressCallback = std::function<void(std::uint64_t, std::uint64_t)>;

CampaignResult run_campaign(const CampaignConfig& cfg,
                            const ProgressCallback& progress = {});

struct TailEstimate {
  double threshold = 0.0;
  std::uint64_t count = 0;
  std::uint64_t n = 0;
  double fraction = 0.0;
  ProportionInterval wilson95;
};

/// Exact fraction of samples with p_out >= threshold. Thresholds outside
/// (0, 1] are answered directly; others must be a tracked counter or the
/// campaign must have retained every record.
TailEstimate tail_fraction(const CampaignResult& result, double threshold,
                           bool dephased = false);

enum class EntanglementField { kC2Max, kC4Max, kC2MaxDephased };

/// 2D sketch of (entanglement field, p_out) from records. The dephased
/// field pairs with p_out_dephased; the others with p_out_coherent.
Histogram2D conditional_density(std::span<const SampleRecord> records,
                                EntanglementField x_field, std::size_t bins = 100);

struct GainLossSummary {
  std::vector<double> deltas;  // dephased - coherent, per record
  std::uint64_t enhanced = 0;
  std::uint64_t suppressed = 0;
  std::uint64_t unchanged = 0;
  double fraction_enhanced = 0.0;
  double fraction_suppressed = 0.0;
  double mean_gain = 0.0;  // over enhanced records, 0 if none
  double mean_loss = 0.0;  // over suppressed records (negative), 0 if none
};

GainLossSummary dephasing_gain_loss(std::span<const SampleRecord> records);

struct CrossingResult {
  bool found = false;
  double abscissa = 0.0;
};

/// Where the coherent density rises above the dephased one: the first bin
/// whose density difference turns positive after being negative and stays
/// positive for at least three bins, located by linear interpolation
/// between the bin centers.
CrossingResult density_crossing(const Histogram1D& coherent, const Histogram1D& dephased);

}  // namespace qtransport
