#include "qtransport/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <queue>
#include <thread>

#include "qtransport/conformation.hpp"
#include "qtransport/entanglement.hpp"
#include "qtransport/errors.hpp"
#include "qtransport/rng.hpp"

namespace qtransport {

DephasingConfig DephasingSpec::at_window(double window) const {
  DephasingConfig d;
  d.gamma = relative_to_window ? value / window : value;
  d.convention = convention;
  return d;
}

void validate(const CampaignConfig& cfg) {
  if (cfg.n_sites < 2) throw ConfigError("sites must be >= 2 (got " + std::to_string(cfg.n_sites) + ")");
  if (cfg.n_samples < 1) throw ConfigError("samples must be >= 1");
  if (!(cfg.window_factor > 0.0)) throw ConfigError("window factor must be > 0");
  if (!(cfg.alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (cfg.bins < 2 || cfg.conditional_bins < 2) throw ConfigError("bins must be >= 2");
  if (cfg.grid.grid_points < 2) throw ConfigError("grid_points must be >= 2");
  if (!(cfg.grid.refine_tol > 0.0)) throw ConfigError("refine_tol must be > 0");
  if (cfg.dephasing && !(cfg.dephasing->value >= 0.0)) {
    throw ConfigError("dephasing rate must be >= 0");
  }
  if (cfg.record_cap > kMaxRecordCap) {
    throw ConfigError("record cap " + std::to_string(cfg.record_cap) +
                      " exceeds the retention limit " + std::to_string(kMaxRecordCap));
  }
  for (const double t : cfg.tail_thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("tail thresholds must lie in [0, 1]");
  }
}

namespace {


void coherent_entanglement(const ClosedEvolution& evolution, std::size_t input,
                           const TransferResult& result, std::size_t grid_points,
                           SampleRecord& rec) {
  const std::size_t n = evolution.dim();
  const double dt = result.window / static_cast<double>(grid_points - 1);
  auto count = static_cast<std::size_t>(std::floor(result.t_star / dt)) + 1;
  count = std::min(count, grid_points);
  Eigen::MatrixXd pops;
  evolution.population_grid(input, dt, count, pops);
  double c2_max = 0.0;
  double c4_max = 0.0;
  std::vector<double> p(n);
  auto consider = [&](const auto& row) {
    for (std::size_t j = 0; j < n; ++j) p[j] = row(static_cast<Eigen::Index>(j));
    c2_max = std::max(c2_max, c2(p));
    if (n >= 4) c4_max = std::max(c4_max, c4(p));
  };
  for (Eigen::Index i = 0; i < pops.rows(); ++i) consider(pops.row(i));
  consider(populations(evolution.evolve_from_site(input, result.t_star)));
  rec.c2_max = c2_max;
  rec.c4_max = c4_max;
}

void dephased_entanglement(const OpenEvolution& evolution, const DensityMatrix& rho0,
                           const TransferResult& result, std::size_t grid_points,
                           SampleRecord& rec) {
  const double dt = result.window / static_cast<double>(grid_points - 1);
  double best = 0.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double t = static_cast<double>(i) * dt;
    if (t > result.t_star) break;
    best = std::max(best, c_nu_mixed_estimate(evolution.evolve(rho0, t), 2));
  }
  best = std::max(best, c_nu_mixed_estimate(evolution.evolve(rho0, result.t_star), 2));
  rec.c2_max_dephased = best;
}

}  // namespace

SampleRecord evaluate_sample(const CampaignConfig& cfg, std::uint64_t index) {
  SampleStream stream(cfg.seed, index, StreamPurpose::kConformation);
  Conformation conf = sample_conformation(cfg.n_sites, stream);
  conf.alpha = cfg.alpha;
  const Hamiltonian h = coupling_matrix(conf);
  const double window = default_time_window(h, cfg.window_factor);

  SampleRecord rec;
  rec.index = index;
  rec.window = window;
  const ClosedEvolution closed(h);
  const TransferResult coherent =
      transfer_efficiency_closed(closed, h.input_index, h.output_index, window, cfg.grid);
  rec.p_out_coherent = coherent.p_out;
  rec.t_star = coherent.t_star;
  if (cfg.record_entanglement) {
    coherent_entanglement(closed, h.input_index, coherent, cfg.grid.grid_points, rec);
  }

  if (cfg.dephasing) {
    const OpenEvolution open(h, cfg.dephasing->at_window(window));
    const TransferResult dephased =
        transfer_efficiency_open(open, h.input_index, h.output_index, window, cfg.grid);
    rec.p_out_dephased = dephased.p_out;
    rec.t_star_dephased = dephased.t_star;
    if (cfg.record_entanglement) {
      const DensityMatrix rho0 = pure_density(site_state(h.dim(), h.input_index));
      dephased_entanglement(open, rho0, dephased, cfg.grid.grid_points, rec);
    }
  }
  return rec;
}

namespace {

struct BlockStats {
  RunningStats p_coherent;
  RunningStats p_dephased;
  RunningStats gain_delta;
  RunningStats loss_delta;
};

struct KeyedRecord {
  std::uint64_t key;
  SampleRecord record;
  bool operator<(const KeyedRecord& other) const noexcept {
    return key != other.key ? key < other.key : record.index < other.record.index;
  }
};

// Integer-valued accumulators owned by one worker.
struct Shard {
  explicit Shard(const CampaignConfig& cfg)
      : hist_coherent({cfg.bins, 0.0, 1.0}),
        hist_dephased({cfg.bins, 0.0, 1.0}),
        hist_c2_max({cfg.bins, 0.0, 1.0}),
        hist_c4_max({cfg.bins, 0.0, 1.0}),
        cond_c2({cfg.conditional_bins, 0.0, 1.0}, {cfg.conditional_bins, 0.0, 1.0}),
        cond_c4({cfg.conditional_bins, 0.0, 1.0}, {cfg.conditional_bins, 0.0, 1.0}),
        cond_c2_dephased({cfg.conditional_bins, 0.0, 1.0},
                         {cfg.conditional_bins, 0.0, 1.0}),
        tails_coherent(cfg.tail_thresholds.size(), 0),
        tails_dephased(cfg.tail_thresholds.size(), 0) {}

  Histogram1D hist_coherent, hist_dephased, hist_c2_max, hist_c4_max;
  Histogram2D cond_c2, cond_c4, cond_c2_dephased;
  std::vector<std::uint64_t> tails_coherent, tails_dephased;
  std::uint64_t enhanced = 0, suppressed = 0, unchanged = 0, high = 0,
                high_suppressed = 0;
  std::priority_queue<KeyedRecord> reservoir;  // max-heap on key
};

void accumulate(const CampaignConfig& cfg, const SampleRecord& rec, Shard& shard,
                BlockStats& block) {
  block.p_coherent.add(rec.p_out_coherent);
  shard.hist_coherent.add(rec.p_out_coherent);
  for (std::size_t k = 0; k < cfg.tail_thresholds.size(); ++k) {
    if (rec.p_out_coherent >= cfg.tail_thresholds[k]) ++shard.tails_coherent[k];
  }
  if (rec.c2_max) {
    shard.hist_c2_max.add(*rec.c2_max);
    shard.cond_c2.add(*rec.c2_max, rec.p_out_coherent);
  }
  if (rec.c4_max) {
    shard.hist_c4_max.add(*rec.c4_max);
    shard.cond_c4.add(*rec.c4_max, rec.p_out_coherent);
  }
  if (rec.p_out_dephased) {
    const double p = *rec.p_out_dephased;
    block.p_dephased.add(p);
    shard.hist_dephased.add(p);
    for (std::size_t k = 0; k < cfg.tail_thresholds.size(); ++k) {
      if (p >= cfg.tail_thresholds[k]) ++shard.tails_dephased[k];
    }
    const double delta = p - rec.p_out_coherent;
    if (delta > 0.0) {
      ++shard.enhanced;
      block.gain_delta.add(delta);
    } else if (delta < 0.0) {
      ++shard.suppressed;
      block.loss_delta.add(delta);
    } else {
      ++shard.unchanged;
    }
    if (rec.p_out_coherent > cfg.dichotomy_threshold) {
      ++shard.high;
      if (delta < 0.0) ++shard.high_suppressed;
    }
    if (rec.c2_max_dephased) shard.cond_c2_dephased.add(*rec.c2_max_dephased, p);
  }
  if (cfg.record_cap > 0) {
    const std::uint64_t key = stream_key(cfg.seed, rec.index, StreamPurpose::kReservoir);
    if (shard.reservoir.size() < cfg.record_cap) {
      shard.reservoir.push({key, rec});
    } else if (KeyedRecord{key, rec} < shard.reservoir.top()) {
      shard.reservoir.pop();
      shard.reservoir.push({key, rec});
    }
  }
}

}  // namespace

CampaignResult run_campaign(const CampaignConfig& cfg, const ProgressCallback& progress) {
  validate(cfg);
  std::size_t threads = cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads;
  threads = std::max<std::size_t>(threads, 1);
  const std::uint64_t n_blocks = (cfg.n_samples + kCampaignBlock - 1) / kCampaignBlock;
  threads = static_cast<std::size_t>(std::min<std::uint64_t>(threads, n_blocks));

  std::vector<BlockStats> blocks(n_blocks);
  std::vector<Shard> shards;
  shards.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) shards.emplace_back(cfg);

  std::atomic<std::uint64_t> next_block{0};
  std::atomic<std::uint64_t> done{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mutex;

  auto worker = [&](std::size_t w) {
    try {
      for (;;) {
        if (failed.load()) return;
        const std::uint64_t b = next_block.fetch_add(1);
        if (b >= n_blocks) return;
        const std::uint64_t begin = b * kCampaignBlock;
        const std::uint64_t end = std::min(cfg.n_samples, begin + kCampaignBlock);
        for (std::uint64_t i = begin; i < end; ++i) {
          accumulate(cfg, evaluate_sample(cfg, i), shards[w], blocks[b]);
        }
        const std::uint64_t finished = done.fetch_add(end - begin) + (end - begin);
        if (progress) {
          std::lock_guard lock(mutex);
          progress(finished, cfg.n_samples);
        }
      }
    } catch (...) {
      std::lock_guard lock(mutex);
      if (!error) error = std::current_exception();
      failed.store(true);
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  }
  if (error) std::rethrow_exception(error);

  CampaignResult result{cfg,
                        {},
                        {},
                        shards[0].hist_coherent,
                        shards[0].hist_dephased,
                        shards[0].hist_c2_max,
                        shards[0].hist_c4_max,
                        shards[0].cond_c2,
                        shards[0].cond_c4,
                        shards[0].cond_c2_dephased,
                        {},
                        {},
                        {},
                        {}};
  for (const auto& block : blocks) {
    result.p_coherent.merge(block.p_coherent);
    result.p_dephased.merge(block.p_dephased);
    result.gain_loss.gain_delta.merge(block.gain_delta);
    result.gain_loss.loss_delta.merge(block.loss_delta);
  }
  for (std::size_t w = 1; w < shards.size(); ++w) {
    result.hist_coherent.merge(shards[w].hist_coherent);
    result.hist_dephased.merge(shards[w].hist_dephased);
    result.hist_c2_max.merge(shards[w].hist_c2_max);
    result.hist_c4_max.merge(shards[w].hist_c4_max);
    result.cond_c2.merge(shards[w].cond_c2);
    result.cond_c4.merge(shards[w].cond_c4);
    result.cond_c2_dephased.merge(shards[w].cond_c2_dephased);
  }
  for (std::size_t k = 0; k < cfg.tail_thresholds.size(); ++k) {
    TailCounter coh{cfg.tail_thresholds[k], 0};
    TailCounter deph{cfg.tail_thresholds[k], 0};
    for (const auto& shard : shards) {
      coh.count += shard.tails_coherent[k];
      deph.count += shard.tails_dephased[k];
    }
    result.tails_coherent.push_back(coh);
    if (cfg.dephasing) result.tails_dephased.push_back(deph);
  }
  for (const auto& shard : shards) {
    result.gain_loss.enhanced += shard.enhanced;
    result.gain_loss.suppressed += shard.suppressed;
    result.gain_loss.unchanged += shard.unchanged;
    result.gain_loss.high += shard.high;
    result.gain_loss.high_suppressed += shard.high_suppressed;
  }

  std::vector<KeyedRecord> kept;
  for (auto& shard : shards) {
    while (!shard.reservoir.empty()) {
      kept.push_back(shard.reservoir.top());
      shard.reservoir.pop();
    }
  }
  if (kept.size() > cfg.record_cap) {
    std::nth_element(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(cfg.record_cap),
                     kept.end());
    kept.resize(cfg.record_cap);
  }
  result.records.reserve(kept.size());
  for (auto& k : kept) result.records.push_back(std::move(k.record));
  std::sort(result.records.begin(), result.records.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.index < b.index; });
  return result;
}

TailEstimate tail_fraction(const CampaignResult& result, double threshold, bool dephased) {
  if (std::isnan(threshold)) throw InvalidArgument("threshold is NaN");
  if (dephased && !result.config.dephasing) {
    throw InvalidArgument("campaign has no dephased efficiencies");
  }
  TailEstimate est;
  est.threshold = threshold;
  est.n = dephased ? result.p_dephased.count() : result.p_coherent.count();
  if (threshold <= 0.0) {
    est.count = est.n;
  } else if (threshold > 1.0) {
    est.count = 0;
  } else {
    const auto& counters = dephased ? result.tails_dephased : result.tails_coherent;
    const auto it = std::find_if(counters.begin(), counters.end(),
                                 [&](const TailCounter& c) { return c.threshold == threshold; });
    if (it != counters.end()) {
      est.count = it->count;
    } else if (result.records_complete()) {
      for (const auto& rec : result.records) {
        const double p = dephased ? rec.p_out_dephased.value() : rec.p_out_coherent;
        if (p >= threshold) ++est.count;
      }
    } else {
      throw InvalidArgument("threshold is not a tracked counter and records were capped");
    }
  }
  est.fraction = est.n > 0 ? static_cast<double>(est.count) / static_cast<double>(est.n) : 0.0;
  est.wilson95 = wilson_interval(est.count, est.n);
  return est;
}

Histogram2D conditional_density(std::span<const SampleRecord> records,
                                EntanglementField x_field, std::size_t bins) {
  Histogram2D h({bins, 0.0, 1.0}, {bins, 0.0, 1.0});
  for (const auto& rec : records) {
    switch (x_field) {
      case EntanglementField::kC2Max:
        if (!rec.c2_max) throw InvalidArgument("record lacks c2_max");
        h.add(*rec.c2_max, rec.p_out_coherent);
        break;
      case EntanglementField::kC4Max:
        if (!rec.c4_max) throw InvalidArgument("record lacks c4_max");
        h.add(*rec.c4_max, rec.p_out_coherent);
        break;
      case EntanglementField::kC2MaxDephased:
        if (!rec.c2_max_dephased || !rec.p_out_dephased) {
          throw InvalidArgument("record lacks dephased entanglement");
        }
        h.add(*rec.c2_max_dephased, *rec.p_out_dephased);
        break;
    }
  }
  return h;
}

GainLossSummary dephasing_gain_loss(std::span<const SampleRecord> records) {
  GainLossSummary s;
  s.deltas.reserve(records.size());
  double gain_sum = 0.0;
  double loss_sum = 0.0;
  for (const auto& rec : records) {
    if (!rec.p_out_dephased) throw InvalidArgument("unpaired record (no dephased efficiency)");
    const double delta = *rec.p_out_dephased - rec.p_out_coherent;
    s.deltas.push_back(delta);
    if (delta > 0.0) {
      ++s.enhanced;
      gain_sum += delta;
    } else if (delta < 0.0) {
      ++s.suppressed;
      loss_sum += delta;
    } else {
      ++s.unchanged;
    }
  }
  if (!records.empty()) {
    const auto n = static_cast<double>(records.size());
    s.fraction_enhanced = static_cast<double>(s.enhanced) / n;
    s.fraction_suppressed = static_cast<double>(s.suppressed) / n;
  }
  if (s.enhanced > 0) s.mean_gain = gain_sum / static_cast<double>(s.enhanced);
  if (s.suppressed > 0) s.mean_loss = loss_sum / static_cast<double>(s.suppressed);
  return s;
}

CrossingResult density_crossing(const Histogram1D& coherent, const Histogram1D& dephased) {
  if (!(coherent.binning() == dephased.binning())) {
    throw InvalidArgument("crossing requires identical binning");
  }
  constexpr std::size_t kPersistence = 3;
  const auto a = coherent.density();
  const auto b = dephased.density();
  const Binning& bins = coherent.binning();
  const std::size_t n = a.size();
  std::vector<int> sign(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sign[i] = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
  }
  std::optional<std::size_t> last_negative;
  for (std::size_t i = 0; i < n; ++i) {
    if (sign[i] < 0) {
      last_negative = i;
      continue;
    }
    if (sign[i] == 0 || !last_negative) continue;
    if (i + kPersistence > n) break;
    bool persistent = true;
    for (std::size_t j = i; j < i + kPersistence; ++j) persistent &= sign[j] > 0;
    if (!persistent) continue;
    const std::size_t lo = *last_negative;
    const double d_lo = a[lo] - b[lo];
    const double d_hi = a[i] - b[i];
    const double x_lo = bins.center(lo);
    const double x_hi = bins.center(i);
    return {true, x_lo + (x_hi - x_lo) * d_lo / (d_lo - d_hi)};
  }
  return {};
}

}  // namespace qtransport
