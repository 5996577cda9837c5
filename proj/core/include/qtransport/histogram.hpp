#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qtransport {

/// Uniform binning on [lo, hi]. The right edge is inclusive so that a value
/// of exactly hi lands in the last bin rather than in overflow.
struct Binning {
  std::size_t bins = 200;
  double lo = 0.0;
  double hi = 1.0;

  double width() const noexcept { return (hi - lo) / static_cast<double>(bins); }
  double left(std::size_t b) const noexcept { return lo + width() * static_cast<double>(b); }
  double right(std::size_t b) const noexcept {
    return b + 1 == bins ? hi : lo + width() * static_cast<double>(b + 1);
  }
  double center(std::size_t b) const noexcept { return 0.5 * (left(b) + right(b)); }

  /// Bin index, or nullopt for under/overflow (NaN counts as underflow).
  std::optional<std::size_t> locate(double x) const noexcept;

  bool operator==(const Binning&) const = default;
};

void validate(const Binning& binning);

/// Mergeable 1D count sketch.
class Histogram1D {
 public:
  explicit Histogram1D(Binning binning = {});

  void add(double x) noexcept;
  /// Exact count addition; binnings must match.
  void merge(const Histogram1D& other);

  const Binning& binning() const noexcept { return binning_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t underflow() const noexcept { return underflow_; }
  std::uint64_t overflow() const noexcept { return overflow_; }
  std::uint64_t total() const noexcept { return total_; }

  /// Probability density per bin, normalized by the total including
  /// under/overflow. All zeros when empty.
  std::vector<double> density() const;

  /// Rebuilds a sketch from raw parts; checks the total invariant.
  static Histogram1D from_counts(Binning binning, std::vector<std::uint64_t> counts,
                                 std::uint64_t underflow, std::uint64_t overflow);

  bool operator==(const Histogram1D&) const = default;

 private:
  Binning binning_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t underflow_ = 0;
  std::uint64_t overflow_ = 0;
  std::uint64_t total_ = 0;
};

/// Mergeable 2D count sketch; counts stored x-major (x * y_bins + y).
class Histogram2D {
 public:
  Histogram2D(Binning x = {100, 0.0, 1.0}, Binning y = {100, 0.0, 1.0});

  /// Points outside either axis go to the shared outside counter.
  void add(double x, double y) noexcept;
  void merge(const Histogram2D& other);

  const Binning& x_binning() const noexcept { return x_; }
  const Binning& y_binning() const noexcept { return y_; }
  std::uint64_t count(std::size_t xb, std::size_t yb) const noexcept {
    return counts_[xb * y_.bins + yb];
  }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t outside() const noexcept { return outside_; }
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t column_total(std::size_t xb) const noexcept;

  bool operator==(const Histogram2D&) const = default;

 private:
  Binning x_;
  Binning y_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t outside_ = 0;
  std::uint64_t total_ = 0;
};

/// Column-normalized view of a 2D sketch: each non-empty x column integrates
/// to one over y (values are densities, mass / y-width). Empty columns are
/// flagged rather than filled.
struct ConditionalDensity {
  Binning x;
  Binning y;
  std::vector<double> density;         // x-major, like Histogram2D
  std::vector<bool> column_populated;  // per x bin

  double at(std::size_t xb, std::size_t yb) const noexcept {
    return density[xb * y.bins + yb];
  }
};

ConditionalDensity column_normalized(const Histogram2D& h);

/// P(y >= y_min | x < x_max) from the counts. Both thresholds are snapped to
/// bin edges (they must coincide with one up to rounding). Returns nullopt when
/// the conditioning set is empty.
std::optional<double> conditional_exceedance(const Histogram2D& h, double x_max,
                                             double y_min);

/// Sentinel written to CSV cells of unpopulated columns.
inline constexpr double kEmptyColumnSentinel = -1.0;

}  // namespace qtransport
