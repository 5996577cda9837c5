#include "qtransport/histogram.hpp"

#include <cmath>

#include "qtransport/errors.hpp"

namespace qtransport {

std::optional<std::size_t> Binning::locate(double x) const noexcept {
  if (!(x >= lo)) return std::nullopt;
  if (x > hi) return std::nullopt;
  if (x == hi) return bins - 1;
  auto b = static_cast<std::size_t>((x - lo) / width());
  if (b >= bins) b = bins - 1;
  // Floating division can land one bin off near an edge.
  if (b > 0 && x < left(b)) --b;
  if (b + 1 < bins && x >= left(b + 1)) ++b;
  return b;
}

void validate(const Binning& binning) {
  if (binning.bins < 2) throw InvalidArgument("histograms need at least 2 bins");
  if (!(binning.hi > binning.lo) || !std::isfinite(binning.lo) ||
      !std::isfinite(binning.hi)) {
    throw InvalidArgument("histogram range must satisfy lo < hi");
  }
}

Histogram1D::Histogram1D(Binning binning) : binning_(binning), counts_(binning.bins, 0) {
  validate(binning_);
}

void Histogram1D::add(double x) noexcept {
  ++total_;
  if (const auto b = binning_.locate(x)) {
    ++counts_[*b];
  } else if (x > binning_.hi) {
    ++overflow_;
  } else {
    ++underflow_;
  }
}

void Histogram1D::merge(const Histogram1D& other) {
  if (!(binning_ == other.binning_)) throw InvalidArgument("histogram binnings differ");
  for (std::size_t b = 0; b < counts_.size(); ++b) counts_[b] += other.counts_[b];
  underflow_ += other.underflow_;
  overflow_ += other.overflow_;
  total_ += other.total_;
}

std::vector<double> Histogram1D::density() const {
  std::vector<double> d(counts_.size(), 0.0);
  if (total_ == 0) return d;
  const double norm = static_cast<double>(total_) * binning_.width();
  for (std::size_t b = 0; b < counts_.size(); ++b) {
    d[b] = static_cast<double>(counts_[b]) / norm;
  }
  return d;
}

Histogram1D Histogram1D::from_counts(Binning binning, std::vector<std::uint64_t> counts,
                                     std::uint64_t underflow, std::uint64_t overflow) {
  Histogram1D h(binning);
  if (counts.size() != binning.bins) throw InvalidArgument("count vector size mismatch");
  h.counts_ = std::move(counts);
  h.underflow_ = underflow;
  h.overflow_ = overflow;
  h.total_ = underflow + overflow;
  for (const auto c : h.counts_) h.total_ += c;
  return h;
}

Histogram2D::Histogram2D(Binning x, Binning y)
    : x_(x), y_(y), counts_(x.bins * y.bins, 0) {
  validate(x_);
  validate(y_);
}

void Histogram2D::add(double x, double y) noexcept {
  ++total_;
  const auto xb = x_.locate(x);
  const auto yb = y_.locate(y);
  if (xb && yb) {
    ++counts_[*xb * y_.bins + *yb];
  } else {
    ++outside_;
  }
}

void Histogram2D::merge(const Histogram2D& other) {
  if (!(x_ == other.x_) || !(y_ == other.y_)) {
    throw InvalidArgument("histogram binnings differ");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  outside_ += other.outside_;
  total_ += other.total_;
}

std::uint64_t Histogram2D::column_total(std::size_t xb) const noexcept {
  std::uint64_t sum = 0;
  for (std::size_t yb = 0; yb < y_.bins; ++yb) sum += count(xb, yb);
  return sum;
}

ConditionalDensity column_normalized(const Histogram2D& h) {
  ConditionalDensity view{h.x_binning(), h.y_binning(), {}, {}};
  view.density.assign(view.x.bins * view.y.bins, 0.0);
  view.column_populated.assign(view.x.bins, false);
  const double dy = view.y.width();
  for (std::size_t xb = 0; xb < view.x.bins; ++xb) {
    const std::uint64_t column = h.column_total(xb);
    if (column == 0) continue;
    view.column_populated[xb] = true;
    for (std::size_t yb = 0; yb < view.y.bins; ++yb) {
      view.density[xb * view.y.bins + yb] =
          static_cast<double>(h.count(xb, yb)) / (static_cast<double>(column) * dy);
    }
  }
  return view;
}

namespace {

std::size_t snap_to_edge(const Binning& b, double value) {
  const double position = (value - b.lo) / b.width();
  const double rounded = std::round(position);
  if (std::abs(position - rounded) > 1e-9 || rounded < 0.0 ||
      rounded > static_cast<double>(b.bins)) {
    throw InvalidArgument("threshold does not coincide with a bin edge");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

std::optional<double> conditional_exceedance(const Histogram2D& h, double x_max,
                                             double y_min) {
  const std::size_t x_end = snap_to_edge(h.x_binning(), x_max);
  const std::size_t y_begin = snap_to_edge(h.y_binning(), y_min);
  std::uint64_t condition = 0;
  std::uint64_t joint = 0;
  for (std::size_t xb = 0; xb < x_end; ++xb) {
    for (std::size_t yb = 0; yb < h.y_binning().bins; ++yb) {
      const auto c = h.count(xb, yb);
      condition += c;
      if (yb >= y_begin) joint += c;
    }
  }
  if (condition == 0) return std::nullopt;
  return static_cast<double>(joint) / static_cast<double>(condition);
}

}  // namespace qtransport
