#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

namespace acemad {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  bool excludes_zero() const noexcept { return lo > 0.0 || hi < 0.0; }
  double width() const noexcept { return hi - lo; }
};

// Welford accumulator; merge() is Chan's pairwise combination so partial
// results from different workers can be folded in any grouping.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  void merge(const RunningStats& other) noexcept {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double delta = other.mean_ - mean_;
    const double total = na + nb;
    mean_ += delta * nb / total;
    m2_ += other.m2_ + delta * delta * na * nb / total;
    n_ += other.n_;
  }

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return n_ == 0 ? std::numeric_limits<double>::quiet_NaN() : mean_; }
  double variance() const noexcept { return n_ < 2 ? 0.0 : std::max(0.0, m2_ / static_cast<double>(n_ - 1)); }
  double stddev() const noexcept { return std::sqrt(variance()); }

  // Two-sided Student-t interval. Undefined below two samples, so it spans
  // the whole line there.
  Interval t_interval(double confidence = 0.95) const {
    if (n_ < 2) {
      return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    }
    const boost::math::students_t dist(static_cast<double>(n_ - 1));
    const double q = boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
    const double half = q * std::sqrt(variance() / static_cast<double>(n_));
    return {mean_ - half, mean_ + half};
  }

  // Normal-approximation interval, mean +- z * standard error.
  Interval z_interval(double z = kZ95) const {
    if (n_ < 2) {
      return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    }
    const double half = z * std::sqrt(variance() / static_cast<double>(n_));
    return {mean_ - half, mean_ + half};
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline Interval wilson_interval(std::size_t successes, std::size_t n, double z = kZ95) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // At p = 0 or 1 the bound meets p analytically; keep p inside despite rounding.
  return {std::min(p, std::max(0.0, centre - half)), std::max(p, std::min(1.0, centre + half))};
}

}  // namespace acemad
