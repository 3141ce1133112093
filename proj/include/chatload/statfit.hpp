#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chatload {

struct CdfPoint {
  double value = 0.0;
  double cum_prob = 0.0;

  bool operator==(const CdfPoint&) const = default;
};

/// Right-continuous empirical CDF over the distinct sample values.
using CdfSeries = std::vector<CdfPoint>;

inline CdfSeries ecdf(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("ecdf: empty sample set");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  CdfSeries out;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // emit one point per distinct value, at the last occurrence
    if (i + 1 == sorted.size() || sorted[i + 1] != sorted[i]) {
      out.push_back({sorted[i], static_cast<double>(i + 1) / n});
    }
  }
  return out;
}

template <typename T>
CdfSeries ecdf_of(const std::vector<T>& samples) {
  std::vector<double> vals(samples.begin(), samples.end());
  return ecdf(vals);
}

/// One user's position on the rank-frequency curve (rank 1 = most messages).
struct RankedUser {
  std::uint32_t rank = 0;
  std::string user_id;
  std::uint64_t frequency = 0;

  bool operator==(const RankedUser&) const = default;
};

/// Sorts users by descending message count and assigns ranks 1..k.
/// Ties break by pseudonym order so the ranking is deterministic.
inline std::vector<RankedUser> rank_frequency(const std::map<std::string, std::uint64_t>& msg_counts) {
  if (msg_counts.empty()) throw std::invalid_argument("rank_frequency: no users");
  std::vector<RankedUser> out;
  out.reserve(msg_counts.size());
  for (const auto& [user, count] : msg_counts) out.push_back({0, user, count});
  std::sort(out.begin(), out.end(), [](const RankedUser& a, const RankedUser& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.user_id < b.user_id;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<std::uint32_t>(i + 1);
  return out;
}

/// Least-squares line through (log10 rank, log10 frequency).
struct ZipfFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n_points = 0;

  double fitted(double rank) const { return std::pow(10.0, intercept + slope * std::log10(rank)); }
};

inline ZipfFit zipf_fit(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 2) throw std::invalid_argument("zipf_fit: need at least 2 points");
  const std::size_t n = pairs.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [rank, freq] = pairs[i];
    if (!(freq > 0.0)) throw std::invalid_argument("zipf_fit: nonpositive frequency at rank " + std::to_string(rank));
    if (!(rank > 0.0)) throw std::invalid_argument("zipf_fit: nonpositive rank");
    xs[i] = std::log10(rank);
    ys[i] = std::log10(freq);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("zipf_fit: degenerate rank axis");
  ZipfFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.n_points = n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
    ss_tot += (ys[i] - my) * (ys[i] - my);
  }
  fit.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

inline ZipfFit zipf_fit(std::span<const RankedUser> ranked) {
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(ranked.size());
  for (const RankedUser& r : ranked) {
    if (r.frequency == 0) throw std::invalid_argument("zipf_fit: zero frequency at rank " + std::to_string(r.rank));
    pairs.emplace_back(static_cast<double>(r.rank), static_cast<double>(r.frequency));
  }
  return zipf_fit(std::span<const std::pair<double, double>>(pairs));
}

/// Summary of a sample: population std, linear-interpolation quantiles.
struct SummaryStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population (divide by n)
  double min = 0.0;
  double max = 0.0;
  double p5 = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p95 = 0.0;
};

namespace detail {
// Quantile with linear interpolation between order statistics (the
// h = (n-1)q convention). `sorted` must be ascending and non-empty.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}
}  // namespace detail

inline SummaryStats summary_stats(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("summary_stats: empty sample set");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  SummaryStats s;
  s.count = sorted.size();
  double sum = 0.0;
  for (double v : sorted) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.count));
  s.min = sorted.front();
  s.max = sorted.back();
  s.p5 = detail::quantile_sorted(sorted, 0.05);
  s.p25 = detail::quantile_sorted(sorted, 0.25);
  s.p50 = detail::quantile_sorted(sorted, 0.50);
  s.p75 = detail::quantile_sorted(sorted, 0.75);
  s.p95 = detail::quantile_sorted(sorted, 0.95);
  return s;
}

template <typename T>
SummaryStats summary_stats_of(const std::vector<T>& samples) {
  std::vector<double> vals(samples.begin(), samples.end());
  return summary_stats(vals);
}

}  // namespace chatload
