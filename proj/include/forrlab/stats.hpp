#ifndef FORRLAB_STATS_HPP
#define FORRLAB_STATS_HPP

#include <cmath>
#include <cstddef>
#include <span>

namespace forrlab {

// Pairwise summation with a fixed recursion shape: accurate and, unlike a
// parallel reduction, gives the same bits regardless of worker count.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 32) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct SampleStats {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error = 0.0;
};

inline SampleStats compute_stats(std::span<const double> v) {
  SampleStats s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = pairwise_sum(v) / static_cast<double>(v.size());
  if (v.size() < 2) return s;
  double acc = 0.0;
  for (double x : v) {
    const double d = x - s.mean;
    acc += d * d;
  }
  s.variance = acc / static_cast<double>(v.size() - 1);
  s.std_error = std::sqrt(s.variance / static_cast<double>(v.size()));
  return s;
}

inline double binomial_std_error(double p_hat, std::size_t n) {
  if (n == 0) return 0.0;
  return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
}

}  // namespace forrlab

#endif  // FORRLAB_STATS_HPP
