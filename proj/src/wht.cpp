#include "forrlab/wht.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "forrlab/stats.hpp"

namespace forrlab {

namespace {

// Below this size the OpenMP fork/join dwarfs the transform itself.
constexpr std::size_t kParallelCutoff = std::size_t{1} << 15;

void check_transform_length(std::size_t n) {
  if (!is_power_of_two(n)) {
    throw std::invalid_argument("fwht: length must be a power of two");
  }
}

inline void butterfly_pass_serial(double* v, std::size_t n, std::size_t len) {
  for (std::size_t i = 0; i < n; i += 2 * len) {
    for (std::size_t j = i; j < i + len; ++j) {
      const double a = v[j];
      const double b = v[j + len];
      v[j] = a + b;
      v[j + len] = a - b;
    }
  }
}

inline void butterfly_pass_parallel(double* v, std::size_t n, std::size_t len) {
  const long long pairs = static_cast<long long>(n / 2);
#pragma omp parallel for schedule(static)
  for (long long p = 0; p < pairs; ++p) {
    // Pair p maps to index j = 2p - (p mod len); j and j+len form a butterfly.
    const std::size_t up = static_cast<std::size_t>(p);
    const std::size_t j = 2 * up - (up & (len - 1));
    const double a = v[j];
    const double b = v[j + len];
    v[j] = a + b;
    v[j + len] = a - b;
  }
}

}  // namespace

void fwht_unnormalized(std::span<double> v) {
  const std::size_t n = v.size();
  check_transform_length(n);
  double* data = v.data();
  const bool parallel = n >= kParallelCutoff;
  for (std::size_t len = 1; len < n; len <<= 1) {
    if (parallel) {
      butterfly_pass_parallel(data, n, len);
    } else {
      butterfly_pass_serial(data, n, len);
    }
  }
}

void fwht(std::span<double> v) {
  fwht_unnormalized(v);
  const std::size_t n = v.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  double* data = v.data();
  if (n >= kParallelCutoff) {
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < nn; ++i) data[i] *= scale;
  } else {
    for (std::size_t i = 0; i < n; ++i) data[i] *= scale;
  }
}

std::vector<double> fwht_copy(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  fwht(out);
  return out;
}

double phi(std::span<const double> x, std::span<const double> y,
           std::span<double> scratch) {
  const std::size_t n = x.size();
  if (y.size() != n) {
    throw std::invalid_argument("phi: x and y must have the same length");
  }
  if (scratch.size() != n) {
    throw std::invalid_argument("phi: scratch must match the input length");
  }
  check_transform_length(n);
  for (std::size_t i = 0; i < n; ++i) scratch[i] = y[i];
  fwht(scratch);
  for (std::size_t i = 0; i < n; ++i) scratch[i] *= x[i];
  return pairwise_sum(scratch) / static_cast<double>(n);
}

double phi(std::span<const double> x, std::span<const double> y) {
  std::vector<double> scratch(y.size());
  return phi(x, y, scratch);
}

namespace reference {

void fwht(std::span<double> v) {
  const std::size_t n = v.size();
  check_transform_length(n);
  double* data = v.data();
  for (std::size_t len = 1; len < n; len <<= 1) {
    butterfly_pass_serial(data, n, len);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) data[i] *= scale;
}

std::vector<double> hadamard_multiply(std::span<const double> v) {
  const std::size_t n = v.size();
  check_transform_length(n);
  std::vector<double> out(n, 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool neg = std::popcount(i & j) & 1u;
      acc += neg ? -v[j] : v[j];
    }
    out[i] = acc * scale;
  }
  return out;
}

double phi(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("phi: x and y must have the same length");
  }
  const std::vector<double> hy = hadamard_multiply(y);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * hy[i];
  return acc / static_cast<double>(x.size());
}

}  // namespace reference

}  // namespace forrlab
