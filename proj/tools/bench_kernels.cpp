// Benchmark comparing the OpenMP kernels against the serial references.
// Reports wall time, speedup, and the max |difference| between the two
// implementations (which must be exactly zero).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "forrlab/rng.hpp"
#include "forrlab/stats.hpp"
#include "forrlab/stochastic.hpp"
#include "forrlab/wht.hpp"

using namespace forrlab;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

void bench_fwht() {
  std::printf("fwht: serial reference vs OpenMP kernel\n");
  std::printf("%10s %12s %12s %9s %10s\n", "n", "serial_ms", "parallel_ms",
              "speedup", "max_diff");
  RandomStream rng(1234);
  for (std::size_t n = std::size_t{1} << 14; n <= (std::size_t{1} << 20); n <<= 2) {
    std::vector<double> base(n);
    for (double& x : base) x = 2.0 * rng.uniform() - 1.0;
    const int reps = static_cast<int>((std::size_t{1} << 24) / n) + 1;

    std::vector<double> a = base;
    auto t0 = clock_type::now();
    for (int r = 0; r < reps; ++r) reference::fwht(a);
    const double serial = seconds_since(t0) / reps * 1e3;

    std::vector<double> b = base;
    t0 = clock_type::now();
    for (int r = 0; r < reps; ++r) fwht(b);
    const double parallel = seconds_since(t0) / reps * 1e3;

    double max_diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diff = std::max(max_diff, std::abs(a[i] - b[i]));
    std::printf("%10zu %12.3f %12.3f %8.2fx %10.3g\n", n, serial, parallel,
                serial / parallel, max_diff);
  }
}

void bench_trials() {
  std::printf("\nendpoint sampling, 256 trials at n = 2^16\n");
  const auto cov = CovarianceSpec::hadamard_block(std::size_t{1} << 16);
  const double eps = 0.01;
  const std::size_t trials = 256;
  const StreamFamily fam = StreamFamily::root(99, "bench");

  std::vector<double> serial_phi(trials), parallel_phi(trials);

  auto t0 = clock_type::now();
  for (std::size_t t = 0; t < trials; ++t) {
    RandomStream rng = fam.stream(t);
    const auto ep = sample_endpoint(cov, eps, rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < cov.half_dim(); ++i) acc += ep.values[i] * ep.values[i];
    serial_phi[t] = acc / static_cast<double>(cov.half_dim());
  }
  const double serial = seconds_since(t0);

  t0 = clock_type::now();
#pragma omp parallel for schedule(dynamic)
  for (long long t = 0; t < static_cast<long long>(trials); ++t) {
    RandomStream rng = fam.stream(static_cast<std::uint64_t>(t));
    const auto ep = sample_endpoint(cov, eps, rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < cov.half_dim(); ++i) acc += ep.values[i] * ep.values[i];
    parallel_phi[static_cast<std::size_t>(t)] = acc / static_cast<double>(cov.half_dim());
  }
  const double parallel = seconds_since(t0);

  double max_diff = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    max_diff = std::max(max_diff, std::abs(serial_phi[t] - parallel_phi[t]));
  }
  std::printf("serial %.3fs, parallel %.3fs, speedup %.2fx, max_diff %.3g\n", serial,
              parallel, serial / parallel, max_diff);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP max threads: %d\n\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP\n\n");
#endif
  bench_fwht();
  bench_trials();
  return 0;
}
