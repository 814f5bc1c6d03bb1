#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "forrlab/forrelation.hpp"
#include "forrlab/polynomial.hpp"
#include "forrlab/stats.hpp"
#include "forrlab/wht.hpp"

using namespace forrlab;

TEST_CASE("sample_D_S with the empty set is identically zero") {
  const auto cov = CovarianceSpec::hadamard_block(4);
  const SimParams params = SimParams::with_default_delta(0.01);
  RandomStream rng(51);
  const auto sample = sample_D_S(2, 0, cov, params, rng);
  CHECK(sample.live_mask == 0);
  for (double v : sample.values) CHECK(v == 0.0);
}

TEST_CASE("live blocks stay inside the box and dead blocks are zero") {
  const auto cov = CovarianceSpec::hadamard_block(4);
  const SimParams params = SimParams::with_default_delta(0.3);  // exits common
  for (int t = 0; t < 50; ++t) {
    RandomStream rng(derive_seed(52, 0, static_cast<std::uint64_t>(t)));
    const auto sample = sample_D_S(2, 0b10, cov, params, rng);
    for (double v : sample.block(0)) CHECK(v == 0.0);
    for (double v : sample.block(1)) CHECK(std::abs(v) <= 0.5);
  }
}

TEST_CASE("phi of a single live block concentrates near epsilon") {
  const std::size_t n = 128;
  const auto cov = CovarianceSpec::hadamard_block(n);
  const double eps = 0.01;
  const SimParams params = SimParams::with_default_delta(eps);
  const std::size_t trials = 300;
  std::vector<double> phis(trials);
  std::vector<double> scratch(n);
  for (std::size_t t = 0; t < trials; ++t) {
    RandomStream rng(derive_seed(53, 1, t));
    const auto sample = sample_D_S(1, 0b1, cov, params, rng);
    const auto block = sample.block(0);
    phis[t] = phi(block.first(n), block.subspan(n), scratch);
  }
  const SampleStats s = compute_stats(phis);
  CHECK(std::abs(s.mean - eps) < 4.0 * s.std_error);
}

TEST_CASE("blocks are sampled independently") {
  const auto cov = CovarianceSpec::hadamard_block(4);
  const SimParams params = SimParams::with_default_delta(0.01);
  const std::size_t trials = 4000;
  std::vector<double> cross(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    RandomStream rng(derive_seed(54, 2, t));
    const auto sample = sample_D_S(2, 0b11, cov, params, rng);
    cross[t] = sample.block(0)[0] * sample.block(1)[0];
  }
  const SampleStats s = compute_stats(cross);
  CHECK(std::abs(s.mean) < 4.0 * s.std_error);
}

TEST_CASE("parity-conditioned subsets") {
  RandomStream rng(55);
  SUBCASE("k=1 odd is always the full block, even is empty") {
    for (int t = 0; t < 20; ++t) {
      CHECK(sample_parity_subset(1, Parity::odd, rng) == 0b1);
      CHECK(sample_parity_subset(1, Parity::even, rng) == 0);
    }
  }
  SUBCASE("k=2 odd subsets are uniform over the two singletons") {
    int count_first = 0;
    const int draws = 10000;
    for (int t = 0; t < draws; ++t) {
      const auto s = sample_parity_subset(2, Parity::odd, rng);
      REQUIRE((s == 0b01 || s == 0b10));
      if (s == 0b01) ++count_first;
    }
    // Chi-square with one degree of freedom against the uniform split.
    const double expected = draws / 2.0;
    const double chi2 = (count_first - expected) * (count_first - expected) / expected +
                        (draws - count_first - expected) * (draws - count_first - expected) / expected;
    CHECK(chi2 < 10.83);  // p = 0.001
  }
  SUBCASE("k=3 parity is respected") {
    for (int t = 0; t < 200; ++t) {
      CHECK((std::popcount(sample_parity_subset(3, Parity::odd, rng)) & 1u) == 1u);
      CHECK((std::popcount(sample_parity_subset(3, Parity::even, rng)) & 1u) == 0u);
    }
  }
}

TEST_CASE("rounding to the cube") {
  SUBCASE("zero rounds to a fair coin") {
    RandomStream rng(56);
    const std::vector<double> z(1, 0.0);
    int plus = 0;
    const int draws = 20000;
    for (int t = 0; t < draws; ++t) {
      if (round_to_cube(z, rng).bits[0] == 1) ++plus;
    }
    const double se = binomial_std_error(0.5, draws);
    CHECK(std::abs(plus / double(draws) - 0.5) < 4 * se);
  }
  SUBCASE("boundary value rounds with probability 3/4") {
    RandomStream rng(57);
    const std::vector<double> z(1, 0.5);
    int plus = 0;
    const int draws = 20000;
    for (int t = 0; t < draws; ++t) {
      if (round_to_cube(z, rng).bits[0] == 1) ++plus;
    }
    const double se = binomial_std_error(0.75, draws);
    CHECK(std::abs(plus / double(draws) - 0.75) < 4 * se);
  }
  SUBCASE("out-of-range entries are rejected") {
    RandomStream rng(58);
    const std::vector<double> z(1, 0.6);
    CHECK_THROWS_AS(round_to_cube(z, rng), std::invalid_argument);
  }
}

TEST_CASE("rounding preserves multilinear expectations exactly (enumeration)") {
  // Enumerate all 2^m sign patterns with their product probabilities; the
  // weighted mean of p at the patterns must equal p at the original point.
  RandomStream rng(59);
  for (int m = 2; m <= 4; ++m) {
    std::vector<MultilinearPoly::Term> terms;
    const SubsetMask full = (SubsetMask{1} << m) - 1;
    for (int i = 0; i < 5; ++i) {
      terms.emplace_back(rng.bits() & full, 2.0 * rng.uniform() - 1.0);
    }
    const MultilinearPoly p(m, std::move(terms));
    std::vector<double> z(static_cast<std::size_t>(m));
    for (double& zi : z) zi = rng.uniform() - 0.5;

    double mean = 0.0;
    std::vector<double> pattern(static_cast<std::size_t>(m));
    for (SubsetMask neg = 0; neg <= full; ++neg) {
      double prob = 1.0;
      for (int i = 0; i < m; ++i) {
        const double p_plus = 0.5 * (1.0 + z[static_cast<std::size_t>(i)]);
        if (neg >> i & 1u) {
          prob *= 1.0 - p_plus;
          pattern[static_cast<std::size_t>(i)] = -1.0;
        } else {
          prob *= p_plus;
          pattern[static_cast<std::size_t>(i)] = 1.0;
        }
      }
      mean += prob * p.evaluate(pattern);
    }
    CHECK(std::abs(mean - p.evaluate(z)) < 1e-12);
  }
}

TEST_CASE("rounding preserves multilinear expectations (sampler)") {
  RandomStream rng(60);
  const MultilinearPoly p(3, {{0b011, 0.7}, {0b100, -0.4}, {0b111, 0.2}});
  const std::vector<double> z = {0.3, -0.2, 0.45};
  const double target = p.evaluate(z);
  const std::size_t draws = 100000;
  std::vector<double> vals(draws);
  std::vector<double> point(3);
  for (std::size_t t = 0; t < draws; ++t) {
    const CubePoint cube = round_to_cube(z, rng);
    for (int i = 0; i < 3; ++i) point[static_cast<std::size_t>(i)] = cube.bits[static_cast<std::size_t>(i)];
    vals[t] = p.evaluate(point);
  }
  const SampleStats s = compute_stats(vals);
  CHECK(std::abs(s.mean - target) < 4.0 * s.std_error);
}

TEST_CASE("forrelation decision thresholds") {
  const std::vector<double> ones = {1.0, 1.0};
  SUBCASE("large statistic decides minus one") {
    CHECK(forrelation_decision(ones, ones, 0.01) == Trit::minus_one);
  }
  SUBCASE("orthogonal pair decides plus one") {
    // H y = (1,1,1,-1) for this y; the chosen x is orthogonal to it.
    const std::vector<double> x = {1.0, -1.0, 1.0, 1.0};
    const std::vector<double> y = {1.0, 1.0, 1.0, -1.0};
    CHECK(std::abs(phi(x, y)) < 1e-15);
    CHECK(forrelation_decision(x, y, 0.01) == Trit::plus_one);
  }
  SUBCASE("gap values are undefined") {
    // phi = sqrt(2)/2; choose eps so that eps/4 < phi < eps/2.
    CHECK(decide_phi(0.7071067811865476, 2.0) == Trit::bottom);
  }
}

TEST_CASE("k-fold decision multiplies block decisions") {
  // n = 2, N = 4 per block. Build blocks with known phi values.
  const double eps = 0.01;
  auto block_minus = std::vector<std::int8_t>{1, 1, 1, 1};     // phi = +sqrt(2)/2
  auto block_plus = std::vector<std::int8_t>{1, -1, 1, -1};    // phi = -sqrt(2)/2
  SUBCASE("k=1 equals the single decision") {
    CubePoint z{block_minus};
    CHECK(forrelation_k(z, 1, eps) == Trit::minus_one);
  }
  SUBCASE("two minus blocks multiply to plus") {
    CubePoint z;
    z.bits = block_minus;
    z.bits.insert(z.bits.end(), block_minus.begin(), block_minus.end());
    CHECK(forrelation_k(z, 2, eps) == Trit::plus_one);
  }
  SUBCASE("mixed blocks multiply to minus") {
    CubePoint z;
    z.bits = block_minus;
    z.bits.insert(z.bits.end(), block_plus.begin(), block_plus.end());
    CHECK(forrelation_k(z, 2, eps) == Trit::minus_one);
  }
  SUBCASE("an undefined block poisons the product") {
    CubePoint z;
    z.bits = block_minus;
    z.bits.insert(z.bits.end(), block_minus.begin(), block_minus.end());
    CHECK(forrelation_k(z, 2, 2.0) == Trit::bottom);  // both blocks in the gap
  }
}

TEST_CASE("block sample binary dump round trip") {
  const auto cov = CovarianceSpec::hadamard_block(4);
  const SimParams params = SimParams::with_default_delta(0.01);
  RandomStream rng(61);
  const auto sample = sample_D_S(2, 0b01, cov, params, rng);

  std::stringstream ss;
  write_block_sample(ss, sample);
  const auto loaded = read_block_sample(ss);
  CHECK(loaded.k == sample.k);
  CHECK(loaded.block_dim == sample.block_dim);
  CHECK(loaded.live_mask == sample.live_mask);
  CHECK(loaded.hit_mask == sample.hit_mask);
  CHECK(loaded.values == sample.values);
}

TEST_CASE("cube point binary dump round trip") {
  RandomStream rng(62);
  const std::vector<double> z(16, 0.0);
  const CubePoint cube = round_to_cube(z, rng);
  std::stringstream ss;
  write_cube_point(ss, cube);
  const auto loaded = read_cube_point(ss);
  CHECK(loaded.bits == cube.bits);

  std::stringstream bad("XXXX");
  CHECK_THROWS_AS(read_cube_point(bad), std::runtime_error);
}
