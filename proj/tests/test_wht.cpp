#include <cmath>
#include <vector>

#include "doctest.h"
#include "forrlab/rng.hpp"
#include "forrlab/wht.hpp"

using namespace forrlab;

namespace {

std::vector<double> random_vector(std::size_t n, RandomStream& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
  return v;
}

}  // namespace

TEST_CASE("fwht on a single entry is the identity") {
  std::vector<double> v = {5.0};
  fwht(v);
  CHECK(v[0] == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("fwht n=2 matches the explicit matrix") {
  std::vector<double> v = {1.0, 1.0};
  const auto expected = reference::hadamard_multiply(v);
  fwht(v);
  CHECK(v[0] == doctest::Approx(expected[0]).epsilon(1e-14));
  CHECK(v[1] == doctest::Approx(expected[1]).epsilon(1e-14));
  CHECK(v[0] == doctest::Approx(1.4142135623730951).epsilon(1e-14));
  CHECK(std::abs(v[1]) < 1e-15);
}

TEST_CASE("fwht is an involution") {
  RandomStream rng(11);
  auto v = random_vector(8, rng);
  const auto original = v;
  fwht(v);
  fwht(v);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(std::abs(v[i] - original[i]) < 1e-12);
  }
}

TEST_CASE("fwht rejects non-power-of-two lengths") {
  std::vector<double> v(3, 1.0);
  CHECK_THROWS_AS(fwht(v), std::invalid_argument);
  std::vector<double> empty;
  CHECK_THROWS_AS(fwht(empty), std::invalid_argument);
}

TEST_CASE("fwht agrees with the naive multiply across sizes") {
  RandomStream rng(12);
  for (std::size_t n = 2; n <= 1024; n *= 2) {
    for (int rep = 0; rep < 3; ++rep) {
      const auto v = random_vector(n, rng);
      const auto expected = reference::hadamard_multiply(v);
      const auto actual = fwht_copy(v);
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(actual[i] - expected[i]));
      }
      CHECK(worst < 1e-10);
    }
  }
}

TEST_CASE("fwht preserves the 2-norm") {
  RandomStream rng(13);
  for (std::size_t n = 2; n <= 1024; n *= 2) {
    auto v = random_vector(n, rng);
    double before = 0.0;
    for (double x : v) before += x * x;
    fwht(v);
    double after = 0.0;
    for (double x : v) after += x * x;
    CHECK(std::abs(std::sqrt(after) - std::sqrt(before)) / std::sqrt(before) < 1e-12);
  }
}

TEST_CASE("parallel kernel and serial reference are bit-identical") {
  RandomStream rng(14);
  // 2^16 exercises the OpenMP pass, small sizes the serial one.
  for (std::size_t n : {std::size_t{8}, std::size_t{1} << 16}) {
    auto v = random_vector(n, rng);
    auto w = v;
    fwht(v);
    reference::fwht(w);
    for (std::size_t i = 0; i < n; ++i) CHECK(v[i] == w[i]);
  }
}

TEST_CASE("phi matches the direct formula") {
  const std::vector<double> x = {1.0, 1.0};
  const std::vector<double> y = {1.0, 1.0};
  CHECK(phi(x, y) == doctest::Approx(0.7071067811865476).epsilon(1e-13));
}

TEST_CASE("phi vanishes on the zero vector") {
  RandomStream rng(15);
  const auto x = random_vector(16, rng);
  const std::vector<double> zero(16, 0.0);
  CHECK(std::abs(phi(x, zero)) < 1e-15);
  CHECK(std::abs(phi(zero, x)) < 1e-15);
}

TEST_CASE("phi agrees with the naive quadratic-time oracle") {
  RandomStream rng(16);
  for (int rep = 0; rep < 5; ++rep) {
    const auto x = random_vector(4, rng);
    const auto y = random_vector(4, rng);
    CHECK(std::abs(phi(x, y) - reference::phi(x, y)) < 1e-12);
  }
}

TEST_CASE("phi is symmetric") {
  RandomStream rng(17);
  for (std::size_t n : {std::size_t{4}, std::size_t{64}}) {
    const auto x = random_vector(n, rng);
    const auto y = random_vector(n, rng);
    CHECK(std::abs(phi(x, y) - phi(y, x)) < 1e-12);
  }
}

TEST_CASE("phi rejects mismatched lengths") {
  const std::vector<double> x(4, 1.0);
  const std::vector<double> y(8, 1.0);
  CHECK_THROWS_AS(phi(x, y), std::invalid_argument);
}
