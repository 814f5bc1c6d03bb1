#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "forrlab/polynomial.hpp"
#include "forrlab/stats.hpp"

using namespace forrlab;

namespace {

// Independent O(4^m) Fourier transform: coeff(S) = 2^-m sum_b f(b) chi_S(b).
// Deliberately avoids the butterfly used by from_truth_table.
std::vector<double> brute_force_fourier(std::span<const double> table) {
  const std::size_t size = table.size();
  const int m = std::countr_zero(size);
  std::vector<double> coeffs(size, 0.0);
  for (std::size_t s = 0; s < size; ++s) {
    double acc = 0.0;
    for (std::size_t b = 0; b < size; ++b) {
      const bool neg = std::popcount(s & b) & 1u;
      acc += neg ? -table[b] : table[b];
    }
    coeffs[s] = acc / static_cast<double>(size);
  }
  (void)m;
  return coeffs;
}

std::vector<double> majority3_table() {
  std::vector<double> table(8);
  for (std::size_t idx = 0; idx < 8; ++idx) {
    int sum = 0;
    for (int i = 0; i < 3; ++i) sum += (idx >> i & 1u) ? -1 : 1;
    table[idx] = sum > 0 ? 1.0 : -1.0;
  }
  return table;
}

std::vector<double> random_sign_table(std::size_t size, RandomStream& rng) {
  std::vector<double> t(size);
  for (double& v : t) v = rng.sign();
  return t;
}

MultilinearPoly random_sparse_poly(int m, int max_terms, RandomStream& rng) {
  std::vector<MultilinearPoly::Term> terms;
  const SubsetMask full = (SubsetMask{1} << m) - 1;
  for (int i = 0; i < max_terms; ++i) {
    terms.emplace_back(rng.bits() & full, 2.0 * rng.uniform() - 1.0);
  }
  return MultilinearPoly(m, std::move(terms));
}

}  // namespace

TEST_CASE("evaluate on simple polynomials") {
  const MultilinearPoly p = MultilinearPoly::monomial(2, 0b11);
  CHECK(p.evaluate(std::vector<double>{0.5, -0.5}) == doctest::Approx(-0.25));

  const MultilinearPoly q(3, {{0b000, 0.25}, {0b101, 2.0}});
  CHECK(q.evaluate(std::vector<double>{0.0, 0.0, 0.0}) == doctest::Approx(0.25));

  CHECK_THROWS_AS(p.evaluate(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("from_truth_table on named functions") {
  SUBCASE("constant") {
    const std::vector<double> table(4, 1.0);
    const auto p = MultilinearPoly::from_truth_table(table);
    REQUIRE(p.terms().size() == 1);
    CHECK(p.coefficient(0) == doctest::Approx(1.0));
  }
  SUBCASE("two-bit parity") {
    // Table entry at index b is the parity of the two +-1 inputs.
    std::vector<double> table(4);
    for (std::size_t b = 0; b < 4; ++b) {
      table[b] = (std::popcount(b) & 1u) ? -1.0 : 1.0;
    }
    const auto p = MultilinearPoly::from_truth_table(table);
    REQUIRE(p.terms().size() == 1);
    CHECK(p.coefficient(0b11) == doctest::Approx(1.0));
  }
  SUBCASE("three-bit majority") {
    const auto table = majority3_table();
    const auto p = MultilinearPoly::from_truth_table(table);
    CHECK(p.coefficient(0b001) == doctest::Approx(0.5));
    CHECK(p.coefficient(0b010) == doctest::Approx(0.5));
    CHECK(p.coefficient(0b100) == doctest::Approx(0.5));
    CHECK(p.coefficient(0b111) == doctest::Approx(-0.5));
    CHECK(p.coefficient(0b011) == 0.0);
    CHECK(p.evaluate(std::vector<double>{1.0, 1.0, -1.0}) == doctest::Approx(1.0));

    const auto oracle = brute_force_fourier(table);
    for (std::size_t s = 0; s < oracle.size(); ++s) {
      CHECK(std::abs(p.coefficient(s) - oracle[s]) < 1e-14);
    }
  }
  SUBCASE("wrong table size") {
    const std::vector<double> table(5, 1.0);
    CHECK_THROWS_AS(MultilinearPoly::from_truth_table(table), std::invalid_argument);
  }
}

TEST_CASE("truth-table round trip is exact") {
  RandomStream rng(21);
  for (int m = 1; m <= 10; ++m) {
    const auto table = random_sign_table(std::size_t{1} << m, rng);
    const auto p = MultilinearPoly::from_truth_table(table);
    for (std::size_t b = 0; b < table.size(); ++b) {
      CHECK(std::abs(p.evaluate_cube(b) - table[b]) <= 1e-12);
    }
    if (m <= 6) {
      const auto oracle = brute_force_fourier(table);
      for (std::size_t s = 0; s < oracle.size(); ++s) {
        CHECK(std::abs(p.coefficient(s) - oracle[s]) < 1e-14);
      }
    }
  }
}

TEST_CASE("partial derivatives") {
  const MultilinearPoly p = MultilinearPoly::monomial(2, 0b11);
  const auto d1 = p.partial_derivative(0b01);
  REQUIRE(d1.terms().size() == 1);
  CHECK(d1.coefficient(0b10) == doctest::Approx(1.0));

  const auto d12 = p.partial_derivative(0b11);
  REQUIRE(d12.terms().size() == 1);
  CHECK(d12.coefficient(0) == doctest::Approx(1.0));

  const auto maj = MultilinearPoly::from_truth_table(majority3_table());
  const auto dm = maj.partial_derivative(0b001);
  CHECK(dm.evaluate(std::vector<double>{0.0, 0.0, 0.0}) == doctest::Approx(0.5));
}

TEST_CASE("restriction of polynomials") {
  const MultilinearPoly p = MultilinearPoly::monomial(2, 0b11);
  SUBCASE("fix the first variable") {
    const auto r = p.restricted(Restriction::parse("+*"));
    REQUIRE(r.terms().size() == 1);
    CHECK(r.coefficient(0b10) == doctest::Approx(1.0));
  }
  SUBCASE("identity restriction") {
    const auto r = p.restricted(Restriction::parse("**"));
    CHECK(r.terms() == p.terms());
  }
  SUBCASE("fixing one majority input matches the truth-table oracle") {
    const auto maj = MultilinearPoly::from_truth_table(majority3_table());
    const auto r = maj.restricted(Restriction::parse("+**"));
    for (double x2 : {1.0, -1.0}) {
      for (double x3 : {1.0, -1.0}) {
        const std::vector<double> point = {0.0, x2, x3};
        const double direct = maj.evaluate(std::vector<double>{1.0, x2, x3});
        CHECK(r.evaluate(point) == doctest::Approx(direct).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("level weights") {
  // Two-bit parity.
  const MultilinearPoly parity = MultilinearPoly::monomial(2, 0b11);
  CHECK(parity.level_weight(2) == doctest::Approx(1.0));
  CHECK(parity.level_weight(5) == 0.0);
  CHECK_THROWS_AS(parity.level_weight(-1), std::invalid_argument);

  const auto maj = MultilinearPoly::from_truth_table(majority3_table());
  CHECK(maj.level_weight(1) == doctest::Approx(1.5));
}

TEST_CASE("level weight is invariant under relabeling variables") {
  RandomStream rng(22);
  const auto p = random_sparse_poly(6, 10, rng);
  // Reverse the variable order.
  std::vector<MultilinearPoly::Term> relabeled;
  for (const auto& [mask, c] : p.terms()) {
    SubsetMask flipped = 0;
    for (int i = 0; i < 6; ++i) {
      if (mask >> i & 1u) flipped |= SubsetMask{1} << (5 - i);
    }
    relabeled.emplace_back(flipped, c);
  }
  const MultilinearPoly q(6, std::move(relabeled));
  for (int level = 0; level <= 6; ++level) {
    CHECK(p.level_weight(level) == doctest::Approx(q.level_weight(level)).epsilon(1e-13));
  }
}

TEST_CASE("sup of restricted level weights") {
  const MultilinearPoly parity = MultilinearPoly::monomial(2, 0b11);
  CHECK(parity.sup_restricted_level_weight(2) == doctest::Approx(1.0));
  CHECK(parity.sup_restricted_level_weight(1) == doctest::Approx(1.0));

  const MultilinearPoly constant = MultilinearPoly::constant(3, 0.7);
  CHECK(constant.sup_restricted_level_weight(1) == 0.0);
  CHECK(constant.sup_restricted_level_weight(2) == 0.0);

  RandomStream rng(23);
  for (int rep = 0; rep < 5; ++rep) {
    const auto p = random_sparse_poly(5, 8, rng);
    for (int level = 0; level <= 3; ++level) {
      CHECK(p.sup_restricted_level_weight(level) >= p.level_weight(level) - 1e-12);
    }
  }

  const MultilinearPoly big = MultilinearPoly::constant(13, 1.0);
  CHECK_THROWS_AS(big.sup_restricted_level_weight(2), capacity_error);
}

TEST_CASE("sample_restriction marginals") {
  RandomStream rng(24);
  SUBCASE("boundary value removes one outcome") {
    const std::vector<double> x = {0.5};
    for (int i = 0; i < 5000; ++i) {
      const Restriction r = sample_restriction(x, rng);
      if (!r.is_free(0)) CHECK(r.value(0) == 1.0);
    }
  }
  SUBCASE("centered coordinate has marginals (1/2, 1/4, 1/4)") {
    const std::vector<double> x = {0.0};
    int stars = 0, plus = 0, minus = 0;
    const int draws = 30000;
    for (int i = 0; i < draws; ++i) {
      const Restriction r = sample_restriction(x, rng);
      if (r.is_free(0)) {
        ++stars;
      } else if (r.value(0) > 0) {
        ++plus;
      } else {
        ++minus;
      }
    }
    const double se_half = binomial_std_error(0.5, draws);
    const double se_quarter = binomial_std_error(0.25, draws);
    CHECK(std::abs(stars / double(draws) - 0.5) < 4 * se_half);
    CHECK(std::abs(plus / double(draws) - 0.25) < 4 * se_quarter);
    CHECK(std::abs(minus / double(draws) - 0.25) < 4 * se_quarter);
  }
  SUBCASE("out-of-range coordinates are rejected") {
    const std::vector<double> x = {0.6};
    CHECK_THROWS_AS(sample_restriction(x, rng), std::invalid_argument);
  }
}

TEST_CASE("exact restriction expectation on frozen cases") {
  SUBCASE("single variable") {
    const MultilinearPoly p = MultilinearPoly::monomial(1, 0b1);
    const std::vector<double> x = {0.37};
    CHECK(exact_restriction_expectation(p, 0b1, x) == doctest::Approx(0.5).epsilon(1e-13));
  }
  SUBCASE("product of two variables") {
    const MultilinearPoly p = MultilinearPoly::monomial(2, 0b11);
    const std::vector<double> x = {0.0, 0.3};
    const double v = exact_restriction_expectation(p, 0b01, x);
    CHECK(v == doctest::Approx(0.15).epsilon(1e-13));
    CHECK(2.0 * v == doctest::Approx(0.3).epsilon(1e-13));
  }
  SUBCASE("majority with a two-variable subset") {
    const auto maj = MultilinearPoly::from_truth_table(majority3_table());
    const std::vector<double> x = {0.1, -0.2, 0.4};
    const double v = exact_restriction_expectation(maj, 0b011, x);
    const double direct = maj.partial_derivative(0b011).evaluate(x);
    CHECK(4.0 * v == doctest::Approx(direct).epsilon(1e-12));
  }
  SUBCASE("capacity limit") {
    const MultilinearPoly p = MultilinearPoly::constant(9, 1.0);
    const std::vector<double> x(9, 0.0);
    CHECK_THROWS_AS(exact_restriction_expectation(p, 0, x), capacity_error);
  }
}

TEST_CASE("restriction identity holds for random instances") {
  RandomStream rng(25);
  for (int rep = 0; rep < 25; ++rep) {
    const int m = 2 + static_cast<int>(rng.bits() % 7);  // 2..8
    const auto p = random_sparse_poly(m, 6, rng);
    const SubsetMask full = (SubsetMask{1} << m) - 1;
    const SubsetMask subset = rng.bits() & full;
    std::vector<double> x(static_cast<std::size_t>(m));
    for (double& xi : x) xi = rng.uniform() - 0.5;

    const double expectation = exact_restriction_expectation(p, subset, x);
    const double direct = p.partial_derivative(subset).evaluate(x);
    const double scale = std::pow(2.0, std::popcount(subset));
    CHECK(std::abs(scale * expectation - direct) < 1e-9);
  }
}

TEST_CASE("Monte Carlo restriction sampling tracks the exact expectation") {
  RandomStream rng(26);
  const auto maj = MultilinearPoly::from_truth_table(majority3_table());
  const std::vector<double> x = {0.2, -0.1, 0.05};
  const SubsetMask subset = 0b001;
  const double exact = exact_restriction_expectation(maj, subset, x);

  const int draws = 100000;
  std::vector<double> samples(draws);
  for (int i = 0; i < draws; ++i) {
    const Restriction rho = sample_restriction(x, rng);
    // d_S f_rho(0) is the coefficient of S in the restricted polynomial.
    samples[static_cast<std::size_t>(i)] =
        (rho.fixed & subset) ? 0.0 : maj.restricted(rho).coefficient(subset);
  }
  const SampleStats stats = compute_stats(samples);
  CHECK(std::abs(stats.mean - exact) < 4.0 * stats.std_error);
}

TEST_CASE("json round trip") {
  RandomStream rng(27);
  const auto p = random_sparse_poly(7, 9, rng);
  const auto q = MultilinearPoly::from_json(p.to_json());
  CHECK(q.var_count() == p.var_count());
  CHECK(q.terms() == p.terms());
}

TEST_CASE("dense evaluator matches sparse evaluation") {
  RandomStream rng(28);
  const auto p = random_sparse_poly(8, 12, rng);
  const DenseEvaluator eval(p);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> x(8);
    for (double& xi : x) xi = 2.0 * rng.uniform() - 1.0;
    CHECK(eval.evaluate(x) == doctest::Approx(p.evaluate(x)).epsilon(1e-12));
  }
}
