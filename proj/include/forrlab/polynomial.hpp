#ifndef FORRLAB_POLYNOMIAL_HPP
#define FORRLAB_POLYNOMIAL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forrlab/common.hpp"
#include "forrlab/rng.hpp"

#include "json.hpp"

namespace forrlab {

using SubsetMask = std::uint64_t;

// A partial assignment in {-1, +1, *}^m. Variables are fixed if their bit is
// set in `fixed`; fixed variables take -1 when the bit is also set in
// `negative`, else +1. Free variables are the rest.
struct Restriction {
  int m = 0;
  SubsetMask fixed = 0;
  SubsetMask negative = 0;  // subset of fixed

  SubsetMask free_mask() const {
    return ~fixed & ((m >= 64) ? ~SubsetMask{0} : ((SubsetMask{1} << m) - 1));
  }
  bool is_free(int i) const { return !(fixed >> i & 1u); }
  double value(int i) const { return (negative >> i & 1u) ? -1.0 : 1.0; }

  // "+-*" notation, one character per variable, position 0 first.
  static Restriction parse(std::string_view pattern);
  std::string to_string() const;
};

// A multilinear polynomial over m variables, stored as a sparse table of
// Fourier coefficients: f(x) = sum_S coeff(S) * prod_{i in S} x_i.
// Immutable after construction; masks are kept sorted and zero coefficients
// are dropped.
class MultilinearPoly {
 public:
  using Term = std::pair<SubsetMask, double>;

  MultilinearPoly() = default;
  MultilinearPoly(int m, std::vector<Term> terms);

  static MultilinearPoly zero(int m) { return MultilinearPoly(m, {}); }
  static MultilinearPoly constant(int m, double c) {
    return MultilinearPoly(m, {{0, c}});
  }
  static MultilinearPoly monomial(int m, SubsetMask vars, double c = 1.0) {
    return MultilinearPoly(m, {{vars, c}});
  }

  // Exact Fourier expansion of a function tabulated on the cube. Index bit i
  // set means variable i takes the value -1 (so index 0 is the all-plus-one
  // point). The table length fixes m; m <= 20.
  static MultilinearPoly from_truth_table(std::span<const double> values);

  int var_count() const { return m_; }
  const std::vector<Term>& terms() const { return terms_; }
  double coefficient(SubsetMask subset) const;
  int degree() const;

  double evaluate(std::span<const double> x) const;
  // Evaluate at a cube point given as the set of variables taking -1.
  double evaluate_cube(SubsetMask negatives) const;

  // d_S f: keeps terms with subset containing S, coefficient moved to T \ S.
  // evaluate(partial_derivative(S), 0) is the Fourier coefficient at S.
  MultilinearPoly partial_derivative(SubsetMask subset) const;

  // f_rho over the free variables of rho. The result stays over the same m
  // variables; all its subsets avoid the fixed positions.
  MultilinearPoly restricted(const Restriction& rho) const;

  // sum_{|S| = level} |coeff(S)|
  double level_weight(int level) const;

  // max over all 3^m restrictions of level_weight(restricted(rho), level).
  // Throws capacity_error for m > 12; supply the bound externally instead.
  double sup_restricted_level_weight(int level) const;

  // Dense coefficient cube of length 2^m (m <= 24), indexed by subset mask.
  std::vector<double> dense_table() const;

  nlohmann::json to_json() const;
  static MultilinearPoly from_json(const nlohmann::json& j);

 private:
  int m_ = 0;
  std::vector<Term> terms_;  // sorted by mask, no zeros
};

// One draw from the restriction distribution R_x: each coordinate is
// independently * with probability 1/2, +1 with probability (1+2x_i)/4 and
// -1 with probability (1-2x_i)/4. Requires |x_i| <= 1/2. With this law,
// d_S f(x) = 2^|S| E[d_S f_rho(0)] holds exactly; the identity is enforced
// by test rather than assumed.
Restriction sample_restriction(std::span<const double> x, RandomStream& rng);

// E_{rho ~ R_x}[d_S f_rho(0)] by exact enumeration of the 3^m support with
// exact probabilities. Throws capacity_error for m > 8.
double exact_restriction_expectation(const MultilinearPoly& p, SubsetMask subset,
                                     std::span<const double> x);

// Dense-cube evaluator for hot loops: one O(2^m) fold per point instead of a
// sweep over sparse terms. m <= 24.
class DenseEvaluator {
 public:
  explicit DenseEvaluator(const MultilinearPoly& p);
  int var_count() const { return m_; }
  double evaluate(std::span<const double> x, std::span<double> scratch) const;
  double evaluate(std::span<const double> x) const;

 private:
  int m_;
  std::vector<double> table_;
};

}  // namespace forrlab

#endif  // FORRLAB_POLYNOMIAL_HPP
