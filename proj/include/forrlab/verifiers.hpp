#ifndef FORRLAB_VERIFIERS_HPP
#define FORRLAB_VERIFIERS_HPP

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "forrlab/forrelation.hpp"
#include "forrlab/polynomial.hpp"
#include "forrlab/rng.hpp"
#include "forrlab/stochastic.hpp"

#include "json.hpp"

namespace forrlab {

struct EstimateSE {
  double value = 0.0;
  double std_error = 0.0;
};

// One verification outcome with everything needed to recompute the verdict:
// both estimates with standard errors, the trial count, the parameters, and
// any auxiliary numbers (bounds, bias allowances, exit fractions, ...).
struct VerifierReport {
  std::string name;
  EstimateSE lhs;
  EstimateSE rhs;
  std::size_t trials = 0;
  bool pass = false;
  std::map<std::string, double> params;
  std::map<std::string, double> extras;

  nlohmann::json to_json() const;
};

// Multilinear polynomial keyed by explicit variable-index lists. The bitmask
// representation of MultilinearPoly stops at 63 variables; the Dynkin library
// runs over R^N with N up to 256, where the test polynomials are small
// monomial families, so an index list per term is the natural store.
struct IndexTerm {
  std::vector<std::uint32_t> vars;  // sorted, distinct
  double coeff = 0.0;
};

class IndexPoly {
 public:
  IndexPoly(std::size_t dim, std::vector<IndexTerm> terms);
  static IndexPoly monomial(std::size_t dim, std::vector<std::uint32_t> vars,
                            double coeff = 1.0);
  static IndexPoly from_bitmask(const MultilinearPoly& p);

  std::size_t dim() const { return dim_; }
  const std::vector<IndexTerm>& terms() const { return terms_; }
  double constant_term() const;
  double evaluate(std::span<const double> x) const;

 private:
  std::size_t dim_;
  std::vector<IndexTerm> terms_;
};

// Symbolic generator (1/2) <Sigma, Hess p>: one monomial term per unordered
// variable pair inside each term of p, weighted by the covariance entry.
struct GeneratorTerm {
  std::vector<std::uint32_t> vars;
  double weight;
};
std::vector<GeneratorTerm> generator_terms(const IndexPoly& p,
                                           const CovarianceSpec& cov);
std::vector<GeneratorTerm> generator_terms(const MultilinearPoly& p,
                                           const CovarianceSpec& cov);
double evaluate_generator(std::span<const GeneratorTerm> terms,
                          std::span<const double> x);

// Checks E[p(X_tau)] - p(0) = E[ integral_0^tau (1/2) <Sigma, Hess p(X_s)> ds ]
// by Monte Carlo over stopped paths. Each trial simulates one fine path at
// delta/2 and reads the coarse path off its even grid points, so the
// delta-halving bias allowance C*delta = 2 |d(delta) - d(delta/2)| is
// estimated on common noise. Verdict:
//   |LHS - RHS| <= 3 (SE_LHS + SE_RHS) + bias allowance.
VerifierReport dynkin_check(const IndexPoly& p, const CovarianceSpec& cov,
                            const SimParams& params, std::size_t trials,
                            const StreamFamily& streams);
VerifierReport dynkin_check(const MultilinearPoly& p, const CovarianceSpec& cov,
                            const SimParams& params, std::size_t trials,
                            const StreamFamily& streams);

// Same, for several polynomials sharing one set of sampled paths.
VerifierReport dynkin_check_one(const IndexPoly& p, const std::string& name,
                                const CovarianceSpec& cov, const SimParams& params,
                                std::size_t trials, const StreamFamily& streams);
std::vector<VerifierReport> dynkin_check_family(
    const std::vector<std::pair<std::string, IndexPoly>>& polys,
    const CovarianceSpec& cov, const SimParams& params, std::size_t trials,
    const StreamFamily& streams);

// Checks E[f(D_even)] - E[f(D_odd)] = 2 E_S[(-1)^|S| f(D_S)] with common
// random numbers: every trial draws one endpoint per block and evaluates f on
// all 2^k subsets, so the two sides differ only by floating-point ordering.
VerifierReport difference_identity_check(const MultilinearPoly& f, int k,
                                         const CovarianceSpec& cov,
                                         const SimParams& params, std::size_t trials,
                                         const StreamFamily& streams,
                                         SamplerMode mode = SamplerMode::full_path);

// Monomials f = prod_i x^(i)_{a_i} y^(i)_{b_i} (one cross-half pair per
// block) have the closed form
//   E_S[(-1)^|S| f(D_S)] = (-1/2)^k prod_i Sigma_{a_i, n+b_i} E[tau_i].
// E[tau] defaults to epsilon (exits rare in the verification regime); pass a
// measured value otherwise.
double product_monomial_closed_form(int k,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                    const CovarianceSpec& cov, const SimParams& params,
                                    std::optional<double> expected_tau = std::nullopt);
MultilinearPoly product_monomial(int k, std::size_t block_dim,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

// Stratified advantage estimator: per trial, one endpoint per block, f
// evaluated on all 2^k subsets of shared samples. Reports the estimate, the
// level-weight bound (eps * gamma)^k L, and the verdict
//   |estimate| <= bound + 3 SE.
// L is computed by sup_restricted_level_weight at level 2k when not supplied
// (throws capacity_error when that enumeration is out of reach).
VerifierReport advantage_estimate(const MultilinearPoly& f, int k,
                                  const CovarianceSpec& cov, const SimParams& params,
                                  std::size_t trials, const StreamFamily& streams,
                                  std::optional<double> level_bound = std::nullopt,
                                  SamplerMode mode = SamplerMode::full_path);

}  // namespace forrlab

#endif  // FORRLAB_VERIFIERS_HPP
