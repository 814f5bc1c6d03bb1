#ifndef FORRLAB_EXPERIMENTS_HPP
#define FORRLAB_EXPERIMENTS_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "forrlab/common.hpp"

#include "json.hpp"

namespace forrlab {

// Seeded, reproducible experiment configuration. Zero-valued size fields
// mean "use the experiment's default"; epsilon may be pinned to the formula
// 1/(28 k^2 ln N) by setting epsilon_paper_default (CLI: --epsilon paper).
struct ExperimentConfig {
  std::string experiment = "suite";

  std::size_t N = 0;      // full dimension, twice a power of two
  int k = 1;
  double epsilon = 0.0;   // 0 -> experiment default
  bool epsilon_paper_default = false;
  double delta = 0.0;     // 0 -> epsilon / 64
  std::size_t trials = 0; // 0 -> experiment default
  std::uint64_t seed = 42;
  int workers = 0;        // 0 -> leave the OpenMP default
  std::string output = "-";
  std::string format = "csv";
  std::string sampler = "auto";  // auto | endpoint | path

  // Suite section sizes.
  std::size_t verifier_trials = 100000;
  std::size_t dynkin_N = 256;
  std::size_t tau_N = 1024;
  std::size_t tau_trials = 1000;
  std::size_t advantage_trials = 20000;
  int advantage_random_k1 = 100;
  int advantage_random_k2 = 30;
  std::size_t identity_trials = 20000;

  // Verdict thresholds.
  double thr_phi_d1 = 0.9;
  double thr_phi_uniform = 0.9;
  double thr_fk_correct = 0.8;
  double thr_rounding = 0.05;

  std::size_t resolved_N() const;
  double resolved_epsilon() const;
  double resolved_delta() const;
  std::size_t resolved_trials() const;
  bool endpoint_sampling() const;  // auto: endpoint for N >= 2^16

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  void validate() const;
};

struct ResultRow {
  std::string metric;
  double estimate = 0.0;
  double std_error = 0.0;
  double threshold = 0.0;
  std::string comparison;  // "le" or "ge"
  bool pass = false;
};

ResultRow make_row(std::string metric, double estimate, double std_error,
                   double threshold, std::string comparison);

// Rows plus a provenance header; renders byte-identically for a given
// (config, seed) regardless of worker count.
struct ResultTable {
  nlohmann::json provenance;
  std::vector<ResultRow> rows;

  bool all_pass() const;
  void append(const ResultTable& other);
  std::string to_csv() const;
  std::string to_json_string() const;
  std::string render(const std::string& format) const;
};

// phi concentration at scale: P[phi >= 3 eps/4] on rounded single-block
// samples, P[phi <= eps/4] on uniform sign pairs, F^(k) accuracy on the
// rounded even/odd block distributions, and the undefined-gap frequency.
ResultTable run_concentration(const ExperimentConfig& config);

// Early-stopping frequency of full paths against the Doob-bound value
// 2 / N^(7 k^2 - 1).
ResultTable run_tau_tail(const ExperimentConfig& config);

// Frequency of |phi(z~) - phi(z)| > eps/4 under fresh roundings of
// single-block samples.
ResultTable run_rounding(const ExperimentConfig& config);

// Dynkin identity over the test-polynomial library (shared paths per
// covariance), with closed-form and refinement rows for the bilinear family.
ResultTable run_dynkin(const ExperimentConfig& config);

// Level-weight advantage bound sweep plus the monomial tightness case.
ResultTable run_advantage(const ExperimentConfig& config);

// Difference-identity checks for k in {1, 2, 3}.
ResultTable run_difference_identity(const ExperimentConfig& config);

// Everything above plus transform sanity rows, at the configured sizes.
ResultTable run_suite(const ExperimentConfig& config);

ResultTable run_experiment(const ExperimentConfig& config);

// Transform sanity measurements. The transform argument exists so tests can
// inject a broken kernel and watch the rows fail.
using TransformFn = std::function<void(std::span<double>)>;
double parseval_max_rel_error(const TransformFn& transform,
                              std::span<const std::size_t> sizes,
                              int vectors_per_size, std::uint64_t seed);
double transform_vs_naive_max_abs_error(const TransformFn& transform,
                                        std::span<const std::size_t> sizes,
                                        int vectors_per_size, std::uint64_t seed);

}  // namespace forrlab

#endif  // FORRLAB_EXPERIMENTS_HPP
