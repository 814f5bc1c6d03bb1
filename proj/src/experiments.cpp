#include "forrlab/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "forrlab/forrelation.hpp"
#include "forrlab/polynomial.hpp"
#include "forrlab/rng.hpp"
#include "forrlab/stats.hpp"
#include "forrlab/stochastic.hpp"
#include "forrlab/verifiers.hpp"
#include "forrlab/wht.hpp"

namespace forrlab {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void set_workers(int workers) {
#ifdef _OPENMP
  if (workers > 0) omp_set_num_threads(workers);
#else
  (void)workers;
#endif
}

bool row_passes(double estimate, double threshold, const std::string& comparison) {
  if (comparison == "le") return estimate <= threshold;
  if (comparison == "ge") return estimate >= threshold;
  throw std::invalid_argument("ResultRow: comparison must be le or ge");
}

}  // namespace

ResultRow make_row(std::string metric, double estimate, double std_error,
                   double threshold, std::string comparison) {
  ResultRow row;
  row.metric = std::move(metric);
  row.estimate = estimate;
  row.std_error = std_error;
  row.threshold = threshold;
  row.comparison = std::move(comparison);
  row.pass = row_passes(row.estimate, row.threshold, row.comparison);
  return row;
}

std::size_t ExperimentConfig::resolved_N() const {
  if (N != 0) return N;
  if (experiment == "tau-tail") return std::size_t{1} << 10;
  if (experiment == "dynkin") return 256;
  if (experiment == "advantage") return 4;
  return std::size_t{1} << 20;
}

double ExperimentConfig::resolved_epsilon() const {
  if (epsilon_paper_default) return default_epsilon(resolved_N(), k);
  if (epsilon != 0.0) return epsilon;
  if (experiment == "tau-tail") return default_epsilon(resolved_N(), k);
  if (experiment == "advantage") return default_epsilon(resolved_N(), k);
  return 0.01;
}

double ExperimentConfig::resolved_delta() const {
  return delta != 0.0 ? delta : resolved_epsilon() / 64.0;
}

std::size_t ExperimentConfig::resolved_trials() const {
  if (trials != 0) return trials;
  if (experiment == "tau-tail") return tau_trials;
  if (experiment == "dynkin") return verifier_trials;
  if (experiment == "advantage") return advantage_trials;
  return 500;
}

bool ExperimentConfig::endpoint_sampling() const {
  if (sampler == "endpoint") return true;
  if (sampler == "path") return false;
  return resolved_N() >= (std::size_t{1} << 16);
}

void ExperimentConfig::validate() const {
  const std::size_t n = resolved_N();
  if (n < 2 || n % 2 != 0 || !is_power_of_two(n / 2)) {
    throw std::invalid_argument("config: N must be twice a power of two");
  }
  if (k < 1 || k > 63) throw std::invalid_argument("config: k must lie in [1, 63]");
  const double eps = resolved_epsilon();
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw std::invalid_argument("config: epsilon must lie in (0, 1]");
  }
  if (resolved_trials() < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (format != "csv" && format != "json") {
    throw std::invalid_argument("config: format must be csv or json");
  }
  if (sampler != "auto" && sampler != "endpoint" && sampler != "path") {
    throw std::invalid_argument("config: sampler must be auto, endpoint or path");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  return nlohmann::json{{"experiment", experiment},
                        {"N", N},
                        {"k", k},
                        {"epsilon", epsilon},
                        {"epsilon_paper_default", epsilon_paper_default},
                        {"delta", delta},
                        {"trials", trials},
                        {"seed", seed},
                        {"workers", workers},
                        {"output", output},
                        {"format", format},
                        {"sampler", sampler},
                        {"verifier_trials", verifier_trials},
                        {"dynkin_N", dynkin_N},
                        {"tau_N", tau_N},
                        {"tau_trials", tau_trials},
                        {"advantage_trials", advantage_trials},
                        {"advantage_random_k1", advantage_random_k1},
                        {"advantage_random_k2", advantage_random_k2},
                        {"identity_trials", identity_trials},
                        {"thresholds",
                         {{"phi_d1", thr_phi_d1},
                          {"phi_uniform", thr_phi_uniform},
                          {"fk_correct", thr_fk_correct},
                          {"rounding", thr_rounding}}}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  auto get = [&j](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  get("experiment", c.experiment);
  get("N", c.N);
  get("k", c.k);
  if (j.contains("epsilon")) {
    if (j.at("epsilon").is_string()) {
      if (j.at("epsilon").get<std::string>() != "paper") {
        throw std::invalid_argument("config: epsilon must be a number or \"paper\"");
      }
      c.epsilon_paper_default = true;
    } else {
      c.epsilon = j.at("epsilon").get<double>();
    }
  }
  get("epsilon_paper_default", c.epsilon_paper_default);
  get("delta", c.delta);
  get("trials", c.trials);
  get("seed", c.seed);
  get("workers", c.workers);
  get("output", c.output);
  get("format", c.format);
  get("sampler", c.sampler);
  get("verifier_trials", c.verifier_trials);
  get("dynkin_N", c.dynkin_N);
  get("tau_N", c.tau_N);
  get("tau_trials", c.tau_trials);
  get("advantage_trials", c.advantage_trials);
  get("advantage_random_k1", c.advantage_random_k1);
  get("advantage_random_k2", c.advantage_random_k2);
  get("identity_trials", c.identity_trials);
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    auto gt = [&t](const char* key, double& out) {
      if (t.contains(key)) out = t.at(key).get<double>();
    };
    gt("phi_d1", c.thr_phi_d1);
    gt("phi_uniform", c.thr_phi_uniform);
    gt("fk_correct", c.thr_fk_correct);
    gt("rounding", c.thr_rounding);
  }
  return c;
}

bool ResultTable::all_pass() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const ResultRow& r) { return r.pass; });
}

void ResultTable::append(const ResultTable& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

std::string ResultTable::to_csv() const {
  std::ostringstream os;
  os << "# forrlab " << kVersion << "\n";
  os << "# " << provenance.dump() << "\n";
  os << "metric,estimate,std_error,threshold,comparison,verdict\n";
  for (const auto& r : rows) {
    os << r.metric << ',' << fmt17(r.estimate) << ',' << fmt17(r.std_error) << ','
       << fmt17(r.threshold) << ',' << r.comparison << ','
       << (r.pass ? "pass" : "fail") << "\n";
  }
  return os.str();
}

std::string ResultTable::to_json_string() const {
  nlohmann::json j;
  j["tool"] = "forrlab";
  j["version"] = kVersion;
  j["provenance"] = provenance;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"metric", r.metric},
                         {"estimate", r.estimate},
                         {"std_error", r.std_error},
                         {"threshold", r.threshold},
                         {"comparison", r.comparison},
                         {"verdict", r.pass ? "pass" : "fail"}});
  }
  return j.dump(2) + "\n";
}

std::string ResultTable::render(const std::string& format) const {
  return format == "json" ? to_json_string() : to_csv();
}

double parseval_max_rel_error(const TransformFn& transform,
                              std::span<const std::size_t> sizes,
                              int vectors_per_size, std::uint64_t seed) {
  const StreamFamily family = StreamFamily::root(seed, "transform/parseval");
  double worst = 0.0;
  std::uint64_t index = 0;
  for (std::size_t n : sizes) {
    for (int v = 0; v < vectors_per_size; ++v) {
      RandomStream rng = family.stream(index++);
      std::vector<double> data(n);
      for (double& x : data) x = 2.0 * rng.uniform() - 1.0;
      double before = 0.0;
      for (double x : data) before += x * x;
      transform(data);
      double after = 0.0;
      for (double x : data) after += x * x;
      worst = std::max(worst, std::abs(std::sqrt(after) - std::sqrt(before)) /
                                  std::sqrt(before));
    }
  }
  return worst;
}

double transform_vs_naive_max_abs_error(const TransformFn& transform,
                                        std::span<const std::size_t> sizes,
                                        int vectors_per_size, std::uint64_t seed) {
  const StreamFamily family = StreamFamily::root(seed, "transform/naive");
  double worst = 0.0;
  std::uint64_t index = 0;
  for (std::size_t n : sizes) {
    for (int v = 0; v < vectors_per_size; ++v) {
      RandomStream rng = family.stream(index++);
      std::vector<double> data(n);
      for (double& x : data) x = 2.0 * rng.uniform() - 1.0;
      const std::vector<double> expected = reference::hadamard_multiply(data);
      transform(data);
      for (std::size_t i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(data[i] - expected[i]));
      }
    }
  }
  return worst;
}

namespace {

// ---------------------------------------------------------------------------
// Section helpers. Each returns bare rows; the public runners attach
// provenance. Stream domains are derived from fixed section names so the
// row values depend only on (seed, parameters).
// ---------------------------------------------------------------------------

ResultTable section_transform_sanity(std::uint64_t seed) {
  const std::vector<std::size_t> sizes = {2, 8, 64, 1024};
  const TransformFn fn = [](std::span<double> v) { fwht(v); };
  ResultTable t;
  t.rows.push_back(make_row("wht_parseval_max_rel_error",
                            parseval_max_rel_error(fn, sizes, 5, seed), 0.0, 1e-12,
                            "le"));
  t.rows.push_back(make_row("wht_vs_naive_max_abs_error",
                            transform_vs_naive_max_abs_error(fn, sizes, 5, seed), 0.0,
                            1e-10, "le"));
  return t;
}

struct DynkinSectionParams {
  std::size_t hadamard_N = 256;
  double hadamard_epsilon = 0.01;
  double dense_epsilon = 0.02;
  std::size_t trials = 100000;
};

void emit_dynkin_rows(ResultTable& t, const VerifierReport& r,
                      std::optional<double> closed_form) {
  const double combined_se = r.lhs.std_error + r.rhs.std_error;
  t.rows.push_back(make_row(r.name + "_absdiff", std::abs(r.lhs.value - r.rhs.value),
                            combined_se, r.extras.at("tolerance"), "le"));
  if (closed_form) {
    t.rows.push_back(make_row(r.name + "_lhs_vs_closed_form",
                              std::abs(r.lhs.value - *closed_form), r.lhs.std_error,
                              3.0 * combined_se, "le"));
    t.rows.push_back(make_row(r.name + "_rhs_vs_closed_form",
                              std::abs(r.rhs.value - *closed_form), r.rhs.std_error,
                              3.0 * combined_se, "le"));
  }
  // Refinement stability: halving delta must move the estimates by less
  // than the statistical error of the check itself (combined_se), which is
  // the resolution at which the identity is being verified.
  t.rows.push_back(make_row(r.name + "_refine_shift_lhs",
                            std::abs(r.extras.at("refine_shift_lhs")), 0.0,
                            combined_se, "le"));
  t.rows.push_back(make_row(r.name + "_refine_shift_rhs",
                            std::abs(r.extras.at("refine_shift_rhs")), 0.0,
                            combined_se, "le"));
}

ResultTable section_dynkin(const DynkinSectionParams& sp, std::uint64_t seed) {
  ResultTable t;

  // Hadamard-block covariance.
  {
    const std::size_t N = sp.hadamard_N;
    const auto n = static_cast<std::uint32_t>(N / 2);
    const CovarianceSpec cov = CovarianceSpec::hadamard_block(N / 2);
    const SimParams params = SimParams::with_default_delta(sp.hadamard_epsilon);

    std::vector<std::pair<std::string, IndexPoly>> polys;
    polys.emplace_back("hadamard_linear",
                       IndexPoly(N, {{{0}, 1.0}, {{2}, -2.0}}));
    polys.emplace_back("hadamard_bilinear_x1_y1", IndexPoly::monomial(N, {0, n}));
    polys.emplace_back("hadamard_bilinear_x2_y3",
                       IndexPoly::monomial(N, {1, n + 2}));
    polys.emplace_back("hadamard_degree4",
                       IndexPoly::monomial(N, {0, 1, n, n + 1}));

    const StreamFamily fam = StreamFamily::root(seed, "dynkin/hadamard");
    const auto reports = dynkin_check_family(polys, cov, params, sp.trials, fam);
    emit_dynkin_rows(t, reports[0], std::nullopt);
    emit_dynkin_rows(t, reports[1], cov.entry(0, n) * params.epsilon);
    emit_dynkin_rows(t, reports[2], cov.entry(1, n + 2) * params.epsilon);
    emit_dynkin_rows(t, reports[3], std::nullopt);
  }

  // Small dense covariance.
  {
    const std::size_t N = 8;
    std::vector<double> sigma(N * N, 0.0);
    for (std::size_t i = 0; i < N; ++i) sigma[i * N + i] = 1.0;
    sigma[0 * N + 1] = sigma[1 * N + 0] = 0.3;
    sigma[2 * N + 3] = sigma[3 * N + 2] = -0.2;
    const CovarianceSpec cov = CovarianceSpec::dense(N, sigma);
    const SimParams params = SimParams::with_default_delta(sp.dense_epsilon);

    std::vector<std::pair<std::string, IndexPoly>> polys;
    polys.emplace_back("dense_linear", IndexPoly::monomial(N, {4}));
    polys.emplace_back("dense_bilinear_x1_x2", IndexPoly::monomial(N, {0, 1}));
    polys.emplace_back("dense_bilinear_x3_x4", IndexPoly::monomial(N, {2, 3}));
    polys.emplace_back("dense_degree4", IndexPoly::monomial(N, {0, 1, 2, 3}));

    const StreamFamily fam = StreamFamily::root(seed, "dynkin/dense");
    const auto reports = dynkin_check_family(polys, cov, params, sp.trials, fam);
    emit_dynkin_rows(t, reports[0], std::nullopt);
    emit_dynkin_rows(t, reports[1], 0.3 * params.epsilon);
    emit_dynkin_rows(t, reports[2], -0.2 * params.epsilon);
    emit_dynkin_rows(t, reports[3], std::nullopt);
  }
  return t;
}

MultilinearPoly random_boolean_function(int m, RandomStream& rng) {
  std::vector<double> table(std::size_t{1} << m);
  for (double& v : table) v = rng.sign();
  return MultilinearPoly::from_truth_table(table);
}

ResultTable section_difference_identity(std::size_t trials, std::uint64_t seed) {
  ResultTable t;
  const std::size_t N = 4;
  const CovarianceSpec cov = CovarianceSpec::hadamard_block(N / 2);
  for (int k = 1; k <= 3; ++k) {
    const SimParams params = SimParams::with_default_delta(default_epsilon(N, k));
    const std::size_t section_trials = (k == 3) ? trials / 4 : trials;
    const int m = static_cast<int>(N) * k;

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (int i = 0; i < k; ++i) pairs.emplace_back(static_cast<std::size_t>(i % 2), 0);
    const MultilinearPoly mono = product_monomial(k, N, pairs);

    RandomStream fn_rng = StreamFamily::root(seed, "eq1/functions").stream(
        static_cast<std::uint64_t>(k));
    const MultilinearPoly randf = random_boolean_function(m, fn_rng);

    const std::string kk = std::to_string(k);
    const auto r1 = difference_identity_check(
        mono, k, cov, params, section_trials,
        StreamFamily::root(seed, "eq1/monomial/k" + kk));
    const auto r2 = difference_identity_check(
        randf, k, cov, params, section_trials,
        StreamFamily::root(seed, "eq1/random/k" + kk));
    for (const auto* r : {&r1, &r2}) {
      const double tol = r->extras.at("tolerance");
      const std::string label = (r == &r1) ? "monomial" : "random_boolean";
      t.rows.push_back(make_row("difference_identity_k" + kk + "_" + label,
                                std::abs(r->lhs.value - r->rhs.value),
                                r->lhs.std_error + r->rhs.std_error, tol, "le"));
    }
  }
  return t;
}

struct AdvantageSectionParams {
  int random_k1 = 100;
  int random_k2 = 30;
  std::size_t trials = 20000;
};

ResultTable section_advantage(const AdvantageSectionParams& sp, std::uint64_t seed) {
  ResultTable t;
  const std::size_t N = 4;
  const CovarianceSpec cov = CovarianceSpec::hadamard_block(N / 2);

  // k = 1 battery: named functions plus a random sweep, all on 4 variables.
  {
    const int k = 1;
    const SimParams params = SimParams::with_default_delta(default_epsilon(N, k));
    const int m = 4;
    std::vector<std::pair<std::string, MultilinearPoly>> fns;
    fns.emplace_back("constant", MultilinearPoly::constant(m, 1.0));
    for (int i = 0; i < 4; ++i) {
      fns.emplace_back("dictator_" + std::to_string(i + 1),
                       MultilinearPoly::monomial(m, SubsetMask{1} << i));
    }
    for (SubsetMask mask = 0; mask < 16; ++mask) {
      if (std::popcount(mask) >= 2) {
        fns.emplace_back("parity_" + std::to_string(mask),
                         MultilinearPoly::monomial(m, mask));
      }
    }
    {
      std::vector<double> table(16);
      for (std::size_t idx = 0; idx < 16; ++idx) {
        int sum = 0;
        for (int i = 0; i < 3; ++i) sum += (idx >> i & 1u) ? -1 : 1;
        table[idx] = sum > 0 ? 1.0 : -1.0;
      }
      fns.emplace_back("majority3", MultilinearPoly::from_truth_table(table));
    }
    RandomStream fn_rng = StreamFamily::root(seed, "advantage/functions-k1").stream(0);
    for (int i = 0; i < sp.random_k1; ++i) {
      fns.emplace_back("random_" + std::to_string(i + 1),
                       random_boolean_function(m, fn_rng));
    }

    for (std::size_t i = 0; i < fns.size(); ++i) {
      const auto r = advantage_estimate(
          fns[i].second, k, cov, params, sp.trials,
          StreamFamily::root(seed, "advantage/k1/" + fns[i].first));
      t.rows.push_back(make_row("advantage_k1_" + fns[i].first,
                                r.extras.at("abs_estimate"), r.lhs.std_error,
                                r.extras.at("bound") + 3.0 * r.lhs.std_error, "le"));
    }

    // The single cross-half monomial shows the bound is tight within a small
    // constant: |advantage| = gamma E[tau] / 2 >= eps gamma / 4.
    const MultilinearPoly mono = product_monomial(k, N, {{0, 0}});
    const auto r = advantage_estimate(
        mono, k, cov, params, sp.trials,
        StreamFamily::root(seed, "advantage/k1/tightness"));
    t.rows.push_back(make_row("advantage_k1_tightness_monomial",
                              r.extras.at("abs_estimate"), r.lhs.std_error,
                              0.25 * params.epsilon * cov.gamma(), "ge"));
    const double cf = product_monomial_closed_form(k, {{0, 0}}, cov, params,
                                                   r.extras.at("mean_tau"));
    t.rows.push_back(make_row("advantage_k1_monomial_vs_closed_form",
                              std::abs(r.lhs.value - cf), r.lhs.std_error,
                              3.0 * r.lhs.std_error, "le"));
  }

  // k = 2: random sweep on 8 variables plus the product-monomial closed form.
  {
    const int k = 2;
    const SimParams params = SimParams::with_default_delta(default_epsilon(N, k));
    const int m = 8;
    RandomStream fn_rng = StreamFamily::root(seed, "advantage/functions-k2").stream(0);
    for (int i = 0; i < sp.random_k2; ++i) {
      const MultilinearPoly f = random_boolean_function(m, fn_rng);
      const auto r = advantage_estimate(
          f, k, cov, params, sp.trials,
          StreamFamily::root(seed, "advantage/k2/random_" + std::to_string(i + 1)));
      t.rows.push_back(make_row("advantage_k2_random_" + std::to_string(i + 1),
                                r.extras.at("abs_estimate"), r.lhs.std_error,
                                r.extras.at("bound") + 3.0 * r.lhs.std_error, "le"));
    }
    const std::vector<std::pair<std::size_t, std::size_t>> pairs = {{0, 0}, {1, 1}};
    const MultilinearPoly mono = product_monomial(k, N, pairs);
    const auto r = advantage_estimate(
        mono, k, cov, params, 5 * sp.trials,
        StreamFamily::root(seed, "advantage/k2/monomial"));
    t.rows.push_back(make_row("advantage_k2_monomial",
                              r.extras.at("abs_estimate"), r.lhs.std_error,
                              r.extras.at("bound") + 3.0 * r.lhs.std_error, "le"));
    const double cf = product_monomial_closed_form(k, pairs, cov, params,
                                                   r.extras.at("mean_tau"));
    t.rows.push_back(make_row("advantage_k2_monomial_vs_closed_form",
                              std::abs(r.lhs.value - cf), r.lhs.std_error,
                              3.0 * r.lhs.std_error, "le"));
  }
  return t;
}

struct ConcentrationParams {
  std::size_t N;
  int k;
  double epsilon;
  double delta;
  std::size_t trials;
  bool endpoint;
  double thr_phi_d1;
  double thr_phi_uniform;
  double thr_fk_correct;
};

ResultTable section_concentration(const ConcentrationParams& cp, std::uint64_t seed) {
  ResultTable t;
  const std::size_t n = cp.N / 2;
  const CovarianceSpec cov = CovarianceSpec::hadamard_block(n);
  SimParams params = SimParams::with_default_delta(cp.epsilon);
  params.delta = cp.delta;
  const SamplerMode mode =
      cp.endpoint ? SamplerMode::endpoint_only : SamplerMode::full_path;

  // (a) rounded single-block samples: P[phi >= 3 eps / 4].
  {
    const StreamFamily fam = StreamFamily::root(seed, "concentration/d1");
    std::vector<double> indicator(cp.trials), hit(cp.trials);
#pragma omp parallel
    {
      std::vector<double> x(n), y(n), scratch(n);
#pragma omp for schedule(dynamic)
      for (long long i = 0; i < static_cast<long long>(cp.trials); ++i) {
        RandomStream rng = fam.stream(static_cast<std::uint64_t>(i));
        const BlockDraw draw = draw_live_blocks(1, cov, params, rng, mode);
        const CubePoint cube = round_to_cube(draw.values, rng);
        for (std::size_t j = 0; j < n; ++j) {
          x[j] = static_cast<double>(cube.bits[j]);
          y[j] = static_cast<double>(cube.bits[n + j]);
        }
        const double value = phi(x, y, scratch);
        indicator[static_cast<std::size_t>(i)] =
            value >= 0.75 * cp.epsilon ? 1.0 : 0.0;
        hit[static_cast<std::size_t>(i)] = draw.hit_mask ? 1.0 : 0.0;
      }
    }
    const double p_hat = pairwise_sum(indicator) / static_cast<double>(cp.trials);
    const double hit_frac = pairwise_sum(hit) / static_cast<double>(cp.trials);
    t.rows.push_back(make_row("phi_d1_ge_3eps4", p_hat,
                              binomial_std_error(p_hat, cp.trials), cp.thr_phi_d1,
                              "ge"));
    t.rows.push_back(make_row("d1_sampler_hit_fraction", hit_frac,
                              binomial_std_error(hit_frac, cp.trials), 1.0, "le"));
  }

  // (b) uniform sign pairs: P[phi <= eps / 4].
  {
    const StreamFamily fam = StreamFamily::root(seed, "concentration/uniform");
    std::vector<double> indicator(cp.trials);
#pragma omp parallel
    {
      std::vector<double> x(n), y(n), scratch(n);
#pragma omp for schedule(dynamic)
      for (long long i = 0; i < static_cast<long long>(cp.trials); ++i) {
        RandomStream rng = fam.stream(static_cast<std::uint64_t>(i));
        for (std::size_t j = 0; j < n; ++j) x[j] = rng.sign();
        for (std::size_t j = 0; j < n; ++j) y[j] = rng.sign();
        const double value = phi(x, y, scratch);
        indicator[static_cast<std::size_t>(i)] =
            value <= 0.25 * cp.epsilon ? 1.0 : 0.0;
      }
    }
    const double p_hat = pairwise_sum(indicator) / static_cast<double>(cp.trials);
    t.rows.push_back(make_row("phi_uniform_le_eps4", p_hat,
                              binomial_std_error(p_hat, cp.trials), cp.thr_phi_uniform,
                              "ge"));
  }

  // (c)+(d) F^(k) accuracy and undefined-gap frequency on rounded parity
  // distributions.
  for (const Parity parity : {Parity::even, Parity::odd}) {
    const bool even = parity == Parity::even;
    const StreamFamily fam =
        StreamFamily::root(seed, even ? "concentration/even" : "concentration/odd");
    const Trit want = even ? Trit::plus_one : Trit::minus_one;
    std::vector<double> correct(cp.trials), bottom(cp.trials);
#pragma omp parallel
    {
#pragma omp for schedule(dynamic)
      for (long long i = 0; i < static_cast<long long>(cp.trials); ++i) {
        RandomStream rng = fam.stream(static_cast<std::uint64_t>(i));
        const BlockSample sample =
            sample_D_parity(cp.k, parity, cov, params, rng, mode);
        const CubePoint cube = round_to_cube(sample.values, rng);
        const Trit decision = forrelation_k(cube, cp.k, cp.epsilon);
        correct[static_cast<std::size_t>(i)] = decision == want ? 1.0 : 0.0;
        bottom[static_cast<std::size_t>(i)] = decision == Trit::bottom ? 1.0 : 0.0;
      }
    }
    const std::string suffix = even ? "even" : "odd";
    const double p_hat = pairwise_sum(correct) / static_cast<double>(cp.trials);
    const double bot = pairwise_sum(bottom) / static_cast<double>(cp.trials);
    t.rows.push_back(make_row("fk_correct_" + suffix, p_hat,
                              binomial_std_error(p_hat, cp.trials), cp.thr_fk_correct,
                              "ge"));
    t.rows.push_back(make_row("bot_frequency_" + suffix, bot,
                              binomial_std_error(bot, cp.trials), 1.0, "le"));
  }
  return t;
}

struct RoundingParams {
  std::size_t N;
  double epsilon;
  double delta;
  std::size_t trials;
  bool endpoint;
  double threshold;
};

ResultTable section_rounding(const RoundingParams& rp, std::uint64_t seed) {
  ResultTable t;
  const std::size_t n = rp.N / 2;
  const CovarianceSpec cov = CovarianceSpec::hadamard_block(n);
  SimParams params = SimParams::with_default_delta(rp.epsilon);
  params.delta = rp.delta;
  const SamplerMode mode =
      rp.endpoint ? SamplerMode::endpoint_only : SamplerMode::full_path;
  const StreamFamily fam = StreamFamily::root(seed, "rounding");

  std::vector<double> violation(rp.trials), shift(rp.trials);
#pragma omp parallel
  {
    std::vector<double> x(n), y(n), scratch(n);
#pragma omp for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(rp.trials); ++i) {
      RandomStream rng = fam.stream(static_cast<std::uint64_t>(i));
      const BlockDraw draw = draw_live_blocks(1, cov, params, rng, mode);
      const std::span<const double> z(draw.values);
      const double phi_z = phi(z.first(n), z.subspan(n), scratch);
      const CubePoint cube = round_to_cube(draw.values, rng);
      for (std::size_t j = 0; j < n; ++j) {
        x[j] = static_cast<double>(cube.bits[j]);
        y[j] = static_cast<double>(cube.bits[n + j]);
      }
      const double phi_rounded = phi(x, y, scratch);
      const double diff = std::abs(phi_rounded - phi_z);
      violation[static_cast<std::size_t>(i)] = diff > 0.25 * rp.epsilon ? 1.0 : 0.0;
      shift[static_cast<std::size_t>(i)] = diff;
    }
  }
  const double freq = pairwise_sum(violation) / static_cast<double>(rp.trials);
  t.rows.push_back(make_row("rounding_violation_frequency", freq,
                            binomial_std_error(freq, rp.trials), rp.threshold, "le"));
  const SampleStats shift_stats = compute_stats(shift);
  t.rows.push_back(make_row("rounding_mean_abs_shift", shift_stats.mean,
                            shift_stats.std_error, 1.0, "le"));
  return t;
}

struct TauParams {
  std::size_t N;
  int k;
  double epsilon;
  double delta;
  std::size_t trials;
};

ResultTable section_tau_tail(const TauParams& tp, std::uint64_t seed) {
  ResultTable t;
  const CovarianceSpec cov = CovarianceSpec::hadamard_block(tp.N / 2);
  SimParams params = SimParams::with_default_delta(tp.epsilon);
  params.delta = tp.delta;
  const StreamFamily fam = StreamFamily::root(seed, "tau-tail");

  std::vector<double> early(tp.trials), taus(tp.trials);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(tp.trials); ++i) {
    RandomStream rng = fam.stream(static_cast<std::uint64_t>(i));
    const StoppedPath path = sample_path(cov, params, rng);
    early[static_cast<std::size_t>(i)] = path.hit_boundary ? 1.0 : 0.0;
    taus[static_cast<std::size_t>(i)] = path.tau;
  }
  const double freq = pairwise_sum(early) / static_cast<double>(tp.trials);
  // Doob-bound comparison value 2 / N^(7 k^2 - 1); underflows to zero for
  // large k, which is the right reading of "smaller than any double".
  const double kk = static_cast<double>(tp.k);
  const double doob =
      2.0 * std::pow(static_cast<double>(tp.N), -(7.0 * kk * kk - 1.0));
  t.rows.push_back(make_row("tau_early_stop_frequency", freq,
                            binomial_std_error(freq, tp.trials), 0.0, "le"));
  t.rows.push_back(make_row("tau_doob_bound_value", doob, 0.0, 1.0, "le"));
  const SampleStats tau_stats = compute_stats(taus);
  t.rows.push_back(make_row("tau_mean", tau_stats.mean, tau_stats.std_error, 1.0, "le"));
  return t;
}

nlohmann::json provenance_for(const ExperimentConfig& config) {
  // Workers and output path are execution details: results do not depend on
  // them, and the rendered table must be byte-identical across worker counts.
  nlohmann::json echo = config.to_json();
  echo.erase("workers");
  echo.erase("output");
  return nlohmann::json{{"tool", "forrlab"},
                        {"version", kVersion},
                        {"seed", config.seed},
                        {"config", echo}};
}

}  // namespace

ResultTable run_concentration(const ExperimentConfig& config) {
  config.validate();
  set_workers(config.workers);
  ConcentrationParams cp{config.resolved_N(), config.k,      config.resolved_epsilon(),
                         config.resolved_delta(), config.resolved_trials(),
                         config.endpoint_sampling(), config.thr_phi_d1,
                         config.thr_phi_uniform, config.thr_fk_correct};
  ResultTable t = section_concentration(cp, config.seed);
  t.provenance = provenance_for(config);
  return t;
}

ResultTable run_tau_tail(const ExperimentConfig& config) {
  config.validate();
  set_workers(config.workers);
  TauParams tp{config.resolved_N(), config.k, config.resolved_epsilon(),
               config.resolved_delta(), config.resolved_trials()};
  ResultTable t = section_tau_tail(tp, config.seed);
  t.provenance = provenance_for(config);
  return t;
}

ResultTable run_rounding(const ExperimentConfig& config) {
  config.validate();
  set_workers(config.workers);
  RoundingParams rp{config.resolved_N(),      config.resolved_epsilon(),
                    config.resolved_delta(),  config.resolved_trials(),
                    config.endpoint_sampling(), config.thr_rounding};
  ResultTable t = section_rounding(rp, config.seed);
  t.provenance = provenance_for(config);
  return t;
}

ResultTable run_dynkin(const ExperimentConfig& config) {
  config.validate();
  set_workers(config.workers);
  DynkinSectionParams sp;
  sp.hadamard_N = (config.N != 0) ? config.N : config.dynkin_N;
  sp.hadamard_epsilon = (config.epsilon != 0.0) ? config.epsilon : 0.01;
  sp.trials = (config.trials != 0) ? config.trials : config.verifier_trials;
  ResultTable t = section_dynkin(sp, config.seed);
  t.provenance = provenance_for(config);
  return t;
}

ResultTable run_advantage(const ExperimentConfig& config) {
  config.validate();
  set_workers(config.workers);
  AdvantageSectionParams sp;
  sp.random_k1 = config.advantage_random_k1;
  sp.random_k2 = config.advantage_random_k2;
  sp.trials = (config.trials != 0) ? config.trials : config.advantage_trials;
  ResultTable t = section_advantage(sp, config.seed);
  t.provenance = provenance_for(config);
  return t;
}

ResultTable run_difference_identity(const ExperimentConfig& config) {
  config.validate();
  set_workers(config.workers);
  ResultTable t = section_difference_identity(config.identity_trials, config.seed);
  t.provenance = provenance_for(config);
  return t;
}

ResultTable run_suite(const ExperimentConfig& config) {
  config.validate();
  set_workers(config.workers);
  ResultTable t;
  t.provenance = provenance_for(config);

  t.append(section_transform_sanity(config.seed));

  DynkinSectionParams dp;
  dp.hadamard_N = config.dynkin_N;
  dp.trials = config.verifier_trials;
  t.append(section_dynkin(dp, config.seed));

  t.append(section_difference_identity(config.identity_trials, config.seed));

  AdvantageSectionParams ap;
  ap.random_k1 = config.advantage_random_k1;
  ap.random_k2 = config.advantage_random_k2;
  ap.trials = config.advantage_trials;
  t.append(section_advantage(ap, config.seed));

  ConcentrationParams cp{config.resolved_N(), config.k,      config.resolved_epsilon(),
                         config.resolved_delta(), config.resolved_trials(),
                         config.endpoint_sampling(), config.thr_phi_d1,
                         config.thr_phi_uniform, config.thr_fk_correct};
  t.append(section_concentration(cp, config.seed));

  RoundingParams rp{config.resolved_N(),      config.resolved_epsilon(),
                    config.resolved_delta(),  config.resolved_trials(),
                    config.endpoint_sampling(), config.thr_rounding};
  t.append(section_rounding(rp, config.seed));

  TauParams tp{config.tau_N, 1, default_epsilon(config.tau_N, 1),
               default_epsilon(config.tau_N, 1) / 64.0, config.tau_trials};
  t.append(section_tau_tail(tp, config.seed));

  return t;
}

ResultTable run_experiment(const ExperimentConfig& config) {
  if (config.experiment == "concentration") return run_concentration(config);
  if (config.experiment == "tau-tail") return run_tau_tail(config);
  if (config.experiment == "rounding") return run_rounding(config);
  if (config.experiment == "dynkin") return run_dynkin(config);
  if (config.experiment == "advantage") return run_advantage(config);
  if (config.experiment == "identity") return run_difference_identity(config);
  if (config.experiment == "suite") return run_suite(config);
  throw std::invalid_argument("unknown experiment: " + config.experiment);
}

}  // namespace forrlab
