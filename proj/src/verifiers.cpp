#include "forrlab/verifiers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "forrlab/stats.hpp"

namespace forrlab {

namespace {

EstimateSE to_estimate(const SampleStats& s) { return {s.mean, s.std_error}; }

void fill_common_params(VerifierReport& report, const CovarianceSpec& cov,
                        const SimParams& params, const StreamFamily& streams,
                        std::size_t trials, int k) {
  report.trials = trials;
  report.params["N"] = static_cast<double>(cov.dim());
  report.params["k"] = static_cast<double>(k);
  report.params["epsilon"] = params.epsilon;
  report.params["delta"] = params.delta;
  report.params["gamma"] = cov.gamma();
  report.params["seed"] = static_cast<double>(streams.master);
  report.params["trials"] = static_cast<double>(trials);
}

}  // namespace

nlohmann::json VerifierReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["lhs"] = {{"estimate", lhs.value}, {"std_error", lhs.std_error}};
  j["rhs"] = {{"estimate", rhs.value}, {"std_error", rhs.std_error}};
  j["trials"] = trials;
  j["verdict"] = pass ? "pass" : "fail";
  j["params"] = params;
  j["extras"] = extras;
  return j;
}

IndexPoly::IndexPoly(std::size_t dim, std::vector<IndexTerm> terms) : dim_(dim) {
  for (auto& term : terms) {
    std::sort(term.vars.begin(), term.vars.end());
    if (std::adjacent_find(term.vars.begin(), term.vars.end()) != term.vars.end()) {
      throw std::invalid_argument("IndexPoly: repeated variable in a term");
    }
    if (!term.vars.empty() && term.vars.back() >= dim) {
      throw std::invalid_argument("IndexPoly: variable index outside dimension");
    }
  }
  std::sort(terms.begin(), terms.end(),
            [](const IndexTerm& a, const IndexTerm& b) { return a.vars < b.vars; });
  for (auto& term : terms) {
    if (!terms_.empty() && terms_.back().vars == term.vars) {
      terms_.back().coeff += term.coeff;
    } else {
      terms_.push_back(std::move(term));
    }
  }
  std::erase_if(terms_, [](const IndexTerm& t) { return t.coeff == 0.0; });
}

IndexPoly IndexPoly::monomial(std::size_t dim, std::vector<std::uint32_t> vars,
                              double coeff) {
  return IndexPoly(dim, {IndexTerm{std::move(vars), coeff}});
}

IndexPoly IndexPoly::from_bitmask(const MultilinearPoly& p) {
  std::vector<IndexTerm> terms;
  terms.reserve(p.terms().size());
  for (const auto& [mask, c] : p.terms()) {
    IndexTerm term;
    term.coeff = c;
    for (SubsetMask rest = mask; rest != 0; rest &= rest - 1) {
      term.vars.push_back(static_cast<std::uint32_t>(std::countr_zero(rest)));
    }
    terms.push_back(std::move(term));
  }
  return IndexPoly(static_cast<std::size_t>(p.var_count()), std::move(terms));
}

double IndexPoly::constant_term() const {
  for (const auto& t : terms_) {
    if (t.vars.empty()) return t.coeff;
  }
  return 0.0;
}

double IndexPoly::evaluate(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("IndexPoly::evaluate: dimension mismatch");
  }
  double acc = 0.0;
  for (const auto& t : terms_) {
    double prod = t.coeff;
    for (std::uint32_t v : t.vars) prod *= x[v];
    acc += prod;
  }
  return acc;
}

std::vector<GeneratorTerm> generator_terms(const IndexPoly& p,
                                           const CovarianceSpec& cov) {
  if (p.dim() != cov.dim()) {
    throw std::invalid_argument("generator_terms: polynomial dimension must match Sigma");
  }
  // (1/2) <Sigma, Hess p> = sum_{i<j} Sigma_ij d_ij p; the Hessian diagonal
  // vanishes by multilinearity.
  std::vector<GeneratorTerm> terms;
  for (const auto& term : p.terms()) {
    const auto& vars = term.vars;
    if (vars.size() < 2) continue;
    for (std::size_t a = 0; a < vars.size(); ++a) {
      for (std::size_t b = a + 1; b < vars.size(); ++b) {
        const double sigma = cov.entry(vars[a], vars[b]);
        if (sigma == 0.0) continue;
        GeneratorTerm g;
        g.weight = term.coeff * sigma;
        for (std::size_t c = 0; c < vars.size(); ++c) {
          if (c != a && c != b) g.vars.push_back(vars[c]);
        }
        terms.push_back(std::move(g));
      }
    }
  }
  std::sort(terms.begin(), terms.end(),
            [](const GeneratorTerm& a, const GeneratorTerm& b) { return a.vars < b.vars; });
  std::vector<GeneratorTerm> merged;
  for (auto& t : terms) {
    if (!merged.empty() && merged.back().vars == t.vars) {
      merged.back().weight += t.weight;
    } else {
      merged.push_back(std::move(t));
    }
  }
  std::erase_if(merged, [](const GeneratorTerm& t) { return t.weight == 0.0; });
  return merged;
}

std::vector<GeneratorTerm> generator_terms(const MultilinearPoly& p,
                                           const CovarianceSpec& cov) {
  return generator_terms(IndexPoly::from_bitmask(p), cov);
}

double evaluate_generator(std::span<const GeneratorTerm> terms,
                          std::span<const double> x) {
  double acc = 0.0;
  for (const auto& t : terms) {
    double prod = t.weight;
    for (std::uint32_t v : t.vars) prod *= x[v];
    acc += prod;
  }
  return acc;
}

std::vector<VerifierReport> dynkin_check_family(
    const std::vector<std::pair<std::string, IndexPoly>>& polys,
    const CovarianceSpec& cov, const SimParams& params, std::size_t trials,
    const StreamFamily& streams) {
  params.validate();
  if (trials == 0) throw std::invalid_argument("dynkin_check: trials must be positive");
  const std::size_t P = polys.size();

  std::vector<std::vector<GeneratorTerm>> gens(P);
  std::vector<double> at_zero(P);
  for (std::size_t p = 0; p < P; ++p) {
    gens[p] = generator_terms(polys[p].second, cov);
    at_zero[p] = polys[p].second.constant_term();
  }

  // Per-trial values: [poly][trial], coarse and fine grids from one coupled
  // simulation each.
  std::vector<std::vector<double>> lhs_c(P, std::vector<double>(trials));
  std::vector<std::vector<double>> rhs_c(P, std::vector<double>(trials));
  std::vector<std::vector<double>> lhs_f(P, std::vector<double>(trials));
  std::vector<std::vector<double>> rhs_f(P, std::vector<double>(trials));
  std::vector<double> taus(trials);
  std::vector<char> hits(trials);

#pragma omp parallel for schedule(dynamic, 8)
  for (long long t = 0; t < static_cast<long long>(trials); ++t) {
    RandomStream rng = streams.stream(static_cast<std::uint64_t>(t));
    const PathPair pair = sample_path_pair(cov, params, rng);
    taus[static_cast<std::size_t>(t)] = pair.coarse.tau;
    hits[static_cast<std::size_t>(t)] = pair.coarse.hit_boundary ? 1 : 0;
    for (std::size_t p = 0; p < P; ++p) {
      const auto& poly = polys[p].second;
      lhs_c[p][static_cast<std::size_t>(t)] =
          poly.evaluate(pair.coarse.endpoint()) - at_zero[p];
      lhs_f[p][static_cast<std::size_t>(t)] =
          poly.evaluate(pair.fine.endpoint()) - at_zero[p];
      rhs_c[p][static_cast<std::size_t>(t)] = integrate_along_path(
          pair.coarse, [&](std::span<const double> x) { return evaluate_generator(gens[p], x); });
      rhs_f[p][static_cast<std::size_t>(t)] = integrate_along_path(
          pair.fine, [&](std::span<const double> x) { return evaluate_generator(gens[p], x); });
    }
  }

  double exit_count = 0.0;
  for (char h : hits) exit_count += h;
  const SampleStats tau_stats = compute_stats(taus);

  std::vector<VerifierReport> reports;
  reports.reserve(P);
  for (std::size_t p = 0; p < P; ++p) {
    const SampleStats sl = compute_stats(lhs_c[p]);
    const SampleStats sr = compute_stats(rhs_c[p]);
    const SampleStats sl_f = compute_stats(lhs_f[p]);
    const SampleStats sr_f = compute_stats(rhs_f[p]);

    const double diff_coarse = sl.mean - sr.mean;
    const double diff_fine = sl_f.mean - sr_f.mean;
    const double bias_allowance = 2.0 * std::abs(diff_coarse - diff_fine);
    const double tol = 3.0 * (sl.std_error + sr.std_error) + bias_allowance;

    VerifierReport report;
    report.name = "dynkin:" + polys[p].first;
    report.lhs = to_estimate(sl);
    report.rhs = to_estimate(sr);
    report.pass = std::abs(diff_coarse) <= tol;
    fill_common_params(report, cov, params, streams, trials, 1);
    report.extras["diff"] = diff_coarse;
    report.extras["tolerance"] = tol;
    report.extras["bias_allowance"] = bias_allowance;
    report.extras["lhs_fine"] = sl_f.mean;
    report.extras["rhs_fine"] = sr_f.mean;
    report.extras["lhs_fine_se"] = sl_f.std_error;
    report.extras["rhs_fine_se"] = sr_f.std_error;
    report.extras["refine_shift_lhs"] = sl_f.mean - sl.mean;
    report.extras["refine_shift_rhs"] = sr_f.mean - sr.mean;
    report.extras["mean_tau"] = tau_stats.mean;
    report.extras["exit_fraction"] = exit_count / static_cast<double>(trials);
    reports.push_back(std::move(report));
  }
  return reports;
}

VerifierReport dynkin_check_one(const IndexPoly& p, const std::string& name,
                                const CovarianceSpec& cov, const SimParams& params,
                                std::size_t trials, const StreamFamily& streams) {
  return dynkin_check_family({{name, p}}, cov, params, trials, streams).front();
}

VerifierReport dynkin_check(const IndexPoly& p, const CovarianceSpec& cov,
                            const SimParams& params, std::size_t trials,
                            const StreamFamily& streams) {
  return dynkin_check_one(p, "poly", cov, params, trials, streams);
}

VerifierReport dynkin_check(const MultilinearPoly& p, const CovarianceSpec& cov,
                            const SimParams& params, std::size_t trials,
                            const StreamFamily& streams) {
  return dynkin_check(IndexPoly::from_bitmask(p), cov, params, trials, streams);
}

VerifierReport difference_identity_check(const MultilinearPoly& f, int k,
                                         const CovarianceSpec& cov,
                                         const SimParams& params, std::size_t trials,
                                         const StreamFamily& streams, SamplerMode mode) {
  params.validate();
  if (k < 1 || k > 20) throw std::invalid_argument("difference_identity_check: bad k");
  const std::size_t N = cov.dim();
  const std::size_t m = static_cast<std::size_t>(k) * N;
  if (static_cast<std::size_t>(f.var_count()) != m) {
    throw std::invalid_argument("difference_identity_check: f must have k*N variables");
  }
  const std::size_t subsets = std::size_t{1} << k;
  const DenseEvaluator eval(f);

  std::vector<double> lhs(trials), rhs(trials);

#pragma omp parallel
  {
    std::vector<double> point(m);
    std::vector<double> scratch(std::size_t{1} << m);
    std::vector<double> values(subsets);
#pragma omp for schedule(dynamic, 8)
    for (long long t = 0; t < static_cast<long long>(trials); ++t) {
      RandomStream rng = streams.stream(static_cast<std::uint64_t>(t));
      const BlockDraw draw = draw_live_blocks(k, cov, params, rng, mode);
      for (std::size_t s = 0; s < subsets; ++s) {
        for (int b = 0; b < k; ++b) {
          double* dst = point.data() + static_cast<std::size_t>(b) * N;
          if (s >> b & 1u) {
            const double* src = draw.values.data() + static_cast<std::size_t>(b) * N;
            std::copy(src, src + N, dst);
          } else {
            std::fill(dst, dst + N, 0.0);
          }
        }
        values[s] = eval.evaluate(point, scratch);
      }
      double even = 0.0, odd = 0.0, signed_sum = 0.0;
      for (std::size_t s = 0; s < subsets; ++s) {
        const bool is_odd = std::popcount(s) & 1;
        (is_odd ? odd : even) += values[s];
        signed_sum += is_odd ? -values[s] : values[s];
      }
      const double half = static_cast<double>(subsets / 2);
      lhs[static_cast<std::size_t>(t)] = even / half - odd / half;
      rhs[static_cast<std::size_t>(t)] =
          2.0 * signed_sum / static_cast<double>(subsets);
    }
  }

  const SampleStats sl = compute_stats(lhs);
  const SampleStats sr = compute_stats(rhs);
  VerifierReport report;
  report.name = "difference_identity";
  report.lhs = to_estimate(sl);
  report.rhs = to_estimate(sr);
  report.pass = std::abs(sl.mean - sr.mean) <= 3.0 * (sl.std_error + sr.std_error);
  fill_common_params(report, cov, params, streams, trials, k);
  report.extras["diff"] = sl.mean - sr.mean;
  report.extras["tolerance"] = 3.0 * (sl.std_error + sr.std_error);
  return report;
}

MultilinearPoly product_monomial(int k, std::size_t block_dim,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  if (static_cast<int>(pairs.size()) != k) {
    throw std::invalid_argument("product_monomial: one (a, b) pair per block");
  }
  const std::size_t n = block_dim / 2;
  SubsetMask mask = 0;
  for (int i = 0; i < k; ++i) {
    const auto [a, b] = pairs[static_cast<std::size_t>(i)];
    if (a >= n || b >= n) throw std::invalid_argument("product_monomial: index outside half-block");
    mask |= SubsetMask{1} << (static_cast<std::size_t>(i) * block_dim + a);
    mask |= SubsetMask{1} << (static_cast<std::size_t>(i) * block_dim + n + b);
  }
  return MultilinearPoly::monomial(static_cast<int>(static_cast<std::size_t>(k) * block_dim),
                                   mask);
}

double product_monomial_closed_form(int k,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                    const CovarianceSpec& cov, const SimParams& params,
                                    std::optional<double> expected_tau) {
  if (static_cast<int>(pairs.size()) != k) {
    throw std::invalid_argument("product_monomial_closed_form: one pair per block");
  }
  const std::size_t n = cov.dim() / 2;
  const double tau = expected_tau.value_or(params.epsilon);
  double value = 1.0;
  for (const auto& [a, b] : pairs) {
    if (a >= n || b >= n) {
      throw std::invalid_argument("product_monomial_closed_form: index outside half-block");
    }
    value *= cov.entry(a, n + b) * tau;
  }
  return value * std::pow(-0.5, k);
}

VerifierReport advantage_estimate(const MultilinearPoly& f, int k,
                                  const CovarianceSpec& cov, const SimParams& params,
                                  std::size_t trials, const StreamFamily& streams,
                                  std::optional<double> level_bound, SamplerMode mode) {
  params.validate();
  if (k < 1 || k > 20) throw std::invalid_argument("advantage_estimate: bad k");
  const std::size_t N = cov.dim();
  const std::size_t m = static_cast<std::size_t>(k) * N;
  if (static_cast<std::size_t>(f.var_count()) != m) {
    throw std::invalid_argument("advantage_estimate: f must have k*N variables");
  }

  double L;
  if (level_bound) {
    L = *level_bound;
  } else if (f.var_count() <= 12) {
    L = f.sup_restricted_level_weight(2 * k);
  } else {
    throw capacity_error(
        "advantage_estimate: level bound must be supplied for more than 12 variables");
  }

  const std::size_t subsets = std::size_t{1} << k;
  const DenseEvaluator eval(f);
  std::vector<double> advantage(trials);
  std::vector<double> mean_taus(trials);

#pragma omp parallel
  {
    std::vector<double> point(m);
    std::vector<double> scratch(std::size_t{1} << m);
#pragma omp for schedule(dynamic, 8)
    for (long long t = 0; t < static_cast<long long>(trials); ++t) {
      RandomStream rng = streams.stream(static_cast<std::uint64_t>(t));
      const BlockDraw draw = draw_live_blocks(k, cov, params, rng, mode);
      double signed_sum = 0.0;
      for (std::size_t s = 0; s < subsets; ++s) {
        for (int b = 0; b < k; ++b) {
          double* dst = point.data() + static_cast<std::size_t>(b) * N;
          if (s >> b & 1u) {
            const double* src = draw.values.data() + static_cast<std::size_t>(b) * N;
            std::copy(src, src + N, dst);
          } else {
            std::fill(dst, dst + N, 0.0);
          }
        }
        const double v = eval.evaluate(point, scratch);
        signed_sum += (std::popcount(s) & 1) ? -v : v;
      }
      advantage[static_cast<std::size_t>(t)] = signed_sum / static_cast<double>(subsets);
      double tau_acc = 0.0;
      for (double tau : draw.taus) tau_acc += tau;
      mean_taus[static_cast<std::size_t>(t)] = tau_acc / static_cast<double>(k);
    }
  }

  const SampleStats stats = compute_stats(advantage);
  const double bound = std::pow(params.epsilon * cov.gamma(), k) * L;

  VerifierReport report;
  report.name = "advantage_bound";
  report.lhs = to_estimate(stats);
  report.rhs = {bound, 0.0};
  report.pass = std::abs(stats.mean) <= bound + 3.0 * stats.std_error;
  fill_common_params(report, cov, params, streams, trials, k);
  report.extras["level_bound_L"] = L;
  report.extras["bound"] = bound;
  report.extras["abs_estimate"] = std::abs(stats.mean);
  report.extras["mean_tau"] = compute_stats(mean_taus).mean;
  return report;
}

}  // namespace forrlab
