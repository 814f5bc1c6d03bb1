#include "forrlab/polynomial.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "forrlab/wht.hpp"

namespace forrlab {

namespace {

SubsetMask full_mask(int m) {
  return (m >= 64) ? ~SubsetMask{0} : ((SubsetMask{1} << m) - 1);
}

void check_var_count(int m) {
  if (m < 0 || m > 63) {
    throw std::invalid_argument("MultilinearPoly: variable count must be in [0, 63]");
  }
}

}  // namespace

Restriction Restriction::parse(std::string_view pattern) {
  Restriction r;
  r.m = static_cast<int>(pattern.size());
  if (r.m > 63) throw std::invalid_argument("Restriction: too many variables");
  for (int i = 0; i < r.m; ++i) {
    switch (pattern[static_cast<std::size_t>(i)]) {
      case '*':
        break;
      case '+':
        r.fixed |= SubsetMask{1} << i;
        break;
      case '-':
        r.fixed |= SubsetMask{1} << i;
        r.negative |= SubsetMask{1} << i;
        break;
      default:
        throw std::invalid_argument("Restriction: pattern characters must be one of +-*");
    }
  }
  return r;
}

std::string Restriction::to_string() const {
  std::string s(static_cast<std::size_t>(m), '*');
  for (int i = 0; i < m; ++i) {
    if (fixed >> i & 1u) s[static_cast<std::size_t>(i)] = (negative >> i & 1u) ? '-' : '+';
  }
  return s;
}

MultilinearPoly::MultilinearPoly(int m, std::vector<Term> terms) : m_(m) {
  check_var_count(m);
  const SubsetMask full = full_mask(m);
  for (const auto& [mask, c] : terms) {
    if (mask & ~full) {
      throw std::invalid_argument("MultilinearPoly: subset mask outside variable range");
    }
    if (!std::isfinite(c)) {
      throw std::invalid_argument("MultilinearPoly: coefficients must be finite");
    }
  }
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.first < b.first; });
  terms_.reserve(terms.size());
  for (const auto& t : terms) {
    if (!terms_.empty() && terms_.back().first == t.first) {
      terms_.back().second += t.second;
    } else {
      terms_.push_back(t);
    }
  }
  std::erase_if(terms_, [](const Term& t) { return t.second == 0.0; });
}

MultilinearPoly MultilinearPoly::from_truth_table(std::span<const double> values) {
  const std::size_t size = values.size();
  if (!is_power_of_two(size)) {
    throw std::invalid_argument("from_truth_table: table length must be a power of two");
  }
  const int m = log2_exact(size);
  if (m > 20) {
    throw std::invalid_argument("from_truth_table: at most 20 variables");
  }
  // coeff(S) = 2^-m sum_b values[b] (-1)^{popcount(S & b)}, which is the
  // unnormalized transform of the table divided by 2^m. Exact on +-1 tables.
  std::vector<double> table(values.begin(), values.end());
  fwht_unnormalized(table);
  const double scale = 1.0 / static_cast<double>(size);
  std::vector<Term> terms;
  for (std::size_t s = 0; s < size; ++s) {
    if (table[s] != 0.0) terms.emplace_back(static_cast<SubsetMask>(s), table[s] * scale);
  }
  return MultilinearPoly(m, std::move(terms));
}

double MultilinearPoly::coefficient(SubsetMask subset) const {
  auto it = std::lower_bound(
      terms_.begin(), terms_.end(), subset,
      [](const Term& t, SubsetMask mask) { return t.first < mask; });
  if (it != terms_.end() && it->first == subset) return it->second;
  return 0.0;
}

int MultilinearPoly::degree() const {
  int d = 0;
  for (const auto& [mask, c] : terms_) d = std::max(d, std::popcount(mask));
  return d;
}

double MultilinearPoly::evaluate(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != m_) {
    throw std::invalid_argument("evaluate: point dimension does not match variable count");
  }
  double acc = 0.0;
  for (const auto& [mask, c] : terms_) {
    double prod = c;
    for (SubsetMask rest = mask; rest != 0; rest &= rest - 1) {
      prod *= x[static_cast<std::size_t>(std::countr_zero(rest))];
    }
    acc += prod;
  }
  return acc;
}

double MultilinearPoly::evaluate_cube(SubsetMask negatives) const {
  double acc = 0.0;
  for (const auto& [mask, c] : terms_) {
    acc += (std::popcount(mask & negatives) & 1) ? -c : c;
  }
  return acc;
}

MultilinearPoly MultilinearPoly::partial_derivative(SubsetMask subset) const {
  if (subset & ~full_mask(m_)) {
    throw std::invalid_argument("partial_derivative: subset outside variable range");
  }
  std::vector<Term> terms;
  for (const auto& [mask, c] : terms_) {
    if ((mask & subset) == subset) terms.emplace_back(mask & ~subset, c);
  }
  return MultilinearPoly(m_, std::move(terms));
}

MultilinearPoly MultilinearPoly::restricted(const Restriction& rho) const {
  if (rho.m != m_) {
    throw std::invalid_argument("restricted: restriction length does not match");
  }
  std::vector<Term> terms;
  terms.reserve(terms_.size());
  for (const auto& [mask, c] : terms_) {
    const SubsetMask fixed_part = mask & rho.fixed;
    const bool neg = std::popcount(fixed_part & rho.negative) & 1;
    terms.emplace_back(mask & ~rho.fixed, neg ? -c : c);
  }
  return MultilinearPoly(m_, std::move(terms));
}

double MultilinearPoly::level_weight(int level) const {
  if (level < 0) throw std::invalid_argument("level_weight: level must be nonnegative");
  double acc = 0.0;
  for (const auto& [mask, c] : terms_) {
    if (std::popcount(mask) == level) acc += std::abs(c);
  }
  return acc;
}

double MultilinearPoly::sup_restricted_level_weight(int level) const {
  if (level < 0) throw std::invalid_argument("level must be nonnegative");
  if (m_ > 12) {
    throw capacity_error("sup_restricted_level_weight: 3^m enumeration limited to m <= 12");
  }
  const SubsetMask full = full_mask(m_);
  double best = 0.0;
  for (SubsetMask fixed = 0;; fixed = (fixed + 1) & full) {
    // Enumerate sign choices as submasks of `fixed` (including 0).
    SubsetMask neg = fixed;
    while (true) {
      Restriction rho{m_, fixed, neg};
      best = std::max(best, restricted(rho).level_weight(level));
      if (neg == 0) break;
      neg = (neg - 1) & fixed;
    }
    if (fixed == full) break;
  }
  return best;
}

std::vector<double> MultilinearPoly::dense_table() const {
  if (m_ > 24) throw capacity_error("dense_table: limited to m <= 24");
  std::vector<double> table(std::size_t{1} << m_, 0.0);
  for (const auto& [mask, c] : terms_) table[mask] = c;
  return table;
}

nlohmann::json MultilinearPoly::to_json() const {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& [mask, c] : terms_) {
    coeffs.push_back(nlohmann::json::array({mask, c}));
  }
  return nlohmann::json{{"m", m_}, {"coeffs", coeffs}};
}

MultilinearPoly MultilinearPoly::from_json(const nlohmann::json& j) {
  const int m = j.at("m").get<int>();
  std::vector<Term> terms;
  for (const auto& entry : j.at("coeffs")) {
    terms.emplace_back(entry.at(0).get<SubsetMask>(), entry.at(1).get<double>());
  }
  return MultilinearPoly(m, std::move(terms));
}

Restriction sample_restriction(std::span<const double> x, RandomStream& rng) {
  const int m = static_cast<int>(x.size());
  if (m > 63) throw std::invalid_argument("sample_restriction: too many variables");
  Restriction r;
  r.m = m;
  for (int i = 0; i < m; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    if (!(std::abs(xi) <= 0.5)) {
      throw std::invalid_argument("sample_restriction: coordinates must lie in [-1/2, 1/2]");
    }
    if (rng.uniform() < 0.5) continue;  // free
    r.fixed |= SubsetMask{1} << i;
    // P[+1 | fixed] = (1 + 2 x_i) / 2.
    if (!(rng.uniform() < 0.5 * (1.0 + 2.0 * xi))) {
      r.negative |= SubsetMask{1} << i;
    }
  }
  return r;
}

double exact_restriction_expectation(const MultilinearPoly& p, SubsetMask subset,
                                     std::span<const double> x) {
  const int m = p.var_count();
  if (static_cast<int>(x.size()) != m) {
    throw std::invalid_argument("exact_restriction_expectation: dimension mismatch");
  }
  if (m > 8) {
    throw capacity_error("exact_restriction_expectation: 3^m enumeration limited to m <= 8");
  }
  for (double xi : x) {
    if (!(std::abs(xi) <= 0.5)) {
      throw std::invalid_argument("exact_restriction_expectation: x outside the box");
    }
  }
  const SubsetMask full = (m >= 64) ? ~SubsetMask{0} : ((SubsetMask{1} << m) - 1);
  if (subset & ~full) {
    throw std::invalid_argument("exact_restriction_expectation: subset outside range");
  }

  double total = 0.0;
  for (SubsetMask fixed = 0;; fixed = (fixed + 1) & full) {
    // d_S f_rho vanishes unless every variable of S stays free.
    if ((fixed & subset) == 0) {
      const double p_free =
          std::pow(0.5, m - std::popcount(fixed));
      SubsetMask neg = fixed;
      while (true) {
        double prob = p_free;
        for (SubsetMask rest = fixed; rest != 0; rest &= rest - 1) {
          const int i = std::countr_zero(rest);
          const double xi = x[static_cast<std::size_t>(i)];
          prob *= (neg >> i & 1u) ? (1.0 - 2.0 * xi) / 4.0 : (1.0 + 2.0 * xi) / 4.0;
        }
        // Coefficient of `subset` in f_rho: terms T with T \ fixed == subset.
        double coeff = 0.0;
        for (const auto& [mask, c] : p.terms()) {
          if ((mask & ~fixed) == subset) {
            coeff += (std::popcount(mask & neg) & 1) ? -c : c;
          }
        }
        total += prob * coeff;
        if (neg == 0) break;
        neg = (neg - 1) & fixed;
      }
    }
    if (fixed == full) break;
  }
  return total;
}

DenseEvaluator::DenseEvaluator(const MultilinearPoly& p)
    : m_(p.var_count()), table_(p.dense_table()) {}

double DenseEvaluator::evaluate(std::span<const double> x,
                                std::span<double> scratch) const {
  if (static_cast<int>(x.size()) != m_) {
    throw std::invalid_argument("DenseEvaluator: dimension mismatch");
  }
  if (scratch.size() != table_.size()) {
    throw std::invalid_argument("DenseEvaluator: scratch must have 2^m entries");
  }
  std::copy(table_.begin(), table_.end(), scratch.begin());
  // Fold variables from the top: t[j] += x_i * t[j + 2^i].
  for (int i = m_ - 1; i >= 0; --i) {
    const std::size_t half = std::size_t{1} << i;
    const double xi = x[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < half; ++j) {
      scratch[j] += xi * scratch[j + half];
    }
  }
  return scratch[0];
}

double DenseEvaluator::evaluate(std::span<const double> x) const {
  std::vector<double> scratch(table_.size());
  return evaluate(x, scratch);
}

}  // namespace forrlab
