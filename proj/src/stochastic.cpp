#include "forrlab/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "forrlab/wht.hpp"

namespace forrlab {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = 1e-10;

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major,
// destroyed). Plenty for the N <= 32 dense test covariances.
void jacobi_eigen(std::vector<double>& a, std::size_t n, std::vector<double>& eigvals,
                  std::vector<double>& eigvecs) {
  eigvecs.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eigvecs[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    }
    if (off < 1e-26) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = 0.5 * (aqq - app) / apq;
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a[i * n + p];
          const double aiq = a[i * n + q];
          a[i * n + p] = c * aip - s * aiq;
          a[i * n + q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a[p * n + i];
          const double aqi = a[q * n + i];
          a[p * n + i] = c * api - s * aqi;
          a[q * n + i] = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = eigvecs[i * n + p];
          const double viq = eigvecs[i * n + q];
          eigvecs[i * n + p] = c * vip - s * viq;
          eigvecs[i * n + q] = s * vip + c * viq;
        }
      }
    }
  }
  eigvals.resize(n);
  for (std::size_t i = 0; i < n; ++i) eigvals[i] = a[i * n + i];
}

}  // namespace

double default_epsilon(std::size_t N, int k) {
  if (N < 2) throw std::invalid_argument("default_epsilon: N must be at least 2");
  if (k < 1) throw std::invalid_argument("default_epsilon: k must be at least 1");
  const double kk = static_cast<double>(k);
  return 1.0 / (28.0 * kk * kk * std::log(static_cast<double>(N)));
}

CovarianceSpec CovarianceSpec::hadamard_block(std::size_t half_dim) {
  if (!is_power_of_two(half_dim)) {
    throw std::invalid_argument("hadamard_block: half dimension must be a power of two");
  }
  CovarianceSpec cov;
  cov.hadamard_ = true;
  cov.half_ = half_dim;
  cov.dim_ = 2 * half_dim;
  cov.gamma_ = 1.0 / std::sqrt(static_cast<double>(half_dim));
  return cov;
}

CovarianceSpec CovarianceSpec::dense(std::size_t dim, std::span<const double> matrix) {
  if (dim == 0 || matrix.size() != dim * dim) {
    throw std::invalid_argument("dense: matrix must be dim x dim");
  }
  CovarianceSpec cov;
  cov.hadamard_ = false;
  cov.dim_ = dim;
  cov.sigma_.assign(matrix.begin(), matrix.end());
  double gamma = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    if (std::abs(cov.sigma_[i * dim + i] - 1.0) > kSymmetryTol) {
      throw std::invalid_argument("dense: covariance must have unit diagonal");
    }
    for (std::size_t j = i + 1; j < dim; ++j) {
      if (std::abs(cov.sigma_[i * dim + j] - cov.sigma_[j * dim + i]) > kSymmetryTol) {
        throw std::invalid_argument("dense: covariance must be symmetric");
      }
      gamma = std::max(gamma, std::abs(cov.sigma_[i * dim + j]));
    }
  }
  cov.gamma_ = gamma;

  // Spectral factorization Sigma = Q diag(lambda) Q^T, A = Q diag(sqrt(lambda)).
  std::vector<double> work(cov.sigma_);
  std::vector<double> eigvals, eigvecs;
  jacobi_eigen(work, dim, eigvals, eigvecs);
  for (double& lam : eigvals) {
    if (lam < -kPsdTol) {
      throw std::invalid_argument("dense: covariance is not positive semidefinite");
    }
    lam = std::sqrt(std::max(lam, 0.0));
  }
  cov.factor_.assign(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      cov.factor_[i * dim + j] = eigvecs[i * dim + j] * eigvals[j];
    }
  }
  return cov;
}

std::size_t CovarianceSpec::half_dim() const {
  if (!hadamard_) throw std::logic_error("half_dim: dense covariance has no block split");
  return half_;
}

double CovarianceSpec::entry(std::size_t i, std::size_t j) const {
  if (i >= dim_ || j >= dim_) throw std::invalid_argument("entry: index out of range");
  if (!hadamard_) return sigma_[i * dim_ + j];
  if (i == j) return 1.0;
  const bool i_lo = i < half_;
  const bool j_lo = j < half_;
  if (i_lo == j_lo) return 0.0;
  const std::size_t r = i_lo ? i : j;
  const std::size_t c = (i_lo ? j : i) - half_;
  const bool neg = std::popcount(r & c) & 1u;
  return neg ? -gamma_ : gamma_;
}

std::span<const double> CovarianceSpec::factor() const {
  if (hadamard_) throw std::logic_error("factor: only the dense form carries a factor");
  return factor_;
}

void SimParams::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("SimParams: epsilon must lie in (0, 1]");
  }
  if (!(delta > 0.0 && delta <= epsilon)) {
    throw std::invalid_argument("SimParams: delta must lie in (0, epsilon]");
  }
  if (!(box_half_width > 0.0)) {
    throw std::invalid_argument("SimParams: box half-width must be positive");
  }
}

namespace {

std::size_t grid_steps(double epsilon, double delta) {
  const auto steps = static_cast<std::size_t>(std::ceil(epsilon / delta - 1e-12));
  return std::max<std::size_t>(steps, 1);
}

// Simulates the full (unstopped) grid with `steps` equal increments of
// delta = epsilon/steps semantics handled by the caller-provided times.
// Returns rows and per-row box violation flags.
struct RawGrid {
  std::vector<double> times;
  std::vector<double> rows;       // (steps+1) x N
  std::vector<char> outside;      // per grid point
};

RawGrid simulate_grid(const CovarianceSpec& cov, double epsilon, double delta,
                      double half_width, RandomStream& rng) {
  const std::size_t N = cov.dim();
  const std::size_t steps = grid_steps(epsilon, delta);
  RawGrid grid;
  grid.times.resize(steps + 1);
  grid.rows.assign((steps + 1) * N, 0.0);
  grid.outside.assign(steps + 1, 0);
  grid.times[0] = 0.0;

  if (cov.is_hadamard()) {
    const std::size_t n = cov.half_dim();
    std::vector<double> state(n, 0.0);
    std::vector<double> transformed(n);
    for (std::size_t s = 1; s <= steps; ++s) {
      const double t = std::min(static_cast<double>(s) * delta, epsilon);
      const double dt = t - grid.times[s - 1];
      grid.times[s] = (s == steps) ? epsilon : t;
      const double sd = std::sqrt(dt);
      for (std::size_t i = 0; i < n; ++i) state[i] += sd * rng.gaussian();
      std::copy(state.begin(), state.end(), transformed.begin());
      fwht(transformed);
      double* row = grid.rows.data() + s * N;
      bool out = false;
      for (std::size_t i = 0; i < n; ++i) {
        row[i] = state[i];
        out |= std::abs(state[i]) > half_width;
      }
      for (std::size_t i = 0; i < n; ++i) {
        row[n + i] = transformed[i];
        out |= std::abs(transformed[i]) > half_width;
      }
      grid.outside[s] = out ? 1 : 0;
    }
  } else {
    const std::span<const double> A = cov.factor();
    std::vector<double> state(N, 0.0);
    std::vector<double> g(N);
    for (std::size_t s = 1; s <= steps; ++s) {
      const double t = std::min(static_cast<double>(s) * delta, epsilon);
      const double dt = t - grid.times[s - 1];
      grid.times[s] = (s == steps) ? epsilon : t;
      const double sd = std::sqrt(dt);
      for (std::size_t i = 0; i < N; ++i) g[i] = sd * rng.gaussian();
      double* row = grid.rows.data() + s * N;
      bool out = false;
      for (std::size_t i = 0; i < N; ++i) {
        double inc = 0.0;
        for (std::size_t j = 0; j < N; ++j) inc += A[i * N + j] * g[j];
        state[i] += inc;
        row[i] = state[i];
        out |= std::abs(state[i]) > half_width;
      }
      grid.outside[s] = out ? 1 : 0;
    }
  }
  return grid;
}

// Cuts a raw grid into a StoppedPath that keeps every stride-th grid point
// (plus the final one, so the horizon state is always present). In stopping
// mode the path ends at the first kept point outside the box.
StoppedPath cut_path(const RawGrid& grid, std::size_t N, std::size_t stride,
                     bool stop_at_exit) {
  const std::size_t total = grid.times.size();
  std::vector<std::size_t> kept;
  for (std::size_t s = 0; s < total; s += stride) kept.push_back(s);
  if (kept.back() != total - 1) kept.push_back(total - 1);

  std::size_t last = kept.size() - 1;
  bool hit = false;
  for (std::size_t idx = 1; idx < kept.size(); ++idx) {
    if (grid.outside[kept[idx]]) {
      hit = true;
      if (stop_at_exit) {
        last = idx;
        break;
      }
    }
  }

  StoppedPath path;
  path.dim = N;
  path.times.reserve(last + 1);
  path.points.reserve((last + 1) * N);
  for (std::size_t idx = 0; idx <= last; ++idx) {
    const std::size_t s = kept[idx];
    path.times.push_back(grid.times[s]);
    const double* row = grid.rows.data() + s * N;
    path.points.insert(path.points.end(), row, row + N);
  }
  path.tau = path.times.back();
  path.hit_boundary = hit;
  return path;
}

}  // namespace

StoppedPath sample_path(const CovarianceSpec& cov, const SimParams& params,
                        RandomStream& rng) {
  params.validate();
  RawGrid grid = simulate_grid(cov, params.epsilon, params.delta,
                               params.box_half_width, rng);
  return cut_path(grid, cov.dim(), 1, /*stop_at_exit=*/true);
}

StoppedPath sample_path_unstopped(const CovarianceSpec& cov,
                                  const SimParams& params, RandomStream& rng) {
  params.validate();
  RawGrid grid = simulate_grid(cov, params.epsilon, params.delta,
                               params.box_half_width, rng);
  return cut_path(grid, cov.dim(), 1, /*stop_at_exit=*/false);
}

PathPair sample_path_pair(const CovarianceSpec& cov, const SimParams& params,
                          RandomStream& rng) {
  params.validate();
  // One fine simulation at delta/2; the coarse path reads every other grid
  // point, i.e. it is driven by the pairwise-summed increments.
  RawGrid grid = simulate_grid(cov, params.epsilon, params.delta / 2.0,
                               params.box_half_width, rng);
  PathPair pair;
  pair.fine = cut_path(grid, cov.dim(), 1, /*stop_at_exit=*/true);
  pair.coarse = cut_path(grid, cov.dim(), 2, /*stop_at_exit=*/true);
  return pair;
}

Endpoint sample_endpoint(const CovarianceSpec& cov, double epsilon,
                         RandomStream& rng) {
  if (!cov.is_hadamard()) {
    throw std::invalid_argument("sample_endpoint: requires the Hadamard-block form");
  }
  if (!(epsilon >= 0.0)) {
    throw std::invalid_argument("sample_endpoint: epsilon must be nonnegative");
  }
  const std::size_t n = cov.half_dim();
  const std::size_t N = cov.dim();
  Endpoint ep;
  ep.values.resize(N);
  const double sd = std::sqrt(epsilon);
  for (std::size_t i = 0; i < n; ++i) ep.values[i] = sd * rng.gaussian();
  std::copy(ep.values.begin(), ep.values.begin() + n, ep.values.begin() + n);
  fwht(std::span<double>(ep.values).subspan(n));
  for (double v : ep.values) {
    if (std::abs(v) > 0.5) {
      ep.hit_boundary = true;
      break;
    }
  }
  return ep;
}

}  // namespace forrlab
