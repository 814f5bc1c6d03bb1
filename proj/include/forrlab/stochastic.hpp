#ifndef FORRLAB_STOCHASTIC_HPP
#define FORRLAB_STOCHASTIC_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "forrlab/common.hpp"
#include "forrlab/rng.hpp"

namespace forrlab {

// Default time horizon eps = 1 / (28 k^2 ln N). Requires N >= 2, k >= 1.
double default_epsilon(std::size_t N, int k);

// Covariance of the correlated Brownian motion. Either the structured
// Hadamard-block form
//   Sigma = [[I_n, H_n], [H_n, I_n]],  N = 2n,  gamma = 1/sqrt(n),
// or a small dense symmetric PSD matrix with unit diagonal (test oracle use,
// N <= 32 in practice). The dense form is validated spectrally and carries a
// factor A with A A^T = Sigma for sampling.
class CovarianceSpec {
 public:
  static CovarianceSpec hadamard_block(std::size_t half_dim);
  static CovarianceSpec dense(std::size_t dim, std::span<const double> matrix);

  bool is_hadamard() const { return hadamard_; }
  std::size_t dim() const { return dim_; }        // N
  std::size_t half_dim() const;                   // n (Hadamard form only)
  double gamma() const { return gamma_; }
  double entry(std::size_t i, std::size_t j) const;
  std::span<const double> factor() const;         // dense form only, row-major

 private:
  CovarianceSpec() = default;
  bool hadamard_ = false;
  std::size_t dim_ = 0;
  std::size_t half_ = 0;
  double gamma_ = 0.0;
  std::vector<double> sigma_;   // dense only
  std::vector<double> factor_;  // dense only
};

struct SimParams {
  double epsilon = 0.0;
  double delta = 0.0;
  double box_half_width = 0.5;  // tests shrink this to probe stopping monotonicity

  static SimParams with_default_delta(double eps) {
    return SimParams{eps, eps / 64.0, 0.5};
  }
  void validate() const;
};

// A discretized trajectory up to its stopping time. Grid spacing is delta
// except possibly a final partial step ending exactly at epsilon. Exits are
// detected at grid points only; when hit_boundary is set, the final recorded
// point is the first grid state outside the box.
struct StoppedPath {
  std::size_t dim = 0;
  std::vector<double> times;   // t_0 = 0, ..., t_last = tau
  std::vector<double> points;  // row-major, times.size() x dim
  double tau = 0.0;
  bool hit_boundary = false;

  std::size_t grid_size() const { return times.size(); }
  std::span<const double> point(std::size_t idx) const {
    return {points.data() + idx * dim, dim};
  }
  std::span<const double> endpoint() const { return point(times.size() - 1); }
};

// Simulate until the box is left or the horizon is reached. For the Hadamard
// form an n-dimensional standard Brownian motion X is advanced by sqrt(dt)
// Gaussian increments and the exposed N-dimensional state is (X, H X); for
// the dense form increments are A (sqrt(dt) g).
StoppedPath sample_path(const CovarianceSpec& cov, const SimParams& params,
                        RandomStream& rng);

// Same dynamics with the stopping rule disabled: tau = epsilon always and
// the full grid is recorded; hit_boundary still reports whether any grid
// point left the box. Measurement/test use.
StoppedPath sample_path_unstopped(const CovarianceSpec& cov,
                                  const SimParams& params, RandomStream& rng);

// Coupled pair for refinement checks: the fine path uses delta/2 and the
// coarse path is its restriction to every other grid point, so both see the
// same noise and differ only through discretization.
struct PathPair {
  StoppedPath fine;
  StoppedPath coarse;
};
PathPair sample_path_pair(const CovarianceSpec& cov, const SimParams& params,
                          RandomStream& rng);

// Fast path for large-N concentration experiments: draws X ~ N(0, eps I_n)
// directly and returns (X, H X) with no intermediate exit checks. The flag
// reports whether the endpoint itself lies outside the box; the skipped
// path-exit bias is for the caller to account for.
struct Endpoint {
  std::vector<double> values;
  bool hit_boundary = false;
};
Endpoint sample_endpoint(const CovarianceSpec& cov, double epsilon,
                         RandomStream& rng);

// Left-endpoint Riemann sum of the integrand along the path grid, from 0 to
// tau.
template <class Integrand>
double integrate_along_path(const StoppedPath& path, Integrand&& integrand) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < path.times.size(); ++i) {
    acc += integrand(path.point(i)) * (path.times[i + 1] - path.times[i]);
  }
  return acc;
}

}  // namespace forrlab

#endif  // FORRLAB_STOCHASTIC_HPP
