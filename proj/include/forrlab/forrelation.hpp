#ifndef FORRLAB_FORRELATION_HPP
#define FORRLAB_FORRELATION_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "forrlab/rng.hpp"
#include "forrlab/stochastic.hpp"

namespace forrlab {

// A decision value with an explicit undefined gap.
enum class Trit : std::int8_t { minus_one = -1, bottom = 0, plus_one = 1 };

// k blocks of R^N; block i is a stopped endpoint when i is in the live set
// and the zero vector otherwise. Live entries always lie in [-1/2, 1/2]:
// grid-overshoot (or endpoint-mode) values are projected onto the box, with
// hit_mask recording which blocks were touched by that projection or by a
// boundary exit.
struct BlockSample {
  int k = 0;
  std::size_t block_dim = 0;  // N
  std::uint64_t live_mask = 0;
  std::uint64_t hit_mask = 0;
  std::vector<double> values;  // k x N, row-major

  std::span<const double> block(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * block_dim, block_dim};
  }
};

// A point of the Boolean cube, entries in {-1, +1}.
struct CubePoint {
  std::vector<std::int8_t> bits;
};

enum class SamplerMode { full_path, endpoint_only };
enum class Parity { even, odd };

// All k live blocks drawn independently (no zeroing); shared by the
// verifiers, which evaluate every subset on common samples.
struct BlockDraw {
  std::vector<double> values;  // k x N
  std::vector<double> taus;    // per block (epsilon in endpoint mode)
  std::uint64_t hit_mask = 0;
};
BlockDraw draw_live_blocks(int k, const CovarianceSpec& cov, const SimParams& params,
                           RandomStream& rng, SamplerMode mode = SamplerMode::full_path);

// The block distribution D_S: independent stopped endpoints on the blocks of
// S, zero elsewhere.
BlockSample sample_D_S(int k, std::uint64_t live_set, const CovarianceSpec& cov,
                       const SimParams& params, RandomStream& rng,
                       SamplerMode mode = SamplerMode::full_path);

// D_odd / D_even: S drawn uniformly among the 2^(k-1) subsets of the given
// parity, then sample_D_S.
BlockSample sample_D_parity(int k, Parity parity, const CovarianceSpec& cov,
                            const SimParams& params, RandomStream& rng,
                            SamplerMode mode = SamplerMode::full_path);

std::uint64_t sample_parity_subset(int k, Parity parity, RandomStream& rng);

// Randomized rounding to the cube: independently per coordinate,
// +1 with probability (1+z_i)/2. E[z~_i] = z_i exactly; requires
// |z_i| <= 1/2.
CubePoint round_to_cube(std::span<const double> z, RandomStream& rng);

// Decision thresholds on the forrelation statistic: -1 when phi >= eps/2,
// +1 when phi <= eps/4, undefined in between.
Trit decide_phi(double phi_value, double epsilon);
Trit forrelation_decision(std::span<const double> x, std::span<const double> y,
                          double epsilon);

// Product of per-block decisions on a kN-bit cube point; undefined as soon
// as any factor is undefined (the gap is reported, never resolved silently).
Trit forrelation_k(const CubePoint& z, int k, double epsilon);

// Compact binary dumps for experiment reproducibility.
void write_block_sample(std::ostream& os, const BlockSample& s);
BlockSample read_block_sample(std::istream& is);
void write_cube_point(std::ostream& os, const CubePoint& z);
CubePoint read_cube_point(std::istream& is);

}  // namespace forrlab

#endif  // FORRLAB_FORRELATION_HPP
