#include "forrlab/forrelation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "forrlab/wht.hpp"

namespace forrlab {

namespace {

constexpr char kBlockMagic[4] = {'F', 'B', 'L', 'K'};
constexpr char kCubeMagic[4] = {'F', 'C', 'U', 'B'};
constexpr std::uint32_t kDumpVersion = 1;

void check_k(int k) {
  if (k < 1 || k > 63) throw std::invalid_argument("k must lie in [1, 63]");
}

template <class T>
void write_raw(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_raw(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw std::runtime_error("dump read: truncated stream");
  return value;
}

}  // namespace

BlockDraw draw_live_blocks(int k, const CovarianceSpec& cov, const SimParams& params,
                           RandomStream& rng, SamplerMode mode) {
  check_k(k);
  params.validate();
  const std::size_t N = cov.dim();
  BlockDraw draw;
  draw.values.resize(static_cast<std::size_t>(k) * N);
  draw.taus.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    double* dst = draw.values.data() + static_cast<std::size_t>(i) * N;
    bool hit = false;
    if (mode == SamplerMode::endpoint_only) {
      Endpoint ep = sample_endpoint(cov, params.epsilon, rng);
      std::copy(ep.values.begin(), ep.values.end(), dst);
      draw.taus[static_cast<std::size_t>(i)] = params.epsilon;
      hit = ep.hit_boundary;
    } else {
      StoppedPath path = sample_path(cov, params, rng);
      const auto end = path.endpoint();
      std::copy(end.begin(), end.end(), dst);
      draw.taus[static_cast<std::size_t>(i)] = path.tau;
      hit = path.hit_boundary;
    }
    // Project onto the box: the grid detector overshoots the boundary, and
    // the endpoint shortcut skips the stopping rule altogether.
    for (std::size_t j = 0; j < N; ++j) {
      dst[j] = std::clamp(dst[j], -params.box_half_width, params.box_half_width);
    }
    if (hit) draw.hit_mask |= std::uint64_t{1} << i;
  }
  return draw;
}

BlockSample sample_D_S(int k, std::uint64_t live_set, const CovarianceSpec& cov,
                       const SimParams& params, RandomStream& rng, SamplerMode mode) {
  check_k(k);
  if (live_set >> k) throw std::invalid_argument("sample_D_S: live set outside [k]");
  params.validate();
  const std::size_t N = cov.dim();
  BlockSample sample;
  sample.k = k;
  sample.block_dim = N;
  sample.live_mask = live_set;
  sample.values.assign(static_cast<std::size_t>(k) * N, 0.0);
  for (int i = 0; i < k; ++i) {
    if (!(live_set >> i & 1u)) continue;
    BlockDraw one = draw_live_blocks(1, cov, params, rng, mode);
    std::copy(one.values.begin(), one.values.end(),
              sample.values.begin() + static_cast<std::size_t>(i) * N);
    if (one.hit_mask) sample.hit_mask |= std::uint64_t{1} << i;
  }
  return sample;
}

std::uint64_t sample_parity_subset(int k, Parity parity, RandomStream& rng) {
  check_k(k);
  // First k-1 membership bits uniform, last bit fixes the parity: a bijection
  // between [2^(k-1)] and the subsets of the requested parity.
  std::uint64_t mask = (k == 1) ? 0 : (rng.bits() & ((std::uint64_t{1} << (k - 1)) - 1));
  const int parity_bit = static_cast<int>(std::popcount(mask)) & 1;
  const int want_odd = (parity == Parity::odd) ? 1 : 0;
  if (parity_bit != want_odd) mask |= std::uint64_t{1} << (k - 1);
  return mask;
}

BlockSample sample_D_parity(int k, Parity parity, const CovarianceSpec& cov,
                            const SimParams& params, RandomStream& rng,
                            SamplerMode mode) {
  const std::uint64_t live = sample_parity_subset(k, parity, rng);
  return sample_D_S(k, live, cov, params, rng, mode);
}

CubePoint round_to_cube(std::span<const double> z, RandomStream& rng) {
  CubePoint out;
  out.bits.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(std::abs(z[i]) <= 0.5)) {
      throw std::invalid_argument("round_to_cube: entries must lie in [-1/2, 1/2]");
    }
    out.bits[i] = rng.uniform() < 0.5 * (1.0 + z[i]) ? std::int8_t{1} : std::int8_t{-1};
  }
  return out;
}

Trit decide_phi(double phi_value, double epsilon) {
  if (phi_value >= epsilon / 2.0) return Trit::minus_one;
  if (phi_value <= epsilon / 4.0) return Trit::plus_one;
  return Trit::bottom;
}

Trit forrelation_decision(std::span<const double> x, std::span<const double> y,
                          double epsilon) {
  return decide_phi(phi(x, y), epsilon);
}

Trit forrelation_k(const CubePoint& z, int k, double epsilon) {
  check_k(k);
  const std::size_t total = z.bits.size();
  if (total % static_cast<std::size_t>(k) != 0) {
    throw std::invalid_argument("forrelation_k: length must be k * N");
  }
  const std::size_t N = total / static_cast<std::size_t>(k);
  if (N < 2 || N % 2 != 0 || !is_power_of_two(N / 2)) {
    throw std::invalid_argument("forrelation_k: block length must be twice a power of two");
  }
  const std::size_t n = N / 2;
  std::vector<double> x(n), y(n), scratch(n);
  int sign = 1;
  for (int b = 0; b < k; ++b) {
    const std::int8_t* block = z.bits.data() + static_cast<std::size_t>(b) * N;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(block[i]);
      y[i] = static_cast<double>(block[n + i]);
    }
    const Trit t = decide_phi(phi(x, y, scratch), epsilon);
    if (t == Trit::bottom) return Trit::bottom;
    sign *= static_cast<int>(t);
  }
  return sign > 0 ? Trit::plus_one : Trit::minus_one;
}

void write_block_sample(std::ostream& os, const BlockSample& s) {
  os.write(kBlockMagic, 4);
  write_raw(os, kDumpVersion);
  write_raw(os, static_cast<std::uint64_t>(s.k));
  write_raw(os, static_cast<std::uint64_t>(s.block_dim));
  write_raw(os, s.live_mask);
  write_raw(os, s.hit_mask);
  os.write(reinterpret_cast<const char*>(s.values.data()),
           static_cast<std::streamsize>(s.values.size() * sizeof(double)));
}

BlockSample read_block_sample(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kBlockMagic, 4) != 0) {
    throw std::runtime_error("block sample dump: bad magic");
  }
  if (read_raw<std::uint32_t>(is) != kDumpVersion) {
    throw std::runtime_error("block sample dump: unsupported version");
  }
  BlockSample s;
  s.k = static_cast<int>(read_raw<std::uint64_t>(is));
  s.block_dim = static_cast<std::size_t>(read_raw<std::uint64_t>(is));
  s.live_mask = read_raw<std::uint64_t>(is);
  s.hit_mask = read_raw<std::uint64_t>(is);
  check_k(s.k);
  s.values.resize(static_cast<std::size_t>(s.k) * s.block_dim);
  is.read(reinterpret_cast<char*>(s.values.data()),
          static_cast<std::streamsize>(s.values.size() * sizeof(double)));
  if (!is) throw std::runtime_error("block sample dump: truncated values");
  return s;
}

void write_cube_point(std::ostream& os, const CubePoint& z) {
  os.write(kCubeMagic, 4);
  write_raw(os, static_cast<std::uint64_t>(z.bits.size()));
  os.write(reinterpret_cast<const char*>(z.bits.data()),
           static_cast<std::streamsize>(z.bits.size()));
}

CubePoint read_cube_point(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCubeMagic, 4) != 0) {
    throw std::runtime_error("cube point dump: bad magic");
  }
  CubePoint z;
  z.bits.resize(static_cast<std::size_t>(read_raw<std::uint64_t>(is)));
  is.read(reinterpret_cast<char*>(z.bits.data()),
          static_cast<std::streamsize>(z.bits.size()));
  if (!is) throw std::runtime_error("cube point dump: truncated values");
  for (std::int8_t b : z.bits) {
    if (b != 1 && b != -1) throw std::runtime_error("cube point dump: entries must be +-1");
  }
  return z;
}

}  // namespace forrlab
