#ifndef FORRLAB_WHT_HPP
#define FORRLAB_WHT_HPP

#include <span>
#include <vector>

#include "forrlab/common.hpp"

namespace forrlab {

// Normalized fast Walsh-Hadamard transform kernels and the forrelation
// statistic phi(x, y) = <x, H y> / n.
//
// H is the orthonormal Hadamard matrix in natural ordering,
//   H[i][j] = (-1)^{popcount(i & j)} / sqrt(n),
// so H is symmetric and an involution. The in-place butterfly runs the
// unnormalized passes first and applies a single 1/sqrt(n) scaling pass at
// the end. Passes touch disjoint element pairs, so the OpenMP split cannot
// change the floating-point result.

// Unnormalized butterfly passes only: v <- sqrt(n) * H v. Exact on integer
// input (used for truth-table Fourier transforms).
void fwht_unnormalized(std::span<double> v);

// Orthonormal transform: v <- H v.
void fwht(std::span<double> v);

std::vector<double> fwht_copy(std::span<const double> v);

// phi(x, y) = <x, H y> / n, computed through the fast transform.
// The scratch overload avoids per-call allocation in hot loops; scratch must
// have the same length as y.
double phi(std::span<const double> x, std::span<const double> y);
double phi(std::span<const double> x, std::span<const double> y,
           std::span<double> scratch);

namespace reference {

// Serial butterfly, kept as the reference implementation for the parallel
// kernel (tests assert bit-identical output; the benchmark compares them).
void fwht(std::span<double> v);

// O(n^2) multiply against the explicit matrix; the independent oracle.
std::vector<double> hadamard_multiply(std::span<const double> v);

double phi(std::span<const double> x, std::span<const double> y);

}  // namespace reference

}  // namespace forrlab

#endif  // FORRLAB_WHT_HPP
