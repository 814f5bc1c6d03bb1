#ifndef FORRLAB_COMMON_HPP
#define FORRLAB_COMMON_HPP

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace forrlab {

inline constexpr const char* kVersion = "0.1.0";

// Thrown when an operation would require enumerating a state space that is
// too large for exact computation (the caller must supply the quantity
// externally instead).
struct capacity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr bool is_power_of_two(std::size_t n) {
  return n != 0 && std::has_single_bit(n);
}

inline constexpr int log2_exact(std::size_t n) {
  return std::countr_zero(n);
}

// FNV-1a, used to give every experiment sub-run a stable stream domain.
inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace forrlab

#endif  // FORRLAB_COMMON_HPP
