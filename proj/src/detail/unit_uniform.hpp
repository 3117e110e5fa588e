#pragma once

#include <random>

namespace survcross::detail {

// Uniform on the open interval (0, 1) from the top 53 bits.
inline double open_unit(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace survcross::detail
