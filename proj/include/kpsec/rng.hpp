#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace kpsec {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

// Stream splitting rule: every random stream in the library is identified by
// (master seed, label, index). Streams with different labels or indices are
// statistically independent, so parallel trials reproduce regardless of the
// order in which they are scheduled.
Seed derive_seed(Seed master, std::string_view label, std::uint64_t index = 0);

inline Rng make_rng(Seed master, std::string_view label, std::uint64_t index = 0) {
  return Rng(derive_seed(master, label, index));
}

}  // namespace kpsec
