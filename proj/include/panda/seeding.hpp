#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace panda {

std::uint64_t splitmix64(std::uint64_t x);

// Sub-seed for a labeled stream. Adding a new label never shifts another
// label's randomness.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

// Combines a seed with integer coordinates (round, edge endpoints, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

// Uniform double in [0, 1) from the top 53 bits.
double to_unit_interval(std::uint64_t bits);

using Rng = std::mt19937_64;

}  // namespace panda
