#pragma once

#include <cstdint>
#include <random>

namespace streamopt {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of replication `index`: base XOR splitmix64(index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace streamopt
