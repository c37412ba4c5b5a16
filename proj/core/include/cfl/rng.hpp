#pragma once

#include <cstdint>
#include <random>

#include "cfl/types.hpp"

namespace cfl {

// Purpose tags for derived random streams. Every stochastic draw in a run
// comes from a stream keyed by (root seed, tag, node, round), so adding or
// reordering phases never perturbs the draws of another phase.
enum class StreamTag : std::uint32_t {
  data_generation = 1,
  partition = 2,
  model_init = 3,
  training = 4,
  training_seed = 5,
};

std::mt19937_64 make_stream(std::uint64_t root, StreamTag tag, NodeId node = 0,
                            std::uint64_t round = 0);

// Single 64-bit value derived from the same key; used to hand child seeds to
// components that take a seed rather than a generator.
std::uint64_t derive_seed(std::uint64_t root, StreamTag tag, NodeId node = 0,
                          std::uint64_t round = 0);

}  // namespace cfl
