#include "cfl/rng.hpp"

#include <array>

namespace cfl {
namespace {

std::seed_seq make_seed_seq(std::uint64_t root, StreamTag tag, NodeId node,
                            std::uint64_t round) {
  const auto unode = static_cast<std::uint64_t>(node);
  return std::seed_seq{
      static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
      static_cast<std::uint32_t>(tag),  static_cast<std::uint32_t>(unode),
      static_cast<std::uint32_t>(unode >> 32),
      static_cast<std::uint32_t>(round),
      static_cast<std::uint32_t>(round >> 32)};
}

}  // namespace

std::mt19937_64 make_stream(std::uint64_t root, StreamTag tag, NodeId node,
                            std::uint64_t round) {
  auto seq = make_seed_seq(root, tag, node, round);
  return std::mt19937_64(seq);
}

std::uint64_t derive_seed(std::uint64_t root, StreamTag tag, NodeId node,
                          std::uint64_t round) {
  auto gen = make_stream(root, tag, node, round);
  return gen();
}

}  // namespace cfl
