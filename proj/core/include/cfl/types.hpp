#pragma once

#include <cstdint>

namespace cfl {

using NodeId = std::int64_t;
using SampleId = std::uint64_t;

}  // namespace cfl
