#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace md {

/// Mixes a base seed with a tag so every parameter gets its own stream,
/// independent of construction order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

std::vector<double> normal_draw(std::size_t count, double stddev, std::uint64_t seed);

}  // namespace md
