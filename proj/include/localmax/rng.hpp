#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace localmax {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of a named substream of `root`. Distinct names give independent streams.
std::uint64_t substream_seed(std::uint64_t root, std::string_view name) noexcept;

/// Seed of the `index`-th task of a substream (per-task RNG for parallel loops).
std::uint64_t task_seed(std::uint64_t stream_seed, std::uint64_t index) noexcept;

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& text);

} // namespace localmax
