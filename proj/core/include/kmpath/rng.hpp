#pragma once

#include <array>
#include <cstdint>

namespace kmpath {

// Counter-based generator: every draw is a pure function of
// (seed, path, step), so path streams are independent and a prefix of
// paths/steps reproduces bitwise regardless of how many are generated.
//
// Core block: Philox-4x32 with 10 rounds. key = (lo32(seed), hi32(seed)),
// counter = (lo32(step), hi32(step), lo32(path), hi32(path)).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// One standard normal per (seed, path, step) via Box-Muller on the block's
// two 64-bit lanes. u1 is mapped into (0, 1] so log(u1) is always finite.
double normal_draw(std::uint64_t seed, std::uint64_t path, std::uint64_t step);

// Uniform draw on [0, 1) from the first 64-bit lane.
double uniform_draw(std::uint64_t seed, std::uint64_t path, std::uint64_t step);

// Step index reserved for the initial-condition draw of each path; the
// integration loop itself never reaches it.
inline constexpr std::uint64_t kInitStep = ~std::uint64_t{0};

// splitmix64: cheap stateless mixer used to drive fold shuffles.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace kmpath
