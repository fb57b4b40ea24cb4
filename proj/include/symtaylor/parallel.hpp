#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace symtaylor {

/// Worker count: SYMTAYLOR_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
unsigned thread_count();

/// Calls body(i) for every i in [0, n). Work is split into contiguous chunks;
/// callers write results into per-index slots and reduce afterwards, so the
/// outcome does not depend on the thread count. The first exception thrown by
/// any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// splitmix64 finaliser over (seed, stream, index); used to derive
/// independent, order-free RNG seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

/// Named sub-streams of the run seed.
namespace stream {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t init = 2;
inline constexpr std::uint64_t noise = 3;
inline constexpr std::uint64_t shuffle = 4;
}  // namespace stream

}  // namespace symtaylor
