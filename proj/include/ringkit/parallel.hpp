#pragma once

#include <cstddef>
#include <functional>

namespace ringkit {

// Worker count used by parallel_for; 0 restores the hardware default.
void set_thread_count(std::size_t n);
std::size_t thread_count();

// Splits [0, n) into contiguous chunks, one per worker. Work items must write disjoint
// outputs so results do not depend on the chunking.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace ringkit
