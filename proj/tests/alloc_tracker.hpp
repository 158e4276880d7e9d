#pragma once

#include <cstddef>

// Heap accounting for the memory-contract test: the matching .cpp overrides
// the global new/delete operators (so it must be linked into the test binary
// that wants it) and tracks live bytes plus a resettable high-water mark.
namespace alloc_tracker {

std::size_t live_bytes();
std::size_t peak_bytes();
void reset_peak();  // peak := live

}  // namespace alloc_tracker
