#pragma once

#include <cstdint>

namespace expfit::opcount {

// Counter of data-length passes: every operation whose cost grows with the
// signal length n (building a Vandermonde column, projecting data, an FFT,
// evaluating a full residual) records one pass per length-n traversal.
// Solver tests read it to certify that projected Levenberg-Marquardt
// iterations perform no O(n) work.
inline thread_local std::uint64_t g_full_passes = 0;

inline void add_passes(std::uint64_t k = 1) { g_full_passes += k; }
inline std::uint64_t passes() { return g_full_passes; }
inline void reset() { g_full_passes = 0; }

}  // namespace expfit::opcount
