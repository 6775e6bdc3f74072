#ifndef OMX_ENGINE_SERIES_HPP
#define OMX_ENGINE_SERIES_HPP

#include <vector>

#include "engine_context.hpp"

namespace omx::detail {

/// Per-order contributions of the iterated noise-corrected drive to the
/// amplitude correction integral. terms[j] carries its (ig)^{j+1} coefficient;
/// the amplitude correction is their plain sum. order 0 keeps the bare drive.
std::vector<Complex> amplitude_series_terms(const EndTimeContext& ctx, int order);

/// <J^dag J> with the noise-corrected drive operator truncated at
/// `side_order` (0 or 1) on each side of the product. Averaging the truncated
/// operator exactly keeps the result non-negative by construction.
double jj_value(const EndTimeContext& ctx, int side_order);

}  // namespace omx::detail

#endif
