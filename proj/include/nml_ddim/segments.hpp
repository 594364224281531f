#ifndef NML_DDIM_SEGMENTS_HPP
#define NML_DDIM_SEGMENTS_HPP

#include <span>
#include <vector>

#include "nml_ddim/numeric.hpp"

namespace nml_ddim {

/// Lengths of the segments 1..t_1, t_1+1..t_2, ..., t_m+1..n. Throws
/// InvalidChangePoints unless 0 < t_1 < ... < t_m < n.
std::vector<Count> segment_lengths(std::span<const Count> change_points, Count n);

}  // namespace nml_ddim

#endif  // NML_DDIM_SEGMENTS_HPP
