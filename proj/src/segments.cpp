#include "nml_ddim/segments.hpp"

#include <string>

#include "nml_ddim/error.hpp"

namespace nml_ddim {

std::vector<Count> segment_lengths(std::span<const Count> change_points, Count n) {
  std::vector<Count> out;
  Count prev = 0;
  for (Count t : change_points) {
    if (t <= prev || t >= n)
      throw Error(ErrorCode::InvalidChangePoints,
                  "change point " + std::to_string(t) + " is not strictly increasing within (0, " +
                      std::to_string(n) + ")");
    out.push_back(t - prev);
    prev = t;
  }
  if (n <= prev) throw Error(ErrorCode::InvalidChangePoints, "horizon must exceed the last change point");
  out.push_back(n - prev);
  return out;
}

}  // namespace nml_ddim
