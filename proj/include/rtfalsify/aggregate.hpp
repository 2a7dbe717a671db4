#pragma once

#include <span>

#include "rtfalsify/expr.hpp"

namespace rtfalsify {

/// Running minimum over every degree emitted during a run: the min block with
/// its delayed feedback.  Starts at +inf, the identity of min.
class RunningMin {
 public:
  void update(std::span<const Degree> degrees) noexcept {
    for (Degree d : degrees) {
      if (d < current_) current_ = d;
    }
  }

  [[nodiscard]] Degree current() const noexcept { return current_; }

 private:
  Degree current_ = kTop;
};

inline RunningMin aggregate_step(RunningMin r, std::span<const Degree> degrees) noexcept {
  r.update(degrees);
  return r;
}

/// Fitness of the run; +inf when nothing was aggregated.
inline Degree finalize(const RunningMin& r) noexcept { return r.current(); }

}  // namespace rtfalsify
