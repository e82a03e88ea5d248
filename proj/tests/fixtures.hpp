#pragma once

#include "rwlab/boundary.hpp"

namespace rwlab::testing {

inline const CounterexampleParams& default_params() {
  static const CounterexampleParams p = make_params();
  return p;
}

/// Default-grid stationary density, solved once per test binary.
inline const StationaryDensity& solved() {
  static const StationaryDensity s = fixed_point_solve(default_params());
  return s;
}

}  // namespace rwlab::testing
