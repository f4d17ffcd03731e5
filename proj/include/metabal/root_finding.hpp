#pragma once

#include "metabal/errors.hpp"

#include <cmath>
#include <string>

namespace metabal {

struct BisectionOptions {
  double x_tol = 1e-10;  // stop once the bracket is this narrow...
  double f_tol = 0.0;    // ...and |f(mid)| is at most this
  int max_iterations = 4000;
};

/// Bisection on a bracket [lo, hi] over which f changes sign. Terminates when
/// both tolerances are met or the bracket has collapsed to adjacent doubles.
template <typename Scalar, typename F>
Scalar bisect(F&& f, Scalar lo, Scalar hi, const BisectionOptions& options = {}) {
  Scalar f_lo = f(lo);
  Scalar f_hi = f(hi);
  if (f_lo == Scalar(0)) return lo;
  if (f_hi == Scalar(0)) return hi;
  if ((f_lo < 0) == (f_hi < 0)) {
    throw SolverError("bisection: no sign change on [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
  for (int it = 0; it < options.max_iterations; ++it) {
    const Scalar mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) return mid;
    const Scalar f_mid = f(mid);
    if (f_mid == Scalar(0)) return mid;
    if ((f_mid < 0) == (f_lo < 0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
    if (hi - lo <= options.x_tol && std::abs(f_mid) <= options.f_tol) return mid;
  }
  throw SolverError("bisection: iteration budget exhausted");
}

/// Grows [lo, hi] symmetrically about its centre, doubling the half-width,
/// until f changes sign. Returns false if `max_doublings` is reached first.
template <typename Scalar, typename F>
bool expand_bracket(F&& f, Scalar& lo, Scalar& hi, int max_doublings) {
  Scalar f_lo = f(lo);
  Scalar f_hi = f(hi);
  for (int i = 0;; ++i) {
    if ((f_lo <= 0) != (f_hi <= 0) || f_lo == 0 || f_hi == 0) return true;
    if (i >= max_doublings) return false;
    const Scalar centre = lo + (hi - lo) / 2;
    const Scalar half = (hi - lo);
    lo = centre - half;
    hi = centre + half;
    f_lo = f(lo);
    f_hi = f(hi);
  }
}

}  // namespace metabal
