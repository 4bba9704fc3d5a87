#pragma once

// Internal adaptive-quadrature helpers on top of GSL (Gauss-Kronrod).

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "nld/errors.hpp"

namespace nld::quad {

struct Result {
  double value = 0;
  double error = 0;
};

namespace detail {

inline gsl_integration_workspace* workspace() {
  thread_local gsl_integration_workspace* ws = nullptr;
  if (!ws) {
    gsl_set_error_handler_off();
    ws = gsl_integration_workspace_alloc(4096);
  }
  return ws;
}

inline double call_fn(double x, void* p) {
  auto* f = static_cast<const std::function<double(double)>*>(p);
  return (*f)(x);
}

}  // namespace detail

namespace detail {
inline bool soft_status(int s) {
  return s == GSL_EROUND || s == GSL_EMAXITER || s == GSL_ESING || s == GSL_EDIVERGE;
}
}  // namespace detail

/// Adaptive Gauss-Kronrod on [a, b]. Tolerance-class failures (roundoff,
/// cancellation noise) return the best estimate with an inflated error bound;
/// only hard failures throw.
inline Result integrate(const std::function<double(double)>& f, double a, double b,
                        double epsrel = 1e-11, double epsabs = 1e-14) {
  if (a >= b) return {0, 0};
  gsl_function gf{detail::call_fn, const_cast<std::function<double(double)>*>(&f)};
  Result r;
  int status = gsl_integration_qag(&gf, a, b, epsabs, epsrel, 4096, GSL_INTEG_GAUSS31,
                                   detail::workspace(), &r.value, &r.error);
  if (detail::soft_status(status)) {
    double v1 = r.value, e1 = r.error;
    status = gsl_integration_qags(&gf, a, b, epsabs, epsrel, 4096, detail::workspace(), &r.value,
                                  &r.error);
    if (detail::soft_status(status)) {
      r.error = 10 * std::max({r.error, e1, std::abs(r.value - v1)});
      status = 0;
    }
  }
  if (status)
    throw DivergenceError(
        "quadrature failed on [" + std::to_string(a) + ", " + std::to_string(b) + "]", "interior");
  return r;
}

/// Adaptive quadrature with interior breakpoints (sorted, deduplicated here).
inline Result integrate_pts(const std::function<double(double)>& f, double a, double b,
                            std::vector<double> pts, double epsrel = 1e-11,
                            double epsabs = 1e-14) {
  pts.push_back(a);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  Result total;
  double prev = a;
  for (double p : pts) {
    p = std::clamp(p, a, b);
    if (p > prev) {
      Result r = integrate(f, prev, p, epsrel, epsabs);
      total.value += r.value;
      total.error += r.error;
      prev = p;
    }
  }
  if (prev < b) {
    Result r = integrate(f, prev, b, epsrel, epsabs);
    total.value += r.value;
    total.error += r.error;
  }
  return total;
}

/// ∫_a^∞ f, assuming f decays; DivergenceError("...", "infinity") when the
/// geometric continuation keeps growing.
inline Result integrate_to_inf(const std::function<double(double)>& f, double a,
                               double epsrel = 1e-11, double epsabs = 1e-14) {
  // map [a, inf) through geometric windows; sum until increments are negligible
  double lo = a;
  double width = std::max(1.0, std::abs(a));
  Result total;
  double last_inc = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    double hi = lo + width;
    Result r = integrate(f, lo, hi, epsrel, epsabs);
    total.value += r.value;
    total.error += r.error;
    double inc = std::abs(r.value);
    if (inc <= epsabs + epsrel * std::abs(total.value)) {
      total.error += inc;
      return total;
    }
    if (k > 40 && inc > 0.999 * last_inc && inc > 1e3 * epsabs &&
        inc > 1e-8 * std::abs(total.value))
      throw DivergenceError("integral diverges at infinity", "infinity");
    last_inc = inc;
    lo = hi;
    width *= 2;
  }
  throw DivergenceError("integral did not settle at infinity", "infinity");
}

/// ∫_0^b f with a possible singularity at 0. Divergence is decided on the
/// first dyadic windows (a divergent power keeps its increments from
/// decaying); once increments have decayed, a later bounce is rounding noise
/// from cancellation-built integrands and ends the refinement with an
/// inflated error instead.
inline Result improper_at_zero(const std::function<double(double)>& f, double b,
                               double epsrel = 1e-11, double epsabs = 1e-14) {
  if (b <= 0) return {0, 0};
  Result total;
  double hi = b;
  double first_inc = -1, min_inc = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2000; ++k) {
    double lo = hi / 2;
    Result r = integrate(f, lo, hi, epsrel, epsabs);
    total.value += r.value;
    total.error += r.error;
    double inc = std::abs(r.value);
    if (first_inc < 0 && inc > 0) first_inc = inc;
    if (inc <= epsabs + 0.5 * epsrel * std::abs(total.value) && k >= 12) {
      total.error += 2 * inc;
      return total;
    }
    // cancellation noise: increments that decayed and now grow again carry no
    // true mass; stop refining before the noise amplifies
    if (k >= 16 && min_inc < 0.1 * first_inc && inc > 4 * min_inc) {
      total.error += 20 * inc;
      return total;
    }
    // divergence: the increments of a divergent power never decay
    if (k > 40 && min_inc >= 0.45 * first_inc && inc > 1e3 * epsabs &&
        inc > 1e-6 * std::abs(total.value))
      throw DivergenceError("integral diverges at the origin", "origin");
    min_inc = std::min(min_inc, inc);
    hi = lo;
  }
  total.error += 20 * min_inc;
  return total;
}

}  // namespace nld::quad
