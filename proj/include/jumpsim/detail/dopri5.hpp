#ifndef JUMPSIM_DETAIL_DOPRI5_HPP
#define JUMPSIM_DETAIL_DOPRI5_HPP

#include <algorithm>
#include <cmath>
#include <functional>

#include "jumpsim/hamiltonian.hpp"

namespace jumpsim::detail {

struct Dopri5Options {
  double rtol = 1e-9;
  double atol = 1e-12;
  double initial_step = 1e-3;
  long max_steps = 50'000'000;
};

/**
 * Dormand-Prince 5(4) with elementary step-size control, advancing y from t0 to t1.
 *
 * State is any Eigen vector. `check` is called after every accepted step
 * and may throw to abort. Returns the last accepted step size so callers
 * can chain segments.
 */
template <class State, class Rhs, class Check>
double dopri5_integrate(Rhs&& rhs, State& y, double t0, double t1, const Dopri5Options& opt,
                        Check&& check, double h_hint = 0.0) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  if (t1 <= t0) return h_hint;
  double t = t0;
  double h = h_hint > 0.0 ? h_hint : opt.initial_step;
  State k1 = rhs(t, y), k2, k3, k4, k5, k6, k7, ytmp, ynew;
  long steps = 0;
  while (t < t1) {
    if (++steps > opt.max_steps) throw Error("ODE integration exceeded the step budget");
    bool last = false;
    const double h_free = h;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    }
    ytmp = y + h * (a21 * k1);
    k2 = rhs(t + c2 * h, ytmp);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    k3 = rhs(t + c3 * h, ytmp);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    k4 = rhs(t + c4 * h, ytmp);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    k5 = rhs(t + c5 * h, ytmp);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    k6 = rhs(t + h, ytmp);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = rhs(t + h, ynew);
    State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double norm = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double r = std::abs(err[i]) / scale;
      norm += r * r;
    }
    norm = std::sqrt(norm / static_cast<double>(y.size()));
    if (!std::isfinite(norm)) {
      h *= 0.1;
      if (h < 1e-300) throw Error("ODE integration step size underflow");
      continue;
    }
    if (norm <= 1.0) {
      t = last ? t1 : t + h;
      y = ynew;
      k1 = k7;
      check(t, y);
      const double fac = norm == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(norm, -0.2)));
      h = last ? std::max(h, h_free) : h * fac;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(norm, -0.2));
      if (h < 1e-300) throw Error("ODE integration step size underflow");
    }
  }
  return h;
}

}  // namespace jumpsim::detail

#endif  // JUMPSIM_DETAIL_DOPRI5_HPP
