#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "deform_cs/errors.hpp"

namespace dcs {

using Vec = Eigen::VectorXd;

/// Largest magnitude a state component may reach before a run is treated
/// as having hit a movable singularity.
inline constexpr double kOverflowGuard = 1e12;

/// One classical fourth-order Runge-Kutta step of y' = f(t, y).
template <class Rhs>
Vec rk4_step(const Rhs& f, double t, const Vec& y, double h) {
  const Vec k1 = f(t, y);
  const Vec k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
  const Vec k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
  const Vec k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct FixedStepRun {
  std::vector<double> t;
  std::vector<Vec> y;
  bool truncated = false;
  std::string diagnostic;
};

/// Number of equal steps covering [t0, t1] with step close to `step`.
inline long step_count(double t0, double t1, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidInput("step must be positive and finite");
  if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0)) throw InvalidInput("integration span must be nonempty");
  const double n = std::round((t1 - t0) / step);
  if (n > 1e8) throw InvalidInput("integration span needs more than 1e8 steps");
  return std::max(1L, static_cast<long>(n));
}

/// Fixed-step RK4 over [t0, t1]. The step is adjusted so the last node lands
/// on t1. Stops early, keeping everything computed so far, when the state
/// leaves the overflow guard or the right-hand side throws a singularity.
template <class Rhs>
FixedStepRun integrate_fixed(const Rhs& f, double t0, double t1, const Vec& y0, double step) {
  const long n = step_count(t0, t1, step);
  const double h = (t1 - t0) / static_cast<double>(n);
  FixedStepRun run;
  run.t.reserve(static_cast<std::size_t>(n) + 1);
  run.y.reserve(static_cast<std::size_t>(n) + 1);
  run.t.push_back(t0);
  run.y.push_back(y0);
  for (long i = 0; i < n; ++i) {
    const double t = t0 + static_cast<double>(i) * h;
    Vec next;
    try {
      next = rk4_step(f, t, run.y.back(), h);
    } catch (const SingularFlow& e) {
      run.truncated = true;
      run.diagnostic = std::string(e.what()) + " near t=" + std::to_string(t);
      return run;
    }
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kOverflowGuard) {
      run.truncated = true;
      run.diagnostic = "state exceeded overflow guard near t=" + std::to_string(t + h);
      return run;
    }
    run.t.push_back(i + 1 == n ? t1 : t0 + static_cast<double>(i + 1) * h);
    run.y.push_back(std::move(next));
  }
  return run;
}

}  // namespace dcs
