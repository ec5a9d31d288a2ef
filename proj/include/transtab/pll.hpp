#pragma once

// Quasi-static PLL: the IBG reference frame sits wherever the q-axis
// terminal voltage vanishes. This header solves that algebraic condition,
// decides for which SG rotor angles it is solvable, and picks the branch on
// which the PLL loop has negative feedback.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "transtab/error.hpp"
#include "transtab/network.hpp"

namespace transtab {

// Injected IBG current. phi_i = 0 is pure active current, -pi/2 pure
// reactive (voltage support) current.
inline constexpr double kActiveMode = 0.0;
inline constexpr double kReactiveMode = -std::numbers::pi / 2.0;

struct IbgSetpoint {
  double i_mag = 0.0;
  double phi_i = 0.0;

  // cos(-pi/2) is not exactly zero in floating point.
  double i_d() const { return phi_i == kReactiveMode ? 0.0 : i_mag * std::cos(phi_i); }

  bool operator==(const IbgSetpoint&) const = default;
};

inline void validate(const IbgSetpoint& sp) {
  if (!std::isfinite(sp.i_mag) || sp.i_mag < 0.0)
    throw InvalidParameter("IBG current magnitude must be non-negative");
  if (!std::isfinite(sp.phi_i) || sp.phi_i < -std::numbers::pi / 2.0 - 1e-12 || sp.phi_i > 1e-12)
    throw InvalidParameter("IBG current phase must lie in [-pi/2, 0]");
}

// Everything the algebraic network equations need at one operating
// condition (pre-fault, fault-on or post-fault).
struct GridCondition {
  ReducedNetwork net;
  double e_g = 0.0;
  double u_0 = 0.0;
  IbgSetpoint ibg;

  double sg_phasor() const { return net.k1 * e_g; }    // K1*Eg
  double grid_phasor() const { return net.k2 * u_0; }  // K2*U0
  double current_term() const { return net.x_g5 * ibg.i_d(); }

  bool operator==(const GridCondition&) const = default;
};

struct PllSolution {
  double delta_p = 0.0;
  bool stable_branch = false;
};

struct ExistenceRegime {
  enum class Kind { AlwaysSolvable, BoundedByMapa, NeverSolvable };

  Kind kind = Kind::AlwaysSolvable;
  double delta_g_max = std::numbers::pi;  // NaN when never solvable

  bool solvable() const { return kind != Kind::NeverSolvable; }
};

inline const char* to_string(ExistenceRegime::Kind k) {
  switch (k) {
    case ExistenceRegime::Kind::AlwaysSolvable: return "always_solvable";
    case ExistenceRegime::Kind::BoundedByMapa: return "bounded_by_mapa";
    case ExistenceRegime::Kind::NeverSolvable: return "never_solvable";
  }
  return "unknown";
}

// q-axis terminal voltage in the PLL frame.
inline double pll_residual(double delta_p, double delta_g, const GridCondition& c) {
  return c.sg_phasor() * std::sin(delta_g - delta_p) - c.grid_phasor() * std::sin(delta_p) +
         c.current_term();
}

// -d(u_q)/d(delta_p); positive on the stable branch.
inline double pll_feedback(double delta_p, double delta_g, const GridCondition& c) {
  return c.sg_phasor() * std::cos(delta_g - delta_p) + c.grid_phasor() * std::cos(delta_p);
}

// Magnitude of K1*Eg*e^{j delta_g} + K2*U0, the open-circuit common-bus
// voltage seen through the Thevenin equivalent.
inline double thevenin_magnitude(double delta_g, const GridCondition& c) {
  const double a = c.sg_phasor();
  const double b = c.grid_phasor();
  return std::sqrt(std::max(0.0, a * a + b * b + 2.0 * a * b * std::cos(delta_g)));
}

// Left minus right side of the solvability inequality; >= 0 iff solvable.
inline double existence_margin(double delta_g, const GridCondition& c) {
  return thevenin_magnitude(delta_g, c) - c.current_term();
}

inline ExistenceRegime classify_existence(const GridCondition& c) {
  constexpr double kRelTol = 1e-9;
  const double a = c.sg_phasor();
  const double b = c.grid_phasor();
  const double x = c.current_term();
  const double lower = std::abs(a - b);
  const double upper = a + b;

  ExistenceRegime r;
  if (x == 0.0 || x < lower * (1.0 - kRelTol)) {
    r.kind = ExistenceRegime::Kind::AlwaysSolvable;
    r.delta_g_max = std::numbers::pi;
    return r;
  }
  if (x > upper * (1.0 + kRelTol)) {
    r.kind = ExistenceRegime::Kind::NeverSolvable;
    r.delta_g_max = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  const double cos_max = std::clamp((x * x - a * a - b * b) / (2.0 * a * b), -1.0, 1.0);
  r.kind = ExistenceRegime::Kind::BoundedByMapa;
  r.delta_g_max = std::acos(cos_max);
  return r;
}

namespace detail {

// Safeguarded Newton on a bracket where f(lo) > 0 >= f(hi) and f is
// decreasing. Falls back to bisection whenever the Newton step leaves the
// bracket or stalls.
template <typename F, typename DF>
double decreasing_root(F&& f, DF&& df, double lo, double hi, double x0) {
  double x = std::clamp(x0, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx > 0.0)
      lo = x;
    else
      hi = x;
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(x))) break;

    const double slope = df(x);
    double next = (slope < 0.0) ? x - fx / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step < 1e-15 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

}  // namespace detail

// Stable root of the PLL equilibrium equation at rotor angle delta_g.
// Without a hint the root lies in [0, 3pi/2] for delta_g in [0, pi]; with a
// hint the 2*pi image closest to it is returned so that trajectories stay
// continuous.
inline PllSolution solve_pll_angle(double delta_g, const GridCondition& c,
                                   std::optional<double> hint = std::nullopt) {
  constexpr double kTangentTol = 1e-12;
  const double a = c.sg_phasor();
  const double b = c.grid_phasor();
  const double x = c.current_term();
  const double r = thevenin_magnitude(delta_g, c);

  if (r < x - kTangentTol * std::max(1.0, x)) {
    throw LossOfSynchronism("PLL equilibrium does not exist at delta_g = " + std::to_string(delta_g),
                            delta_g);
  }
  if (r <= kTangentTol) {
    throw AmbiguousBranch("degenerate PLL equation: every angle is an equilibrium");
  }

  // u_q = r*sin(alpha - delta_p) + x; the stable branch is where
  // cos(alpha - delta_p) > 0, i.e. delta_p in (alpha - pi/2, alpha + pi/2),
  // on which u_q decreases monotonically.
  const double alpha = std::atan2(a * std::sin(delta_g), a * std::cos(delta_g) + b);
  const double lo = alpha - std::numbers::pi / 2.0;
  const double hi = alpha + std::numbers::pi / 2.0;

  auto f = [&](double dp) { return pll_residual(dp, delta_g, c); };
  auto df = [&](double dp) { return -pll_feedback(dp, delta_g, c); };

  double root;
  if (x >= r) {
    root = hi;  // tangency: the two roots coincide
  } else if (f(hi) > 0.0) {
    root = hi;  // rounding right at the tangency
  } else {
    root = detail::decreasing_root(f, df, lo, hi, alpha + std::asin(std::min(1.0, x / r)));
  }

  if (hint) {
    const double turns = std::round((*hint - root) / (2.0 * std::numbers::pi));
    root += turns * 2.0 * std::numbers::pi;
  }

  const double fb = pll_feedback(root, delta_g, c);
  const double mirror = 2.0 * alpha - std::numbers::pi - root;
  const double fb_mirror = pll_feedback(mirror, delta_g, c);
  const double tol = 1e-12 * std::max(1.0, a + b);
  if (fb > tol && fb_mirror > tol) {
    throw AmbiguousBranch("both PLL roots satisfy the feedback condition");
  }
  return PllSolution{root, fb > 0.0};
}

}  // namespace transtab
