#pragma once

// SG power-angle relationship with the IBG attached: common-bus voltage,
// IBG terminal voltage in the PLL frame, and SG electrical power.

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "transtab/error.hpp"
#include "transtab/pll.hpp"

namespace transtab {

using Phasor = std::complex<double>;

struct BusVoltage {
  double magnitude = 0.0;
  double angle = 0.0;
};

struct TerminalVoltage {
  double u_d = 0.0;
  double u_q = 0.0;
};

struct PowerPoint {
  double delta_g = 0.0;
  double p = 0.0;
  double q = 0.0;
  double delta_p = 0.0;
};

// Injected current phasor in the synchronous frame.
inline Phasor ibg_current(double delta_p, const IbgSetpoint& sp) {
  return std::polar(sp.i_mag, delta_p + sp.phi_i);
}

// Superposition of the SG, grid and IBG contributions at the common bus,
// for an arbitrary current phasor (used by the dynamic PLL model too).
inline Phasor bus_voltage_phasor(double delta_g, Phasor current, const GridCondition& c) {
  const Phasor j(0.0, 1.0);
  return c.sg_phasor() * std::polar(1.0, delta_g) + c.grid_phasor() + j * c.net.x_g4 * current;
}

inline Phasor terminal_voltage_phasor(double delta_g, Phasor current, const GridCondition& c) {
  const Phasor j(0.0, 1.0);
  return c.sg_phasor() * std::polar(1.0, delta_g) + c.grid_phasor() + j * c.net.x_g5 * current;
}

inline BusVoltage bus_voltage(double delta_g, double delta_p, const GridCondition& c) {
  const Phasor u = bus_voltage_phasor(delta_g, ibg_current(delta_p, c.ibg), c);
  return BusVoltage{std::abs(u), std::arg(u)};
}

inline TerminalVoltage terminal_voltage(double delta_g, double delta_p, const GridCondition& c) {
  const Phasor u = terminal_voltage_phasor(delta_g, ibg_current(delta_p, c.ibg), c) *
                   std::polar(1.0, -delta_p);
  return TerminalVoltage{u.real(), u.imag()};
}

// SG complex output power from the internal EMF and the common-bus voltage.
inline Phasor sg_complex_power(double delta_g, Phasor current, const GridCondition& c) {
  const Phasor j(0.0, 1.0);
  const Phasor e = std::polar(c.e_g, delta_g);
  const Phasor u = bus_voltage_phasor(delta_g, current, c);
  return e * std::conj((e - u) / (j * c.net.x_g2));
}

// Power-angle curve with the IBG disconnected.
inline double p0(double delta_g, const GridCondition& c) {
  return c.e_g * c.u_0 * std::sin(delta_g) / (c.net.x_g1 + c.net.x_g2);
}

// Closed form of the SG active power for a known PLL angle.
inline double sg_active_power(double delta_g, double delta_p, const GridCondition& c) {
  return p0(delta_g, c) -
         c.sg_phasor() * c.ibg.i_mag * std::cos(delta_g - delta_p - c.ibg.phi_i);
}

inline PowerPoint sg_power(double delta_g, const GridCondition& c,
                           std::optional<double> hint = std::nullopt) {
  const PllSolution pll = solve_pll_angle(delta_g, c, hint);
  const double p = sg_active_power(delta_g, pll.delta_p, c);
  const Phasor s = sg_complex_power(delta_g, ibg_current(pll.delta_p, c.ibg), c);

  const double scale = 1.0 + std::abs(s);
  if (!(std::abs(s.real() - p) <= 1e-9 * scale)) {
    throw Error("active power closed form disagrees with the complex power evaluation");
  }
  return PowerPoint{delta_g, p, s.imag(), pll.delta_p};
}

// Angle at which the IBG term of the active power changes sign, present only
// when K1*Eg + Xg5*i_d < K2*U0. Above it the curve sits over P0.
inline std::optional<double> crossing_angle(const GridCondition& c) {
  const double lhs = c.sg_phasor() + c.current_term();
  const double rhs = c.grid_phasor();
  if (!(lhs < rhs)) return std::nullopt;
  return std::acos(-lhs / rhs);
}

// Uniform samples of the curve on [0, delta_end]. delta_end defaults to the
// maximum allowable power angle.
inline std::vector<PowerPoint> sample_curve(const GridCondition& c, std::size_t count = 2001,
                                            std::optional<double> delta_end = std::nullopt) {
  if (count < 2) throw InvalidParameter("curve needs at least two samples");
  const ExistenceRegime regime = classify_existence(c);
  if (!regime.solvable()) {
    throw LossOfSynchronism("PLL equilibrium never exists for this condition", 0.0);
  }
  const double end = delta_end.value_or(regime.delta_g_max);

  std::vector<PowerPoint> out;
  out.reserve(count);
  std::optional<double> hint;
  for (std::size_t i = 0; i < count; ++i) {
    const double dg = (i + 1 == count) ? end : end * static_cast<double>(i) / (count - 1);
    out.push_back(sg_power(dg, c, hint));
    hint = out.back().delta_p;
  }
  return out;
}

}  // namespace transtab
