#pragma once

#include "oracles.hpp"
#include "transtab/transtab.hpp"

namespace support {

inline transtab::GridCondition condition(const oracle::Circuit& c) {
  transtab::GridCondition g;
  g.net = transtab::reduce(c.x1, c.x2, c.x3);
  g.e_g = c.e_g;
  g.u_0 = c.u_0;
  g.ibg = {c.i_mag, c.phi};
  return g;
}

inline oracle::Circuit circuit(const transtab::GridCondition& g) {
  return {g.net.x_g1, g.net.x_g2, g.net.x_g3, g.e_g, g.u_0, g.ibg.i_mag, g.ibg.phi_i};
}

// Reference parameter set with the given SG capacity, IBG current and
// mechanical power; normal (active-current) condition.
inline transtab::SwingSystem reference_system(double s_sg, double i_mag, double p_m) {
  transtab::SystemParams p;
  p.s_sg = s_sg;
  p.p_m = p_m;
  const transtab::ScaledSystem sc = transtab::scale_to_capacity(p);
  transtab::SwingSystem sys;
  sys.grid = {sc.net, p.e_g, p.u_0_nominal, {i_mag, transtab::kActiveMode}};
  sys.sg = sc.sg;
  sys.omega_n = p.omega_n;
  sys.p_m = p_m;
  return sys;
}

inline transtab::SwingSystem case_a() { return reference_system(1.0, 0.5, 1.0); }
inline transtab::SwingSystem case_b() { return reference_system(0.5, 1.0, 0.5); }
inline transtab::SwingSystem case_c() { return reference_system(1.0, 1.0, 1.0); }

// Voltage dip to 0.1 pu at 0.5 s with reactive current support.
inline transtab::FaultScenario dip(const transtab::SwingSystem& sys, double duration) {
  transtab::FaultScenario f;
  f.t_fault_on = 0.5;
  f.t_clear = 0.5 + duration;
  f.normal = {1.0, {sys.grid.ibg.i_mag, transtab::kActiveMode}};
  f.fault = {0.1, {sys.grid.ibg.i_mag, transtab::kReactiveMode}};
  return f;
}

}  // namespace support
