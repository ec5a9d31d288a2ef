#pragma once

// Per-unit system parameters and the circuit reduction of the
// SG + IBG + infinite-bus prototype. All quantities are on the system base
// (10 MVA, 690 V, 100*pi rad/s) unless a field says otherwise.

#include <cmath>
#include <numbers>
#include <string>

#include "transtab/error.hpp"

namespace transtab {

struct SystemParams {
  double x_g1 = 0.2;             // infinite bus to common bus
  double x_g2_line = 0.1;        // SG terminal to common bus
  double x_d_prime_rated = 0.16; // SG transient reactance, SG rated base
  double x_g3 = 0.3;             // IBG branch
  double e_g = 1.15;             // SG internal EMF
  double u_0_nominal = 1.0;
  double u_0_fault = 0.1;
  double omega_n = 100.0 * std::numbers::pi;
  double s_sg = 1.0;             // SG capacity on system base
  double t_j_rated = 6.0;        // s, SG rated base
  double d_rated = 10.0;         // SG rated base
  double p_m = 1.0;

  bool operator==(const SystemParams&) const = default;
};

// Constants of the reduced two-source network seen from the common bus.
struct ReducedNetwork {
  double x_g1 = 0.0;
  double x_g2 = 0.0;  // scaled x'_d plus line
  double x_g3 = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double x_g4 = 0.0;
  double x_g5 = 0.0;

  bool operator==(const ReducedNetwork&) const = default;
};

// Swing-equation constants on the system base.
struct SgDynParams {
  double t_j = 0.0;
  double d = 0.0;
  double omega_0 = 1.0;

  bool operator==(const SgDynParams&) const = default;
};

struct ScaledSystem {
  ReducedNetwork net;
  SgDynParams sg;
  double x_d_prime = 0.0;
};

inline void validate(const SystemParams& p) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw InvalidParameter(msg);
  };
  require(std::isfinite(p.x_g1) && p.x_g1 > 0.0, "x_g1 must be positive");
  require(std::isfinite(p.x_g2_line) && p.x_g2_line > 0.0, "x_g2_line must be positive");
  require(std::isfinite(p.x_d_prime_rated) && p.x_d_prime_rated > 0.0,
          "x_d_prime_rated must be positive");
  require(std::isfinite(p.x_g3) && p.x_g3 > 0.0, "x_g3 must be positive");
  require(std::isfinite(p.e_g) && p.e_g > 0.0, "e_g must be positive");
  require(std::isfinite(p.u_0_nominal) && p.u_0_nominal > 0.0, "u_0_nominal must be positive");
  require(std::isfinite(p.u_0_fault) && p.u_0_fault >= 0.0, "u_0_fault must be non-negative");
  require(p.u_0_fault < p.u_0_nominal, "u_0_fault must be below u_0_nominal");
  require(std::isfinite(p.omega_n) && p.omega_n > 0.0, "omega_n must be positive");
  require(std::isfinite(p.s_sg) && p.s_sg > 0.0, "s_sg must be positive");
  require(std::isfinite(p.t_j_rated) && p.t_j_rated > 0.0, "t_j_rated must be positive");
  require(std::isfinite(p.d_rated) && p.d_rated >= 0.0, "d_rated must be non-negative");
  require(std::isfinite(p.p_m), "p_m must be finite");
}

// Thevenin reduction of the SG branch (x_g2) against the grid branch (x_g1).
inline ReducedNetwork reduce(double x_g1, double x_g2, double x_g3) {
  ReducedNetwork n;
  const double sum = x_g1 + x_g2;
  n.x_g1 = x_g1;
  n.x_g2 = x_g2;
  n.x_g3 = x_g3;
  n.k1 = x_g1 / sum;
  n.k2 = x_g2 / sum;
  n.x_g4 = x_g1 * x_g2 / sum;
  n.x_g5 = x_g3 + n.x_g4;
  return n;
}

// Converts SG-rated quantities to the system base: reactance scales
// inversely with capacity, inertia and damping proportionally.
inline ScaledSystem scale_to_capacity(const SystemParams& p) {
  if (!(p.s_sg > 0.0)) throw InvalidParameter("s_sg must be positive");
  validate(p);

  ScaledSystem out;
  out.x_d_prime = p.x_d_prime_rated / p.s_sg;
  out.net = reduce(p.x_g1, out.x_d_prime + p.x_g2_line, p.x_g3);
  out.sg.t_j = p.t_j_rated * p.s_sg;
  out.sg.d = p.d_rated * p.s_sg;
  out.sg.omega_0 = 1.0;
  return out;
}

}  // namespace transtab
