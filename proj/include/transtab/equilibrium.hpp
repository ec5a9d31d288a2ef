#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "transtab/error.hpp"
#include "transtab/power_angle.hpp"

namespace transtab {

enum class BoundaryRegime { WithUep, WithoutUep };

inline const char* to_string(BoundaryRegime r) {
  return r == BoundaryRegime::WithUep ? "with_uep" : "without_uep";
}

struct EquilibriumSet {
  double sep = 0.0;
  std::optional<double> uep;
  BoundaryRegime regime = BoundaryRegime::WithoutUep;
  double delta_g_max = 0.0;
  // Negative-slope roots beyond the reported UEP, if any.
  std::vector<double> other_ueps;
};

// dP/d(delta_g) by central differences; one-sided when the stencil would
// leave the solvable range.
inline double power_slope(double delta_g, const GridCondition& c, double h = 1e-6) {
  const double dp_mid = solve_pll_angle(delta_g, c).delta_p;
  const double mapa = classify_existence(c).delta_g_max;
  if (delta_g + h <= mapa) {
    const double up = sg_power(delta_g + h, c, dp_mid).p;
    if (delta_g - h >= 0.0) {
      const double down = sg_power(delta_g - h, c, dp_mid).p;
      return (up - down) / (2.0 * h);
    }
    return (up - sg_power(delta_g, c, dp_mid).p) / h;
  }
  const double down = sg_power(delta_g - h, c, dp_mid).p;
  return (sg_power(delta_g, c, dp_mid).p - down) / h;
}

namespace detail {

// Bisection on P(delta) - p_m between two samples of opposite sign.
inline double refine_power_root(const GridCondition& c, double p_m, PowerPoint a, PowerPoint b) {
  double lo = a.delta_g;
  double hi = b.delta_g;
  double g_lo = a.p - p_m;
  double hint = a.delta_p;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    const PowerPoint m = sg_power(mid, c, hint);
    const double g = m.p - p_m;
    if (g == 0.0) return mid;
    if ((g > 0.0) == (g_lo > 0.0)) {
      lo = mid;
      g_lo = g;
      hint = m.delta_p;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// SEP and UEP of the swing dynamics under one (post-fault) condition.
inline EquilibriumSet find_equilibria(const GridCondition& c, double p_m,
                                      std::size_t samples = 2001) {
  const ExistenceRegime existence = classify_existence(c);
  if (!existence.solvable()) throw NoSep("PLL equilibrium never exists; no operating point");

  const std::vector<PowerPoint> curve = sample_curve(c, samples);

  std::optional<double> sep;
  std::vector<double> ueps;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double g0 = curve[i].p - p_m;
    const double g1 = curve[i + 1].p - p_m;
    const bool rising = g0 < 0.0 && g1 >= 0.0;
    const bool falling = g0 > 0.0 && g1 <= 0.0;
    if (!sep) {
      if (rising) {
        sep = (g1 == 0.0) ? curve[i + 1].delta_g
                          : detail::refine_power_root(c, p_m, curve[i], curve[i + 1]);
      } else if (falling) {
        break;  // curve starts above p_m: no stable crossing
      }
    } else if (falling) {
      ueps.push_back(g1 == 0.0 ? curve[i + 1].delta_g
                               : detail::refine_power_root(c, p_m, curve[i], curve[i + 1]));
    }
  }
  if (!sep) throw NoSep("mechanical power is not met on the rising part of the power-angle curve");

  EquilibriumSet out;
  out.sep = *sep;
  out.delta_g_max = existence.delta_g_max;
  if (!ueps.empty()) {
    out.uep = ueps.front();
    out.other_ueps.assign(ueps.begin() + 1, ueps.end());
    out.regime = BoundaryRegime::WithUep;
  } else {
    out.regime = BoundaryRegime::WithoutUep;
  }
  return out;
}

}  // namespace transtab
