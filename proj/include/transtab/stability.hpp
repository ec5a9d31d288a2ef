#pragma once

// Post-fault stability region and critical clearing time.
//
// With a UEP below the maximum allowable angle the region is bounded by the
// UEP's stable manifold, obtained by reverse-time integration from the UEP
// along its stable eigenvector. Without one, the boundary is the reverse-time
// trajectory through (delta_g_max, omega_0): reaching the maximum allowable
// angle with zero speed deviation is the critical case.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "transtab/dynamics.hpp"
#include "transtab/equilibrium.hpp"
#include "transtab/error.hpp"

namespace transtab {

enum class BoundarySource { UepManifold, MapaCriticalState };

inline const char* to_string(BoundarySource s) {
  return s == BoundarySource::UepManifold ? "uep_manifold" : "mapa_critical_state";
}

struct StabilityBoundary {
  // Ordered by increasing delta_g along the upper (omega_g > omega_0) part,
  // through the critical state, then along the lower part if present.
  std::vector<RotorState> polyline;
  std::size_t critical_index = 0;
  BoundarySource source = BoundarySource::MapaCriticalState;
  BoundaryRegime regime = BoundaryRegime::WithoutUep;

  const RotorState& critical_state() const { return polyline.at(critical_index); }

  // Upper branch speed at `delta_g` by linear interpolation; empty outside
  // the branch's angle range.
  std::optional<double> upper_speed_at(double delta_g) const {
    if (polyline.empty() || critical_index == 0) return std::nullopt;
    const auto first = polyline.begin();
    const auto last = polyline.begin() + static_cast<std::ptrdiff_t>(critical_index) + 1;
    if (delta_g < first->delta_g || delta_g > (last - 1)->delta_g) return std::nullopt;
    auto hi = std::lower_bound(first, last, delta_g,
                               [](const RotorState& s, double d) { return s.delta_g < d; });
    if (hi == first) return hi->omega_g;
    auto lo = hi - 1;
    const double w = (delta_g - lo->delta_g) / (hi->delta_g - lo->delta_g);
    return lo->omega_g + w * (hi->omega_g - lo->omega_g);
  }
};

struct TraceOptions {
  double epsilon = 1e-4;       // UEP perturbation along the eigenvector, rad
  double slope_step = 1e-6;    // finite-difference step for dP/d(delta_g)
  BackwardOptions backward{};
};

// Stable eigenvalue and eigenvector (normalised to unit angle component) of
// the linearised swing model at an equilibrium with negative power slope.
struct SaddleDirection {
  double eigenvalue = 0.0;
  double speed_per_angle = 0.0;
};

inline SaddleDirection stable_direction(const SwingSystem& sys, double uep, double slope_step) {
  const double dp = power_slope(uep, sys.grid, slope_step);
  const double a = sys.sg.d / sys.sg.t_j;
  const double b = sys.omega_n * dp / sys.sg.t_j;
  // lambda^2 + a*lambda + b = 0 with b < 0 at a saddle.
  const double lambda = 0.5 * (-a - std::sqrt(a * a - 4.0 * b));
  return SaddleDirection{lambda, lambda / sys.omega_n};
}

inline StabilityBoundary trace_boundary(const EquilibriumSet& eq, const SwingSystem& post,
                                        const TraceOptions& opt = {}) {
  StabilityBoundary out;
  out.regime = eq.regime;
  const double w0 = post.sg.omega_0;

  auto to_states = [](const Trajectory& t) {
    std::vector<RotorState> v;
    v.reserve(t.samples.size());
    for (const auto& s : t.samples) v.push_back(s.state);
    return v;
  };

  if (eq.regime == BoundaryRegime::WithUep && eq.uep) {
    out.source = BoundarySource::UepManifold;
    const double uep = *eq.uep;
    const SaddleDirection dir = stable_direction(post, uep, opt.slope_step);
    const double eps = opt.epsilon;

    const RotorState upper_start{uep - eps, w0 - eps * dir.speed_per_angle};
    const RotorState lower_start{uep + eps, w0 + eps * dir.speed_per_angle};
    std::vector<RotorState> upper = to_states(integrate_backward(post, upper_start, opt.backward));
    std::vector<RotorState> lower;
    if (lower_start.delta_g <= eq.delta_g_max) {
      lower = to_states(integrate_backward(post, lower_start, opt.backward));
    }

    std::reverse(upper.begin(), upper.end());
    out.polyline = std::move(upper);
    out.critical_index = out.polyline.size();
    out.polyline.push_back({uep, w0});
    out.polyline.insert(out.polyline.end(), lower.begin(), lower.end());
    return out;
  }

  out.source = BoundarySource::MapaCriticalState;
  std::vector<RotorState> branch =
      to_states(integrate_backward(post, {eq.delta_g_max, w0}, opt.backward));
  std::reverse(branch.begin(), branch.end());
  out.polyline = std::move(branch);
  if (out.polyline.empty()) out.polyline.push_back({eq.delta_g_max, w0});
  out.critical_index = out.polyline.size() - 1;
  return out;
}

// Fast classification against the traced polyline. Only answers for states
// above synchronous speed within the traced angle range, or beyond the
// critical angle; otherwise empty.
inline std::optional<bool> boundary_precheck(const RotorState& x, const StabilityBoundary& b,
                                             double omega_0 = 1.0) {
  if (b.polyline.empty()) return std::nullopt;
  const RotorState& crit = b.critical_state();
  if (b.source == BoundarySource::MapaCriticalState && x.delta_g > crit.delta_g) return false;
  if (x.omega_g < omega_0) return std::nullopt;
  if (auto w = b.upper_speed_at(x.delta_g)) return x.omega_g < *w;
  return std::nullopt;
}

// Authoritative verdict: forward simulation under the post-fault condition
// converges to the SEP.
inline bool is_inside(const RotorState& x, const SwingSystem& post,
                      const IntegrateOptions& opt = {}) {
  return integrate(post, x, opt).termination == Termination::Converged;
}

inline bool is_inside(const RotorState& x, const StabilityBoundary&, const SwingSystem& post,
                      const IntegrateOptions& opt = {}) {
  return is_inside(x, post, opt);
}

struct CctOptions {
  double tolerance = 1e-3;
  double step = 1e-4;
  double t_end = 20.0;
  double initial_guess = 0.1;  // first fault duration probed for instability
  double max_duration = 5.0;
};

struct CctResult {
  double cct = 0.0;
  double cca = 0.0;
  double stable_duration = 0.0;    // lower bracket, verdict stable
  double unstable_duration = 0.0;  // upper bracket, verdict unstable
  Termination stable_verdict = Termination::Converged;
  Termination unstable_verdict = Termination::Diverged;
  double pre_fault_sep = 0.0;
  BoundaryRegime regime = BoundaryRegime::WithUep;
  double delta_g_max = 0.0;
};

// Bisection on the fault duration. The template's t_clear is ignored; the
// pre-fault operating point is the SEP under the normal condition.
inline CctResult compute_cct(const SwingSystem& base, const FaultScenario& tmpl,
                             const CctOptions& opt = {}) {
  if (!(opt.tolerance > 0.0)) throw InvalidParameter("CCT tolerance must be positive");
  const SwingSystem normal = with_condition(base, tmpl.normal);
  const EquilibriumSet eq = find_equilibria(normal.grid, normal.p_m);

  IntegrateOptions iopt;
  iopt.step = opt.step;
  iopt.t_end = opt.t_end;
  iopt.sep = eq.sep;
  const RotorState start{eq.sep, normal.sg.omega_0};

  auto run = [&](double duration) {
    FaultScenario s = tmpl;
    s.t_clear = tmpl.t_fault_on + duration;
    if (duration <= 0.0) return integrate(normal, start, iopt);
    IntegrateOptions o = iopt;
    o.t_end = std::max(opt.t_end, s.t_clear + opt.t_end - tmpl.t_fault_on);
    return integrate(base, start, s, o);
  };

  const Trajectory zero = run(0.0);
  if (!zero.stable()) throw NoCct("unstable without any fault", NoCct::Reason::UnstableAtZero);

  // Sustained fault: when does the PLL equilibrium disappear, if ever?
  std::optional<double> fault_los;
  {
    FaultScenario s = tmpl;
    s.t_clear = tmpl.t_fault_on + opt.max_duration + 1.0;
    IntegrateOptions o = iopt;
    o.t_end = s.t_clear;
    o.detect_convergence = false;
    const Trajectory t = integrate(base, start, s, o);
    if (t.termination == Termination::LossOfSynchronism && t.mapa_crossing_time)
      fault_los = *t.mapa_crossing_time - *t.fault_on_time;
  }

  double lo = 0.0;
  Trajectory lo_traj = zero;
  double hi = -1.0;
  Termination hi_verdict = Termination::Diverged;
  for (double d = opt.initial_guess;; d *= 2.0) {
    if (fault_los && d >= *fault_los) d = *fault_los;
    if (d > opt.max_duration) break;
    Trajectory t = run(d);
    if (t.stable()) {
      lo = d;
      lo_traj = std::move(t);
    } else {
      hi = d;
      hi_verdict = t.termination;
      break;
    }
    if (fault_los && d >= *fault_los) break;
  }
  if (hi < 0.0) {
    if (fault_los) {
      throw NoCct("only the fault-on loss of PLL synchronism destabilises the system",
                  NoCct::Reason::FaultOnLossOfSynchronism);
    }
    throw NoCct("no unstable clearing time found up to the search limit",
                NoCct::Reason::NoInstabilityFound);
  }
  if (fault_los && hi >= *fault_los && run(*fault_los - opt.step).stable()) {
    throw NoCct("instability coincides with the fault-on loss of PLL synchronism",
                NoCct::Reason::FaultOnLossOfSynchronism);
  }

  while (hi - lo > opt.tolerance) {
    const double mid = 0.5 * (lo + hi);
    Trajectory t = run(mid);
    if (t.stable()) {
      lo = mid;
      lo_traj = std::move(t);
    } else {
      hi = mid;
      hi_verdict = t.termination;
    }
  }

  CctResult r;
  r.stable_duration = lo;
  r.unstable_duration = hi;
  r.cct = 0.5 * (lo + hi);
  r.cca = lo_traj.clearing_angle.value_or(eq.sep);
  r.stable_verdict = lo_traj.termination;
  r.unstable_verdict = hi_verdict;
  r.pre_fault_sep = eq.sep;
  r.regime = eq.regime;
  r.delta_g_max = eq.delta_g_max;
  return r;
}

}  // namespace transtab
