#pragma once

// Rotor swing dynamics of the SG.
//
//   d(delta_g)/dt = omega_N (omega_g - omega_0)
//   T_J d(omega_g)/dt = P_m - P(delta_g) - D (omega_g - omega_0)
//
// P(delta_g) is evaluated with the quasi-static PLL unless the dynamic
// verification model is used. All integrators are classical fixed-step RK4;
// switching instants are snapped to the step grid.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "transtab/equilibrium.hpp"
#include "transtab/error.hpp"
#include "transtab/network.hpp"
#include "transtab/pll.hpp"
#include "transtab/power_angle.hpp"

namespace transtab {

struct RotorState {
  double delta_g = 0.0;
  double omega_g = 1.0;

  bool operator==(const RotorState&) const = default;
};

// One algebraic condition plus the SG mechanical side.
struct SwingSystem {
  GridCondition grid;
  SgDynParams sg;
  double omega_n = 100.0 * std::numbers::pi;
  double p_m = 0.0;
};

// Grid voltage and IBG current mode that hold between two switching events.
struct Condition {
  double u_0 = 1.0;
  IbgSetpoint ibg;

  bool operator==(const Condition&) const = default;
};

inline SwingSystem with_condition(SwingSystem s, const Condition& c) {
  s.grid.u_0 = c.u_0;
  s.grid.ibg = c.ibg;
  return s;
}

// Voltage dip between t_fault_on and t_clear; `normal` applies before and
// after, `fault` in between.
struct FaultScenario {
  double t_fault_on = 0.5;
  double t_clear = 0.76;
  Condition normal;
  Condition fault;

  bool operator==(const FaultScenario&) const = default;
};

inline void validate(const FaultScenario& f) {
  if (!(f.t_fault_on >= 0.0) || !(f.t_clear > f.t_fault_on))
    throw InvalidParameter("fault scenario needs 0 <= t_fault_on < t_clear");
  validate(f.normal.ibg);
  validate(f.fault.ibg);
}

enum class Termination { Converged, Diverged, LossOfSynchronism, TimeLimit, Truncated };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::Diverged: return "diverged";
    case Termination::LossOfSynchronism: return "loss_of_synchronism";
    case Termination::TimeLimit: return "time_limit";
    case Termination::Truncated: return "truncated";
  }
  return "unknown";
}

struct TrajectorySample {
  double t = 0.0;
  RotorState state;
  double delta_p = 0.0;
  double p = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  Termination termination = Termination::TimeLimit;
  double step = 0.0;
  // Switching instants after snapping to the step grid.
  std::optional<double> fault_on_time;
  std::optional<double> clear_time;
  // Rotor angle at the (snapped) clearing instant.
  std::optional<double> clearing_angle;
  // First instant the quasi-static PLL equilibrium ceased to exist.
  std::optional<double> mapa_crossing_time;
  // Dynamic model only: instant the PLL angle slipped away.
  std::optional<double> pll_loss_time;
  std::optional<double> out_of_step_time;

  const TrajectorySample& back() const { return samples.back(); }
  bool stable() const { return termination == Termination::Converged; }
};

struct IntegrateOptions {
  double step = 1e-4;
  double t_end = 20.0;
  std::size_t output_stride = 10;
  bool detect_convergence = true;
  double speed_tol = 1e-6;
  double angle_tol = 1e-4;
  double dwell = 1.0;
  // |delta_g| beyond this is a pole slip.
  double divergence_angle = 2.0 * std::numbers::pi;
  // Post-fault SEP; computed when absent.
  std::optional<double> sep;
};

struct SwingRates {
  double d_delta = 0.0;
  double d_omega = 0.0;
  double delta_p = 0.0;
  double p = 0.0;
};

inline SwingRates swing_rhs(const SwingSystem& sys, const RotorState& x,
                            std::optional<double> hint = std::nullopt) {
  const PllSolution pll = solve_pll_angle(x.delta_g, sys.grid, hint);
  const double p = sg_active_power(x.delta_g, pll.delta_p, sys.grid);
  const double dw = x.omega_g - sys.sg.omega_0;
  return SwingRates{sys.omega_n * dw, (sys.p_m - p - sys.sg.d * dw) / sys.sg.t_j, pll.delta_p, p};
}

namespace detail {

inline std::int64_t snap(double t, double step) {
  return static_cast<std::int64_t>(std::llround(t / step));
}

// One RK4 step of the (optionally time-reversed) quasi-static swing model.
// k1 is passed in so the caller can record delta_p and P at the step start.
inline RotorState rk4_step(const SwingSystem& sys, const RotorState& x, const SwingRates& k1,
                           double h, double direction) {
  const double hs = h * direction;
  const SwingRates k2 = swing_rhs(
      sys, {x.delta_g + 0.5 * hs * k1.d_delta, x.omega_g + 0.5 * hs * k1.d_omega}, k1.delta_p);
  const SwingRates k3 = swing_rhs(
      sys, {x.delta_g + 0.5 * hs * k2.d_delta, x.omega_g + 0.5 * hs * k2.d_omega}, k1.delta_p);
  const SwingRates k4 =
      swing_rhs(sys, {x.delta_g + hs * k3.d_delta, x.omega_g + hs * k3.d_omega}, k1.delta_p);
  return RotorState{
      x.delta_g + hs / 6.0 * (k1.d_delta + 2.0 * k2.d_delta + 2.0 * k3.d_delta + k4.d_delta),
      x.omega_g + hs / 6.0 * (k1.d_omega + 2.0 * k2.d_omega + 2.0 * k3.d_omega + k4.d_omega)};
}

struct Schedule {
  SwingSystem normal;
  SwingSystem fault;
  std::int64_t on_step = -1;  // -1: no event
  std::int64_t clear_step = -1;

  bool has_fault() const { return on_step >= 0; }
  bool faulted(std::int64_t k) const { return has_fault() && k >= on_step && k < clear_step; }
  // First step index after which the condition never changes again.
  std::int64_t settled_from() const { return has_fault() ? clear_step : 0; }
  const SwingSystem& at(std::int64_t k) const { return faulted(k) ? fault : normal; }
};

inline std::optional<double> post_fault_sep(const SwingSystem& sys, const IntegrateOptions& opt) {
  if (opt.sep) return opt.sep;
  if (!opt.detect_convergence) return std::nullopt;
  try {
    return find_equilibria(sys.grid, sys.p_m).sep;
  } catch (const NoSep&) {
    return std::nullopt;
  }
}

// Tracks the convergence dwell window.
class ConvergenceMonitor {
 public:
  ConvergenceMonitor(std::optional<double> sep, const IntegrateOptions& opt, double omega_0)
      : sep_(sep), opt_(opt), omega_0_(omega_0) {}

  bool enabled() const { return opt_.detect_convergence && sep_.has_value(); }

  // Returns true once the state has stayed in the target box for `dwell`.
  bool update(double t, const RotorState& x, bool armed) {
    if (!enabled() || !armed) {
      since_.reset();
      return false;
    }
    const bool inside = std::abs(x.omega_g - omega_0_) < opt_.speed_tol &&
                        std::abs(x.delta_g - *sep_) < opt_.angle_tol;
    if (!inside) {
      since_.reset();
      return false;
    }
    if (!since_) since_ = t;
    return t - *since_ >= opt_.dwell - 1e-12;
  }

 private:
  std::optional<double> sep_;
  IntegrateOptions opt_;
  double omega_0_;
  std::optional<double> since_;
};

inline Trajectory run_schedule(const Schedule& sched, const RotorState& initial,
                               const IntegrateOptions& opt) {
  if (!(opt.step > 0.0)) throw InvalidParameter("integration step must be positive");
  if (!(opt.t_end >= 0.0)) throw InvalidParameter("t_end must be non-negative");
  if (opt.output_stride == 0) throw InvalidParameter("output stride must be at least 1");

  Trajectory traj;
  traj.step = opt.step;
  if (sched.has_fault()) {
    traj.fault_on_time = sched.on_step * opt.step;
    traj.clear_time = sched.clear_step * opt.step;
  }

  ConvergenceMonitor monitor(post_fault_sep(sched.normal, opt), opt, sched.normal.sg.omega_0);
  const std::int64_t n_steps = snap(opt.t_end, opt.step);

  RotorState x = initial;
  std::optional<double> hint;
  SwingRates k1;
  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * opt.step;
    const SwingSystem& sys = sched.at(k);
    if (sched.has_fault() && k == sched.clear_step) traj.clearing_angle = x.delta_g;

    try {
      k1 = swing_rhs(sys, x, hint);
    } catch (const LossOfSynchronism&) {
      traj.mapa_crossing_time = t;
      traj.samples.push_back({t, x, hint.value_or(0.0), std::nan("")});
      traj.termination = Termination::LossOfSynchronism;
      return traj;
    }
    hint = k1.delta_p;

    const bool converged = monitor.update(t, x, k >= sched.settled_from());
    const bool diverged = std::abs(x.delta_g) > opt.divergence_angle;
    const bool last = k >= n_steps;
    if (k % static_cast<std::int64_t>(opt.output_stride) == 0 || converged || diverged || last) {
      traj.samples.push_back({t, x, k1.delta_p, k1.p});
    }
    if (converged) {
      traj.termination = Termination::Converged;
      return traj;
    }
    if (diverged) {
      traj.termination = Termination::Diverged;
      return traj;
    }
    if (last) {
      traj.termination = Termination::TimeLimit;
      return traj;
    }

    try {
      x = rk4_step(sys, x, k1, opt.step, 1.0);
    } catch (const LossOfSynchronism&) {
      // An intermediate stage left the solvable range; the step end is
      // beyond the maximum allowable angle as well.
      traj.mapa_crossing_time = t + opt.step;
      traj.samples.push_back({t + opt.step, x, k1.delta_p, std::nan("")});
      traj.termination = Termination::LossOfSynchronism;
      return traj;
    }
    if (!std::isfinite(x.delta_g) || !std::isfinite(x.omega_g)) {
      traj.termination = Termination::Diverged;
      return traj;
    }
  }
}

}  // namespace detail

// Constant-condition integration from `initial`.
inline Trajectory integrate(const SwingSystem& sys, const RotorState& initial,
                            const IntegrateOptions& opt = {}) {
  detail::Schedule sched{sys, sys};
  return detail::run_schedule(sched, initial, opt);
}

// Integration through a fault: `base` supplies the network and SG data, the
// scenario supplies the conditions and switching instants.
inline Trajectory integrate(const SwingSystem& base, const RotorState& initial,
                            const FaultScenario& scenario, const IntegrateOptions& opt = {}) {
  validate(scenario);
  if (!(opt.step > 0.0)) throw InvalidParameter("integration step must be positive");
  detail::Schedule sched;
  sched.normal = with_condition(base, scenario.normal);
  sched.fault = with_condition(base, scenario.fault);
  sched.on_step = detail::snap(scenario.t_fault_on, opt.step);
  sched.clear_step = detail::snap(scenario.t_clear, opt.step);
  if (sched.clear_step <= sched.on_step) sched.clear_step = sched.on_step + 1;
  return detail::run_schedule(sched, initial, opt);
}

struct BackwardOptions {
  double step = 1e-4;
  double t_span = 10.0;
  std::size_t output_stride = 10;
  double min_delta = 0.0;
  // Truncate once |omega_g - omega_0| exceeds this.
  double max_speed_deviation = 0.1;
};

// Integrates the swing model in reverse time from `terminal`. Sample times
// are elapsed reverse time (0 at the terminal state).
inline Trajectory integrate_backward(const SwingSystem& sys, const RotorState& terminal,
                                     const BackwardOptions& opt = {}) {
  if (!(opt.step > 0.0)) throw InvalidParameter("integration step must be positive");
  if (opt.output_stride == 0) throw InvalidParameter("output stride must be at least 1");

  Trajectory traj;
  traj.step = opt.step;
  const std::int64_t n_steps = detail::snap(opt.t_span, opt.step);

  RotorState x = terminal;
  std::optional<double> hint;
  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * opt.step;
    SwingRates k1;
    try {
      k1 = swing_rhs(sys, x, hint);
    } catch (const LossOfSynchronism&) {
      traj.termination = Termination::Truncated;
      return traj;
    }
    hint = k1.delta_p;

    if (k == 0 && k1.d_delta == 0.0 && std::abs(k1.d_omega) < 1e-10) {
      traj.samples.push_back({t, x, k1.delta_p, k1.p});
      traj.termination = Termination::Converged;  // equilibrium: nothing to trace
      return traj;
    }

    const bool out = x.delta_g < opt.min_delta ||
                     std::abs(x.omega_g - sys.sg.omega_0) > opt.max_speed_deviation;
    const bool last = k >= n_steps;
    if (!out && (k % static_cast<std::int64_t>(opt.output_stride) == 0 || last)) {
      traj.samples.push_back({t, x, k1.delta_p, k1.p});
    }
    if (out) {
      traj.termination = Termination::Truncated;
      return traj;
    }
    if (last) {
      traj.termination = Termination::TimeLimit;
      return traj;
    }
    try {
      x = detail::rk4_step(sys, x, k1, opt.step, -1.0);
    } catch (const LossOfSynchronism&) {
      traj.termination = Termination::Truncated;
      return traj;
    }
    if (!std::isfinite(x.delta_g) || !std::isfinite(x.omega_g)) {
      traj.termination = Termination::Truncated;
      return traj;
    }
  }
}

// ---------------------------------------------------------------------------
// Dynamic PLL verification model
// ---------------------------------------------------------------------------

// PI synchronous-reference-frame PLL acting on u_q, and a first-order lag
// between the current reference and the injected current.
struct PllGains {
  double kp = 0.0;
  double ki = 0.0;
  double current_tau = 0.0;  // s
};

// Gains for a second-order PLL loop with natural frequency `bandwidth_hz`
// and damping `zeta`, linearised with u_q sensitivity `voltage_sensitivity`
// (-du_q/d(delta_p) at the operating point).
inline PllGains default_pll_gains(double voltage_sensitivity, double bandwidth_hz = 20.0,
                                  double zeta = 0.707, double current_bandwidth_hz = 200.0) {
  if (!(voltage_sensitivity > 0.0)) throw InvalidParameter("voltage sensitivity must be positive");
  const double wn = 2.0 * std::numbers::pi * bandwidth_hz;
  PllGains g;
  g.kp = 2.0 * zeta * wn / voltage_sensitivity;
  g.ki = wn * wn / voltage_sensitivity;
  g.current_tau = 1.0 / (2.0 * std::numbers::pi * current_bandwidth_hz);
  return g;
}

struct DynamicOptions : IntegrateOptions {
  // Keep integrating after the PLL slips to watch the SG fall out of step.
  bool stop_on_pll_loss = true;
};

namespace detail {

struct DynState {
  double delta_g = 0.0;
  double omega_g = 1.0;
  double delta_p = 0.0;
  double pll_integrator = 0.0;  // rad/s
  double i_re = 0.0;
  double i_im = 0.0;

  DynState axpy(double h, const DynState& d) const {
    return {delta_g + h * d.delta_g,  omega_g + h * d.omega_g, delta_p + h * d.delta_p,
            pll_integrator + h * d.pll_integrator, i_re + h * d.i_re, i_im + h * d.i_im};
  }
};

inline DynState dynamic_rhs(const SwingSystem& sys, const PllGains& g, const DynState& x,
                            double* p_out = nullptr) {
  const Phasor current(x.i_re, x.i_im);
  const Phasor u_t = terminal_voltage_phasor(x.delta_g, current, sys.grid) *
                     std::polar(1.0, -x.delta_p);
  const double u_q = u_t.imag();
  const double p = sg_complex_power(x.delta_g, current, sys.grid).real();
  if (p_out) *p_out = p;

  const Phasor i_ref = ibg_current(x.delta_p, sys.grid.ibg);
  const double dw = x.omega_g - sys.sg.omega_0;
  DynState d;
  d.delta_g = sys.omega_n * dw;
  d.omega_g = (sys.p_m - p - sys.sg.d * dw) / sys.sg.t_j;
  d.delta_p = g.kp * u_q + x.pll_integrator;
  d.pll_integrator = g.ki * u_q;
  d.i_re = (i_ref.real() - x.i_re) / g.current_tau;
  d.i_im = (i_ref.imag() - x.i_im) / g.current_tau;
  return d;
}

}  // namespace detail

// Fault simulation with the PLL and current loop modelled dynamically.
// The PLL is declared lost once delta_p - delta_g drifts 2*pi beyond the
// quasi-static range [-pi, pi/2].
inline Trajectory simulate_dynamic(const SwingSystem& base, const RotorState& initial,
                                   const FaultScenario& scenario, const PllGains& gains,
                                   const DynamicOptions& opt = {}) {
  validate(scenario);
  if (!(gains.kp > 0.0) || !(gains.ki > 0.0) || !(gains.current_tau > 0.0))
    throw InvalidParameter("PLL gains and current time constant must be positive");
  if (!(opt.step > 0.0)) throw InvalidParameter("integration step must be positive");
  if (opt.output_stride == 0) throw InvalidParameter("output stride must be at least 1");

  detail::Schedule sched;
  sched.normal = with_condition(base, scenario.normal);
  sched.fault = with_condition(base, scenario.fault);
  sched.on_step = detail::snap(scenario.t_fault_on, opt.step);
  sched.clear_step = std::max(detail::snap(scenario.t_clear, opt.step), sched.on_step + 1);

  Trajectory traj;
  traj.step = opt.step;
  traj.fault_on_time = sched.on_step * opt.step;
  traj.clear_time = sched.clear_step * opt.step;

  detail::DynState x;
  x.delta_g = initial.delta_g;
  x.omega_g = initial.omega_g;
  {
    const SwingSystem& s0 = sched.at(0);
    x.delta_p = solve_pll_angle(initial.delta_g, s0.grid).delta_p;
    const Phasor i0 = ibg_current(x.delta_p, s0.grid.ibg);
    x.i_re = i0.real();
    x.i_im = i0.imag();
  }

  detail::ConvergenceMonitor monitor(detail::post_fault_sep(sched.normal, opt), opt,
                                     sched.normal.sg.omega_0);
  const std::int64_t n_steps = detail::snap(opt.t_end, opt.step);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * opt.step;
    const SwingSystem& sys = sched.at(k);
    if (k == sched.clear_step) traj.clearing_angle = x.delta_g;

    if (!traj.mapa_crossing_time && existence_margin(x.delta_g, sys.grid) < 0.0)
      traj.mapa_crossing_time = t;

    const double rel = x.delta_p - x.delta_g;
    const bool pll_lost = rel > std::numbers::pi / 2.0 + kTwoPi || rel < -std::numbers::pi - kTwoPi;
    if (pll_lost && !traj.pll_loss_time) traj.pll_loss_time = t;

    double p = 0.0;
    const detail::DynState k1 = detail::dynamic_rhs(sys, gains, x, &p);

    const RotorState rs{x.delta_g, x.omega_g};
    const bool converged = monitor.update(t, rs, k >= sched.settled_from());
    const bool diverged = std::abs(x.delta_g) > opt.divergence_angle || !std::isfinite(x.delta_g);
    const bool stop_pll = pll_lost && opt.stop_on_pll_loss;
    const bool last = k >= n_steps;
    if (k % static_cast<std::int64_t>(opt.output_stride) == 0 || converged || diverged ||
        stop_pll || last) {
      traj.samples.push_back({t, rs, x.delta_p, p});
    }
    if (diverged) traj.out_of_step_time = t;
    if (stop_pll) {
      traj.termination = Termination::LossOfSynchronism;
      return traj;
    }
    if (converged) {
      traj.termination = Termination::Converged;
      return traj;
    }
    if (diverged) {
      traj.termination = Termination::Diverged;
      return traj;
    }
    if (last) {
      traj.termination = Termination::TimeLimit;
      return traj;
    }

    const double h = opt.step;
    const detail::DynState k2 = detail::dynamic_rhs(sys, gains, x.axpy(0.5 * h, k1));
    const detail::DynState k3 = detail::dynamic_rhs(sys, gains, x.axpy(0.5 * h, k2));
    const detail::DynState k4 = detail::dynamic_rhs(sys, gains, x.axpy(h, k3));
    x = x.axpy(h / 6.0, k1).axpy(h / 3.0, k2).axpy(h / 3.0, k3).axpy(h / 6.0, k4);
  }
}

}  // namespace transtab
