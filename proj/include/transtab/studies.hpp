#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "transtab/config.hpp"
#include "transtab/csv.hpp"
#include "transtab/dynamics.hpp"
#include "transtab/equilibrium.hpp"
#include "transtab/power_angle.hpp"
#include "transtab/stability.hpp"

namespace transtab {

struct RunOptions {
  double step = 1e-4;
  double cct_tolerance = 1e-3;
  unsigned workers = 1;
  std::size_t curve_samples = 2001;
};

// Everything one scenario needs, derived once from its parameters.
struct ScenarioModel {
  ScaledSystem scaled;
  SwingSystem normal;  // pre- and post-fault
  SwingSystem fault;
  FaultScenario scenario;
};

inline ScenarioModel build_model(const Scenario& s) {
  ScenarioModel m;
  m.scaled = scale_to_capacity(s.params);
  m.scenario = s.fault_scenario();
  SwingSystem base;
  base.grid = GridCondition{m.scaled.net, s.params.e_g, s.params.u_0_nominal, s.normal};
  base.sg = m.scaled.sg;
  base.omega_n = s.params.omega_n;
  base.p_m = s.params.p_m;
  m.normal = with_condition(base, m.scenario.normal);
  m.fault = with_condition(base, m.scenario.fault);
  return m;
}

inline PllGains scenario_pll_gains(const Scenario& s, const ScenarioModel& m) {
  const double sep = find_equilibria(m.normal.grid, m.normal.p_m).sep;
  const double dp = solve_pll_angle(sep, m.normal.grid).delta_p;
  PllGains g = default_pll_gains(pll_feedback(dp, sep, m.normal.grid));
  if (s.pll_kp) g.kp = *s.pll_kp;
  if (s.pll_ki) g.ki = *s.pll_ki;
  if (s.current_tau) g.current_tau = *s.current_tau;
  return g;
}

// --- CSV emitters -----------------------------------------------------------

inline std::string curve_csv(const GridCondition& c, std::size_t samples) {
  csv::Writer w({"delta_g_rad", "delta_p_rad", "p_pu", "q_pu", "p0_pu"});
  for (const PowerPoint& pt : sample_curve(c, samples))
    w.row(std::vector<double>{pt.delta_g, pt.delta_p, pt.p, pt.q, p0(pt.delta_g, c)});
  return w.str();
}

inline std::string trajectory_csv(const Trajectory& t) {
  csv::Writer w({"t_s", "delta_g_rad", "omega_g_pu", "delta_p_rad", "p_pu"});
  for (const auto& s : t.samples)
    w.row(std::vector<double>{s.t, s.state.delta_g, s.state.omega_g, s.delta_p, s.p});
  w.comment(std::string("termination=") + to_string(t.termination));
  return w.str();
}

inline std::string boundary_csv(const StabilityBoundary& b) {
  csv::Writer w({"delta_g_rad", "omega_g_pu"});
  for (const auto& p : b.polyline) w.row(std::vector<double>{p.delta_g, p.omega_g});
  w.comment(std::string("source=") + to_string(b.source));
  w.comment(std::string("regime=") + to_string(b.regime));
  return w.str();
}

inline csv::Writer cct_table() {
  return csv::Writer({"case_id", "cct_s", "cca_rad", "regime", "mapa_rad"});
}

inline std::vector<std::string> cct_row(const std::string& id, const CctResult& r) {
  return {id, csv::format_number(r.cct), csv::format_number(r.cca), to_string(r.regime),
          csv::format_number(r.delta_g_max)};
}

// --- Sweeps -------------------------------------------------------------------

struct SweepRow {
  double s_ibg = 0.0;
  double s_sg = 0.0;
  double i_mag = 0.0;
  double p_m = 0.0;
  std::optional<double> cct;
  std::optional<double> mapa;
  std::optional<BoundaryRegime> regime;
  std::string status = "ok";
};

struct SweepTable {
  std::string name;
  SweepQuantity quantity = SweepQuantity::IbgProportionFixedTotal;
  std::vector<SweepRow> rows;

  std::string csv() const {
    csv::Writer w({"s_ibg_pu", "s_sg_pu", "i_mag_pu", "p_m_pu", "cct_s", "mapa_rad", "regime",
                   "status"});
    for (const auto& r : rows) {
      w.row(std::vector<std::string>{
          csv::format_number(r.s_ibg), csv::format_number(r.s_sg), csv::format_number(r.i_mag),
          csv::format_number(r.p_m), r.cct ? csv::format_number(*r.cct) : "",
          r.mapa ? csv::format_number(*r.mapa) : "", r.regime ? to_string(*r.regime) : "",
          r.status});
    }
    w.comment(std::string("quantity=") + to_string(quantity));
    return w.str();
  }
};

// Scenario at one sweep point: the base scenario with capacities, current
// and mechanical power replaced.
inline Scenario sweep_point(const SweepSpec& spec, const Scenario& base, double s_ibg) {
  Scenario s = base;
  if (spec.quantity == SweepQuantity::IbgProportionFixedTotal) {
    s.params.s_sg = spec.total_capacity - s_ibg;
    s.params.p_m = s.params.s_sg;
  } else {
    s.params.s_sg = 1.0;
    s.params.p_m = 1.0;
  }
  s.normal.i_mag = s_ibg;
  s.fault.i_mag = s_ibg;
  s.name = base.name + "@" + csv::format_number(s_ibg);
  return s;
}

inline SweepRow evaluate_sweep_point(const SweepSpec& spec, const Scenario& base, double s_ibg,
                                     const RunOptions& opt) {
  SweepRow row;
  row.s_ibg = s_ibg;
  try {
    const Scenario s = sweep_point(spec, base, s_ibg);
    row.s_sg = s.params.s_sg;
    row.i_mag = s.normal.i_mag;
    row.p_m = s.params.p_m;
    const ScenarioModel m = build_model(s);
    const ExistenceRegime ex = classify_existence(m.normal.grid);
    if (ex.solvable()) row.mapa = ex.delta_g_max;
    CctOptions co;
    co.step = opt.step;
    co.tolerance = opt.cct_tolerance;
    const CctResult r = compute_cct(m.normal, m.scenario, co);
    row.cct = r.cct;
    row.regime = r.regime;
  } catch (const NoCct& e) {
    row.status = std::string("no_cct:") + to_string(e.reason());
  } catch (const NoSep&) {
    row.status = "no_sep";
  } catch (const Error& e) {
    row.status = std::string("error:") + e.what();
  }
  return row;
}

// Maps `fn` over [0, n) with up to `workers` threads; results keep index
// order regardless of scheduling.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, unsigned workers, Fn&& fn) {
  std::vector<T> out(n);
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
    });
  }
  pool.clear();  // joins
  return out;
}

inline SweepTable run_sweep(const SweepSpec& spec, const Scenario& base,
                            const RunOptions& opt = {}) {
  validate(spec);
  const std::vector<double> pts = spec.points();
  SweepTable t;
  t.name = spec.name;
  t.quantity = spec.quantity;
  t.rows = parallel_map<SweepRow>(pts.size(), opt.workers, [&](std::size_t i) {
    return evaluate_sweep_point(spec, base, pts[i], opt);
  });
  return t;
}

// --- Scenario runner ----------------------------------------------------------

struct ReportFile {
  std::string name;
  std::string content;
};

struct AnalysisOutcome {
  Analysis analysis;
  bool ok = true;
  std::string message;
};

struct ReportBundle {
  std::string scenario;
  std::vector<ReportFile> files;
  std::vector<AnalysisOutcome> outcomes;
  std::string summary;

  bool ok() const {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.ok; });
  }
  const ReportFile* file(std::string_view name) const {
    for (const auto& f : files)
      if (f.name == name) return &f;
    return nullptr;
  }
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace detail

// Runs every requested analysis; failures are recorded per analysis and do
// not stop the rest. `study` supplies sweep definitions for Analysis::Sweep.
inline ReportBundle run_scenario(const Scenario& s, const RunOptions& opt = {},
                                 const StudyFile* study = nullptr) {
  using detail::deg;
  using detail::fmt;
  ReportBundle b;
  b.scenario = s.name;
  if (s.analyses.empty()) return b;

  std::optional<ScenarioModel> model;
  try {
    model = build_model(s);
  } catch (const Error& e) {
    for (Analysis a : s.analyses) b.outcomes.push_back({a, false, e.what()});
    b.summary = "[" + s.name + "] invalid parameters: " + e.what() + "\n";
    return b;
  }
  const ScenarioModel& m = *model;

  std::string text = "[" + s.name + "]\n";
  for (Analysis a : s.analyses) {
    AnalysisOutcome out{a, true, {}};
    try {
      switch (a) {
        case Analysis::Curve: {
          b.files.push_back({s.name + "_curve.csv", curve_csv(m.normal.grid, opt.curve_samples)});
          b.files.push_back(
              {s.name + "_curve_fault.csv",
               curve_csv(m.fault.grid, opt.curve_samples)});
          text += "  curve: " + std::to_string(opt.curve_samples) + " samples (normal, fault-on)\n";
          break;
        }
        case Analysis::Mapa: {
          csv::Writer w({"condition", "existence", "mapa_rad"});
          for (const auto& [label, sys] :
               {std::pair<const char*, const SwingSystem*>{"normal", &m.normal},
                {"fault", &m.fault}}) {
            const ExistenceRegime r = classify_existence(sys->grid);
            w.row(std::vector<std::string>{label, to_string(r.kind),
                                           csv::format_number(r.delta_g_max)});
            text += std::string("  mapa(") + label + "): " + to_string(r.kind) +
                    (r.solvable() ? ", delta_g_max = " + fmt("%.4f", r.delta_g_max) + " rad (" +
                                        fmt("%.2f", deg(r.delta_g_max)) + " deg)"
                                  : std::string()) +
                    "\n";
          }
          b.files.push_back({s.name + "_mapa.csv", w.str()});
          break;
        }
        case Analysis::Equilibria: {
          const EquilibriumSet eq = find_equilibria(m.normal.grid, m.normal.p_m);
          csv::Writer w({"sep_rad", "uep_rad", "regime", "mapa_rad"});
          w.row(std::vector<std::string>{csv::format_number(eq.sep),
                                         eq.uep ? csv::format_number(*eq.uep) : "",
                                         to_string(eq.regime), csv::format_number(eq.delta_g_max)});
          b.files.push_back({s.name + "_equilibria.csv", w.str()});
          text += "  equilibria: sep = " + fmt("%.4f", eq.sep) + " rad, uep = " +
                  (eq.uep ? fmt("%.4f", *eq.uep) + " rad" : std::string("none")) +
                  ", regime " + to_string(eq.regime) + "\n";
          break;
        }
        case Analysis::Boundary: {
          const EquilibriumSet eq = find_equilibria(m.normal.grid, m.normal.p_m);
          TraceOptions to;
          to.backward.step = opt.step;
          const StabilityBoundary bd = trace_boundary(eq, m.normal, to);
          b.files.push_back({s.name + "_boundary.csv", boundary_csv(bd)});
          text += std::string("  boundary: ") + std::to_string(bd.polyline.size()) +
                  " points, source " + to_string(bd.source) + "\n";
          break;
        }
        case Analysis::Cct: {
          CctOptions co;
          co.step = opt.step;
          co.tolerance = opt.cct_tolerance;
          const CctResult r = compute_cct(m.normal, m.scenario, co);
          csv::Writer w = cct_table();
          w.row(cct_row(s.name, r));
          b.files.push_back({s.name + "_cct.csv", w.str()});
          text += "  cct: " + fmt("%.4f", r.cct) + " s (stable at " +
                  fmt("%.4f", r.stable_duration) + ", unstable at " +
                  fmt("%.4f", r.unstable_duration) + "), cca = " + fmt("%.4f", r.cca) + " rad (" +
                  fmt("%.2f", deg(r.cca)) + " deg), regime " + to_string(r.regime) +
                  ", mapa = " + fmt("%.4f", r.delta_g_max) + " rad\n";
          break;
        }
        case Analysis::Simulate: {
          const EquilibriumSet eq = find_equilibria(m.normal.grid, m.normal.p_m);
          IntegrateOptions io;
          io.step = opt.step;
          io.sep = eq.sep;
          const Trajectory t =
              integrate(m.normal, {eq.sep, m.normal.sg.omega_0}, m.scenario, io);
          b.files.push_back({s.name + "_trajectory.csv", trajectory_csv(t)});
          text += "  simulate: clear at " + fmt("%.4f", s.t_clear) + " s -> " +
                  to_string(t.termination) + "\n";
          break;
        }
        case Analysis::Dynamic: {
          const EquilibriumSet eq = find_equilibria(m.normal.grid, m.normal.p_m);
          DynamicOptions dopt;
          dopt.step = opt.step;
          dopt.sep = eq.sep;
          const Trajectory t = simulate_dynamic(m.normal, {eq.sep, m.normal.sg.omega_0},
                                                m.scenario, scenario_pll_gains(s, m), dopt);
          b.files.push_back({s.name + "_dynamic.csv", trajectory_csv(t)});
          text += "  dynamic: clear at " + fmt("%.4f", s.t_clear) + " s -> " +
                  to_string(t.termination) + "\n";
          break;
        }
        case Analysis::Sweep: {
          if (!study) throw ConfigError("sweep requested without a study file");
          bool any = false;
          for (const SweepSpec& sp : study->sweeps) {
            if (sp.base != s.name) continue;
            any = true;
            const SweepTable t = run_sweep(sp, s, opt);
            b.files.push_back({sp.name + "_sweep.csv", t.csv()});
            text += "  sweep " + sp.name + ": " + std::to_string(t.rows.size()) + " points\n";
          }
          if (!any) throw ConfigError("no sweep uses scenario '" + s.name + "' as its base");
          break;
        }
      }
    } catch (const Error& e) {
      out.ok = false;
      out.message = e.what();
      text += std::string("  ") + to_string(a) + ": FAILED: " + e.what() + "\n";
    }
    b.outcomes.push_back(std::move(out));
  }
  b.summary = text;
  return b;
}

inline void write_bundle(const ReportBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& f : b.files) {
    std::ofstream out(dir / f.name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / f.name).string());
    out << f.content;
  }
}

}  // namespace transtab
