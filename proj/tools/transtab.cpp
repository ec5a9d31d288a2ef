// transtab: command-line front end for the SMIB + IBG transient stability
// toolkit. Exit codes: 0 success, 1 analysis failure, 2 configuration error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "transtab/transtab.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kAnalysisFailure = 1;
constexpr int kConfigError = 2;

struct GlobalArgs {
  std::string config;
  std::string scenario;
  std::string sweep;
  std::string out = ".";
  double step = 1e-4;
  double tol = 1e-3;
  unsigned workers = 1;
  std::optional<double> clear;
  bool dynamic = false;
};

transtab::StudyFile load(const GlobalArgs& g) {
  return g.config.empty() ? transtab::builtin_study() : transtab::load_study(g.config);
}

std::vector<transtab::Scenario> select_scenarios(const transtab::StudyFile& st,
                                                 const GlobalArgs& g) {
  if (!g.scenario.empty()) return {st.scenario(g.scenario)};
  if (st.scenarios.empty()) throw transtab::ConfigError("config defines no scenarios");
  return st.scenarios;
}

transtab::RunOptions run_options(const GlobalArgs& g) {
  if (!(g.step > 0.0)) throw transtab::ConfigError("--step must be positive");
  if (!(g.tol > 0.0)) throw transtab::ConfigError("--tol must be positive");
  transtab::RunOptions o;
  o.step = g.step;
  o.cct_tolerance = g.tol;
  o.workers = g.workers == 0 ? 1 : g.workers;
  return o;
}

int emit(const transtab::ReportBundle& b, const std::filesystem::path& out) {
  transtab::write_bundle(b, out);
  std::cout << b.summary;
  return b.ok() ? kOk : kAnalysisFailure;
}

int run_analysis(transtab::Analysis a, const GlobalArgs& g) {
  const transtab::StudyFile st = load(g);
  const transtab::RunOptions opt = run_options(g);
  int rc = kOk;
  for (transtab::Scenario s : select_scenarios(st, g)) {
    s.analyses = {a};
    if (g.clear) s.t_clear = s.t_fault_on + *g.clear;
    if (a == transtab::Analysis::Simulate && g.dynamic) s.analyses = {transtab::Analysis::Dynamic};
    if (emit(transtab::run_scenario(s, opt, &st), g.out) != kOk) rc = kAnalysisFailure;
  }
  return rc;
}

int run_sweeps(const GlobalArgs& g, bool print) {
  const transtab::StudyFile st = load(g);
  const transtab::RunOptions opt = run_options(g);
  std::vector<transtab::SweepSpec> specs;
  if (!g.sweep.empty())
    specs.push_back(st.sweep(g.sweep));
  else
    specs = st.sweeps;
  if (specs.empty()) throw transtab::ConfigError("config defines no sweeps");

  int rc = kOk;
  std::filesystem::create_directories(g.out);
  for (const auto& sp : specs) {
    const std::string base_name = !g.scenario.empty() ? g.scenario : sp.base;
    if (base_name.empty()) throw transtab::ConfigError("sweep '" + sp.name + "' has no base");
    const transtab::SweepTable t = transtab::run_sweep(sp, st.scenario(base_name), opt);
    std::ofstream(std::filesystem::path(g.out) / (sp.name + "_sweep.csv")) << t.csv();
    if (print) {
      std::cout << "[sweep " << sp.name << "] " << transtab::to_string(sp.quantity) << "\n";
      std::cout << t.csv();
    }
    for (const auto& r : t.rows)
      if (r.status != "ok") rc = kAnalysisFailure;
  }
  return rc;
}

int reproduce(const GlobalArgs& g) {
  const transtab::StudyFile st = load(g);
  const transtab::RunOptions opt = run_options(g);
  std::filesystem::create_directories(g.out);

  int rc = kOk;
  std::string summary;
  transtab::csv::Writer ccts = transtab::cct_table();
  for (const auto& s : select_scenarios(st, g)) {
    const transtab::ReportBundle b = transtab::run_scenario(s, opt, &st);
    transtab::write_bundle(b, g.out);
    summary += b.summary;
    if (!b.ok()) rc = kAnalysisFailure;
    if (const auto* f = b.file(s.name + "_cct.csv")) {
      const transtab::csv::Table t = transtab::csv::parse(f->content);
      for (const auto& row : t.rows) ccts.row(row);
    }
  }
  std::ofstream(std::filesystem::path(g.out) / "cct_summary.csv") << ccts.str();

  GlobalArgs sg = g;
  sg.scenario.clear();
  if (!st.sweeps.empty() && run_sweeps(sg, false) != kOk) rc = kAnalysisFailure;
  for (const auto& sp : st.sweeps) summary += "[sweep " + sp.name + "] -> " + sp.name + "_sweep.csv\n";

  std::ofstream(std::filesystem::path(g.out) / "summary.txt") << summary;
  std::cout << summary;
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transient stability of an SMIB system with a current-controlled IBG"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--config", g.config, "Study file (built-in Cases A/B/C when omitted)");
  app.add_option("--scenario", g.scenario, "Run only this scenario");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--step", g.step, "Integration step, s")->capture_default_str();
  app.add_option("--tol", g.tol, "CCT bisection tolerance, s")->capture_default_str();
  app.add_option("--workers", g.workers, "Parallel sweep workers")->capture_default_str();

  struct Cmd {
    const char* name;
    const char* help;
    transtab::Analysis analysis;
  };
  const Cmd cmds[] = {
      {"curve", "Power-angle curves (normal and fault-on) as CSV", transtab::Analysis::Curve},
      {"mapa", "PLL existence regime and maximum allowable power angle", transtab::Analysis::Mapa},
      {"equilibria", "Post-fault SEP/UEP", transtab::Analysis::Equilibria},
      {"boundary", "Stability boundary polyline", transtab::Analysis::Boundary},
      {"cct", "Critical clearing time by bisection", transtab::Analysis::Cct},
      {"simulate", "Fault trajectory", transtab::Analysis::Simulate},
  };
  std::optional<transtab::Analysis> chosen;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->callback([&chosen, a = c.analysis] { chosen = a; });
    if (c.analysis == transtab::Analysis::Simulate) {
      sub->add_option("--clear", g.clear, "Fault duration, s (overrides t_clear)");
      sub->add_flag("--dynamic", g.dynamic, "Use the dynamic PLL/current-loop model");
    }
  }
  auto* sweep = app.add_subcommand("sweep", "Capacity sweeps (CCT and MAPA)");
  sweep->add_option("--sweep", g.sweep, "Run only this sweep");
  auto* repro = app.add_subcommand("reproduce-paper", "Cases A/B/C and both capacity sweeps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (chosen) return run_analysis(*chosen, g);
    if (sweep->parsed()) return run_sweeps(g, true);
    if (repro->parsed()) return reproduce(g);
  } catch (const transtab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const transtab::InvalidParameter& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kAnalysisFailure;
  }
  return kConfigError;
}
