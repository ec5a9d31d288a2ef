#pragma once

// Study files: flat `key = value` lines grouped by section headers.
//
//   # global defaults, apply to every scenario below
//   x_g1 = 0.2
//
//   [scenario.case_a]
//   i_mag = 0.5
//   p_m = 1.0
//   analyses = curve, mapa, cct
//
//   [sweep.fig4a]
//   quantity = ibg_proportion_fixed_total
//   start = 0.25
//   stop = 1.25
//   count = 8
//   base = case_a

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "transtab/csv.hpp"
#include "transtab/dynamics.hpp"
#include "transtab/error.hpp"
#include "transtab/network.hpp"
#include "transtab/pll.hpp"

namespace transtab {

enum class Analysis { Curve, Mapa, Equilibria, Boundary, Cct, Simulate, Dynamic, Sweep };

inline constexpr Analysis kAllAnalyses[] = {Analysis::Curve,    Analysis::Mapa,
                                            Analysis::Equilibria, Analysis::Boundary,
                                            Analysis::Cct,      Analysis::Simulate,
                                            Analysis::Dynamic,  Analysis::Sweep};

inline const char* to_string(Analysis a) {
  switch (a) {
    case Analysis::Curve: return "curve";
    case Analysis::Mapa: return "mapa";
    case Analysis::Equilibria: return "equilibria";
    case Analysis::Boundary: return "boundary";
    case Analysis::Cct: return "cct";
    case Analysis::Simulate: return "simulate";
    case Analysis::Dynamic: return "dynamic";
    case Analysis::Sweep: return "sweep";
  }
  return "unknown";
}

inline Analysis parse_analysis(std::string_view s) {
  for (Analysis a : kAllAnalyses)
    if (s == to_string(a)) return a;
  throw ConfigError("unknown analysis '" + std::string(s) + "'");
}

struct Scenario {
  std::string name;
  SystemParams params;
  IbgSetpoint normal{0.0, kActiveMode};
  IbgSetpoint fault{0.0, kReactiveMode};
  double t_fault_on = 0.5;
  double t_clear = 0.76;
  std::vector<Analysis> analyses;
  // Dynamic-PLL verification gains; derived from the operating point when
  // absent.
  std::optional<double> pll_kp;
  std::optional<double> pll_ki;
  std::optional<double> current_tau;

  FaultScenario fault_scenario() const {
    FaultScenario f;
    f.t_fault_on = t_fault_on;
    f.t_clear = t_clear;
    f.normal = Condition{params.u_0_nominal, normal};
    f.fault = Condition{params.u_0_fault, fault};
    return f;
  }

  bool operator==(const Scenario&) const = default;
};

enum class SweepQuantity { IbgProportionFixedTotal, IbgCapacityFixedSg };

inline const char* to_string(SweepQuantity q) {
  return q == SweepQuantity::IbgProportionFixedTotal ? "ibg_proportion_fixed_total"
                                                     : "ibg_capacity_fixed_sg";
}

struct SweepSpec {
  std::string name;
  SweepQuantity quantity = SweepQuantity::IbgProportionFixedTotal;
  double start = 0.25;
  double stop = 1.25;
  std::size_t count = 8;
  double total_capacity = 1.5;  // fixed-total sweeps
  std::string base;             // scenario supplying everything else

  std::vector<double> points() const {
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) {
      v[i] = (i + 1 == count) ? stop
                              : start + (stop - start) * static_cast<double>(i) / (count - 1);
    }
    return v;
  }

  bool operator==(const SweepSpec&) const = default;
};

inline void validate(const SweepSpec& s) {
  if (s.count < 2) throw ConfigError("sweep '" + s.name + "' needs count >= 2");
  if (!(s.stop > s.start)) throw ConfigError("sweep '" + s.name + "' range must be increasing");
  if (!(s.total_capacity > 0.0)) throw ConfigError("sweep '" + s.name + "' total capacity <= 0");
}

struct StudyFile {
  SystemParams defaults;
  std::vector<Scenario> scenarios;
  std::vector<SweepSpec> sweeps;

  const Scenario& scenario(std::string_view name) const {
    for (const auto& s : scenarios)
      if (s.name == name) return s;
    throw ConfigError("unknown scenario '" + std::string(name) + "'");
  }

  const SweepSpec& sweep(std::string_view name) const {
    for (const auto& s : sweeps)
      if (s.name == name) return s;
    throw ConfigError("unknown sweep '" + std::string(name) + "'");
  }

  bool operator==(const StudyFile&) const = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& v, const std::string& key, int line) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0')
    throw ConfigError("line " + std::to_string(line) + ": '" + key + "' expects a number");
  return d;
}

// Field table shared by the reader and the writer so the two cannot drift.
inline const std::vector<std::pair<const char*, double SystemParams::*>>& param_fields() {
  static const std::vector<std::pair<const char*, double SystemParams::*>> f = {
      {"x_g1", &SystemParams::x_g1},
      {"x_g2_line", &SystemParams::x_g2_line},
      {"x_d_prime_rated", &SystemParams::x_d_prime_rated},
      {"x_g3", &SystemParams::x_g3},
      {"e_g", &SystemParams::e_g},
      {"u_0_nominal", &SystemParams::u_0_nominal},
      {"u_0_fault", &SystemParams::u_0_fault},
      {"omega_n", &SystemParams::omega_n},
      {"s_sg", &SystemParams::s_sg},
      {"t_j_rated", &SystemParams::t_j_rated},
      {"d_rated", &SystemParams::d_rated},
      {"p_m", &SystemParams::p_m},
  };
  return f;
}

inline bool set_param(SystemParams& p, const std::string& key, const std::string& v, int line) {
  for (const auto& [name, field] : param_fields()) {
    if (key == name) {
      p.*field = parse_double(v, key, line);
      return true;
    }
  }
  return false;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

inline StudyFile parse_study(std::string_view text) {
  StudyFile study;
  enum class Section { Global, Scenario, Sweep } section = Section::Global;

  // Scenario keys are collected first so that global defaults written after
  // a section header still apply.
  struct PendingScenario {
    std::string name;
    std::vector<std::tuple<std::string, std::string, int>> entries;
  };
  std::vector<PendingScenario> pending;

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad header");
      const std::string head = detail::trim(line.substr(1, line.size() - 2));
      auto named = [&](std::string_view prefix) -> std::optional<std::string> {
        if (head.rfind(prefix, 0) != 0) return std::nullopt;
        std::string n = detail::trim(head.substr(prefix.size()));
        if (n.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty name");
        return n;
      };
      if (head == "defaults") {
        section = Section::Global;
      } else if (auto n = named("scenario.")) {
        for (const auto& p : pending)
          if (p.name == *n) throw ConfigError("duplicate scenario '" + *n + "'");
        pending.push_back({*n, {}});
        section = Section::Scenario;
      } else if (auto n2 = named("sweep.")) {
        for (const auto& s : study.sweeps)
          if (s.name == *n2) throw ConfigError("duplicate sweep '" + *n2 + "'");
        SweepSpec s;
        s.name = *n2;
        study.sweeps.push_back(s);
        section = Section::Sweep;
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown section '" + head + "'");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));

    switch (section) {
      case Section::Global:
        if (!detail::set_param(study.defaults, key, value, line_no))
          throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        break;
      case Section::Scenario:
        pending.back().entries.emplace_back(key, value, line_no);
        break;
      case Section::Sweep: {
        SweepSpec& s = study.sweeps.back();
        if (key == "quantity") {
          if (value == to_string(SweepQuantity::IbgProportionFixedTotal))
            s.quantity = SweepQuantity::IbgProportionFixedTotal;
          else if (value == to_string(SweepQuantity::IbgCapacityFixedSg))
            s.quantity = SweepQuantity::IbgCapacityFixedSg;
          else
            throw ConfigError("line " + std::to_string(line_no) + ": unknown sweep quantity");
        } else if (key == "start") {
          s.start = detail::parse_double(value, key, line_no);
        } else if (key == "stop") {
          s.stop = detail::parse_double(value, key, line_no);
        } else if (key == "count") {
          const double c = detail::parse_double(value, key, line_no);
          if (c < 0.0 || c != std::floor(c))
            throw ConfigError("line " + std::to_string(line_no) + ": count must be a whole number");
          s.count = static_cast<std::size_t>(c);
        } else if (key == "total_capacity") {
          s.total_capacity = detail::parse_double(value, key, line_no);
        } else if (key == "base") {
          s.base = value;
        } else if (key == "outputs") {
          for (const auto& o : detail::split_list(value))
            if (o != "cct" && o != "mapa")
              throw ConfigError("line " + std::to_string(line_no) + ": unknown sweep output");
        } else {
          throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        break;
      }
    }
  }

  for (const auto& p : pending) {
    Scenario s;
    s.name = p.name;
    s.params = study.defaults;
    bool fault_mag_set = false;
    for (const auto& [key, value, ln] : p.entries) {
      if (detail::set_param(s.params, key, value, ln)) continue;
      if (key == "i_mag") {
        s.normal.i_mag = detail::parse_double(value, key, ln);
      } else if (key == "phi_i") {
        s.normal.phi_i = detail::parse_double(value, key, ln);
      } else if (key == "i_mag_fault") {
        s.fault.i_mag = detail::parse_double(value, key, ln);
        fault_mag_set = true;
      } else if (key == "phi_i_fault") {
        s.fault.phi_i = detail::parse_double(value, key, ln);
      } else if (key == "t_fault_on") {
        s.t_fault_on = detail::parse_double(value, key, ln);
      } else if (key == "t_clear") {
        s.t_clear = detail::parse_double(value, key, ln);
      } else if (key == "pll_kp") {
        s.pll_kp = detail::parse_double(value, key, ln);
      } else if (key == "pll_ki") {
        s.pll_ki = detail::parse_double(value, key, ln);
      } else if (key == "current_tau") {
        s.current_tau = detail::parse_double(value, key, ln);
      } else if (key == "analyses") {
        s.analyses.clear();
        for (const auto& a : detail::split_list(value)) s.analyses.push_back(parse_analysis(a));
      } else {
        throw ConfigError("line " + std::to_string(ln) + ": unknown key '" + key + "'");
      }
    }
    if (!fault_mag_set) s.fault.i_mag = s.normal.i_mag;
    try {
      validate(s.params);
      validate(s.normal);
      validate(s.fault);
      validate(s.fault_scenario());
    } catch (const InvalidParameter& e) {
      throw ConfigError("scenario '" + s.name + "': " + e.what());
    }
    study.scenarios.push_back(std::move(s));
  }

  for (const auto& s : study.sweeps) {
    validate(s);
    if (!s.base.empty()) (void)study.scenario(s.base);
  }
  return study;
}

inline StudyFile load_study(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_study(ss.str());
}

// Writes every field explicitly so that parse_study(write_study(s)) == s.
inline std::string write_study(const StudyFile& study) {
  using csv::format_number;
  std::string out = "[defaults]\n";
  for (const auto& [name, field] : detail::param_fields())
    out += std::string(name) + " = " + format_number(study.defaults.*field) + "\n";

  for (const auto& s : study.scenarios) {
    out += "\n[scenario." + s.name + "]\n";
    for (const auto& [name, field] : detail::param_fields())
      out += std::string(name) + " = " + format_number(s.params.*field) + "\n";
    out += "i_mag = " + format_number(s.normal.i_mag) + "\n";
    out += "phi_i = " + format_number(s.normal.phi_i) + "\n";
    out += "i_mag_fault = " + format_number(s.fault.i_mag) + "\n";
    out += "phi_i_fault = " + format_number(s.fault.phi_i) + "\n";
    out += "t_fault_on = " + format_number(s.t_fault_on) + "\n";
    out += "t_clear = " + format_number(s.t_clear) + "\n";
    if (s.pll_kp) out += "pll_kp = " + format_number(*s.pll_kp) + "\n";
    if (s.pll_ki) out += "pll_ki = " + format_number(*s.pll_ki) + "\n";
    if (s.current_tau) out += "current_tau = " + format_number(*s.current_tau) + "\n";
    out += "analyses = ";
    for (std::size_t i = 0; i < s.analyses.size(); ++i) {
      if (i) out += ", ";
      out += to_string(s.analyses[i]);
    }
    out += "\n";
  }

  for (const auto& s : study.sweeps) {
    out += "\n[sweep." + s.name + "]\n";
    out += std::string("quantity = ") + to_string(s.quantity) + "\n";
    out += "start = " + format_number(s.start) + "\n";
    out += "stop = " + format_number(s.stop) + "\n";
    out += "count = " + std::to_string(s.count) + "\n";
    out += "total_capacity = " + format_number(s.total_capacity) + "\n";
    if (!s.base.empty()) out += "base = " + s.base + "\n";
  }
  return out;
}

// Cases A/B/C and the two capacity sweeps with the reference parameter set.
inline StudyFile builtin_study() {
  StudyFile st;
  const std::vector<Analysis> all = {Analysis::Curve,    Analysis::Mapa, Analysis::Equilibria,
                                     Analysis::Boundary, Analysis::Cct,  Analysis::Simulate};
  auto make = [&](const char* name, double s_sg, double i_mag, double p_m) {
    Scenario s;
    s.name = name;
    s.params.s_sg = s_sg;
    s.params.p_m = p_m;
    s.normal = {i_mag, kActiveMode};
    s.fault = {i_mag, kReactiveMode};
    s.t_fault_on = 0.5;
    s.t_clear = 0.76;
    s.analyses = all;
    return s;
  };
  st.scenarios.push_back(make("case_a", 1.0, 0.5, 1.0));
  st.scenarios.push_back(make("case_b", 0.5, 1.0, 0.5));
  st.scenarios.push_back(make("case_c", 1.0, 1.0, 1.0));

  SweepSpec a;
  a.name = "fixed_total";
  a.quantity = SweepQuantity::IbgProportionFixedTotal;
  a.base = "case_a";
  SweepSpec b;
  b.name = "fixed_sg";
  b.quantity = SweepQuantity::IbgCapacityFixedSg;
  b.base = "case_a";
  st.sweeps = {a, b};
  return st;
}

}  // namespace transtab
