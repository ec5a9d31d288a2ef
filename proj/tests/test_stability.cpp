#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"
#include "transtab/stability.hpp"

using namespace transtab;

namespace {

constexpr double kPi = std::numbers::pi;

// Frozen from the reference runs (bisection tolerance 1e-3, step 1e-4).
constexpr double kCaseASep = 0.523266;
constexpr double kCaseAUep = 2.643979;
constexpr double kCaseACct = 0.26445;

EquilibriumSet equilibria(const SwingSystem& s) { return find_equilibria(s.grid, s.p_m); }

FaultScenario dip_template(const SwingSystem& s) { return support::dip(s, 0.1); }

// Classic SMIB energy function about the UEP with P = Pmax sin(delta).
double classic_energy(const SwingSystem& s, double pmax, double uep, const RotorState& x) {
  const double dw = x.omega_g - s.sg.omega_0;
  return 0.5 * s.sg.t_j * s.omega_n * dw * dw - pmax * (std::cos(x.delta_g) - std::cos(uep)) -
         s.p_m * (x.delta_g - uep);
}

}  // namespace

TEST(Equilibria, ClassicSmibWithoutIbg) {
  const SwingSystem s = support::reference_system(1.0, 0.0, 1.0);
  const EquilibriumSet eq = equilibria(s);
  const double sep = std::asin(0.46 / 1.15);
  ASSERT_EQ(eq.regime, BoundaryRegime::WithUep);
  EXPECT_NEAR(eq.sep, sep, 1e-10);
  EXPECT_NEAR(*eq.uep, kPi - sep, 1e-10);
  EXPECT_DOUBLE_EQ(eq.delta_g_max, kPi);
}

TEST(Equilibria, ReferenceCases) {
  const EquilibriumSet a = equilibria(support::case_a());
  EXPECT_EQ(a.regime, BoundaryRegime::WithUep);
  EXPECT_NEAR(a.sep, kCaseASep, 1e-6);
  ASSERT_TRUE(a.uep.has_value());
  EXPECT_NEAR(*a.uep, kCaseAUep, 1e-6);
  EXPECT_LT(*a.uep, a.delta_g_max);

  const EquilibriumSet b = equilibria(support::case_b());
  EXPECT_EQ(b.regime, BoundaryRegime::WithoutUep);
  EXPECT_FALSE(b.uep.has_value());
  const EquilibriumSet c = equilibria(support::case_c());
  EXPECT_EQ(c.regime, BoundaryRegime::WithoutUep);

  for (const auto& eq : {a, b, c}) {
    EXPECT_GT(eq.sep, 0.0);
    EXPECT_LT(eq.sep, eq.delta_g_max);
  }
}

TEST(Equilibria, SepHasPositiveSlopeUepNegative) {
  const SwingSystem s = support::case_a();
  const EquilibriumSet eq = equilibria(s);
  EXPECT_GT(power_slope(eq.sep, s.grid), 0.0);
  EXPECT_LT(power_slope(*eq.uep, s.grid), 0.0);
  EXPECT_NEAR(sg_power(eq.sep, s.grid).p, s.p_m, 1e-9);
  EXPECT_NEAR(sg_power(*eq.uep, s.grid).p, s.p_m, 1e-9);
}

TEST(Equilibria, NoSepAboveCurvePeak) {
  const SwingSystem s = support::reference_system(1.0, 0.5, 3.0);
  EXPECT_THROW(equilibria(s), NoSep);
  GridCondition never = s.grid;
  never.ibg.i_mag = 3.0;
  EXPECT_THROW(find_equilibria(never, 1.0), NoSep);
}

TEST(Equilibria, UepMergesIntoMapaAtRegimeSwitch) {
  std::optional<double> last_gap;
  bool switched = false;
  for (int k = 0; k <= 40; ++k) {
    const double i = 0.025 * k;
    const EquilibriumSet eq = equilibria(support::reference_system(1.0, i, 1.0));
    if (eq.regime == BoundaryRegime::WithUep) {
      EXPECT_FALSE(switched) << "regime switched back at I = " << i;
      last_gap = eq.delta_g_max - *eq.uep;
    } else {
      switched = true;
    }
  }
  EXPECT_TRUE(switched);
  ASSERT_TRUE(last_gap.has_value());
  EXPECT_LT(*last_gap, 0.01);
}

TEST(Boundary, ClassicSeparatrixIsEnergyLevelSet) {
  SwingSystem s = support::reference_system(1.0, 0.0, 1.0);
  s.sg.d = 0.0;
  const EquilibriumSet eq = equilibria(s);
  const StabilityBoundary b = trace_boundary(eq, s);
  ASSERT_EQ(b.source, BoundarySource::UepManifold);
  ASSERT_GT(b.polyline.size(), 100u);
  const double pmax = 1.15 / 0.46;
  for (const RotorState& x : b.polyline) {
    EXPECT_NEAR(classic_energy(s, pmax, *eq.uep, x), 0.0, 1e-6) << x.delta_g;
  }
  // The upper branch reaches over the SEP.
  EXPECT_LT(b.polyline.front().delta_g, eq.sep);
  EXPECT_GT(b.polyline.front().omega_g, 1.0);
}

TEST(Boundary, CaseAPassesThroughUep) {
  const SwingSystem s = support::case_a();
  const EquilibriumSet eq = equilibria(s);
  const StabilityBoundary b = trace_boundary(eq, s);
  EXPECT_EQ(b.source, BoundarySource::UepManifold);
  EXPECT_EQ(b.regime, BoundaryRegime::WithUep);
  EXPECT_DOUBLE_EQ(b.critical_state().delta_g, *eq.uep);
  EXPECT_DOUBLE_EQ(b.critical_state().omega_g, 1.0);
  for (std::size_t i = 1; i <= b.critical_index; ++i)
    EXPECT_LT(b.polyline[i - 1].delta_g, b.polyline[i].delta_g);
}

TEST(Boundary, CaseBEndsAtMapaCriticalState) {
  const SwingSystem s = support::case_b();
  const EquilibriumSet eq = equilibria(s);
  const StabilityBoundary b = trace_boundary(eq, s);
  EXPECT_EQ(b.source, BoundarySource::MapaCriticalState);
  EXPECT_EQ(b.critical_index, b.polyline.size() - 1);
  EXPECT_DOUBLE_EQ(b.critical_state().delta_g, eq.delta_g_max);
  EXPECT_DOUBLE_EQ(b.critical_state().omega_g, 1.0);
  EXPECT_GT(b.polyline.size(), 10u);
  EXPECT_GT(b.polyline.front().omega_g, 1.0);
}

TEST(Boundary, InsensitiveToEigenvectorPerturbation) {
  const SwingSystem s = support::case_a();
  const EquilibriumSet eq = equilibria(s);
  TraceOptions coarse, fine;
  coarse.epsilon = 1e-4;
  fine.epsilon = 1e-5;
  const StabilityBoundary a = trace_boundary(eq, s, coarse);
  const StabilityBoundary b = trace_boundary(eq, s, fine);
  for (double d : {eq.sep, 1.0, 1.5, 2.0, 2.4}) {
    const auto wa = a.upper_speed_at(d), wb = b.upper_speed_at(d);
    ASSERT_TRUE(wa && wb) << d;
    EXPECT_NEAR(*wa, *wb, 1e-4) << d;
  }
}

TEST(Boundary, StableDirectionSolvesCharacteristicEquation) {
  const SwingSystem s = support::case_a();
  const double uep = *equilibria(s).uep;
  const SaddleDirection dir = stable_direction(s, uep, 1e-6);
  const double a = s.sg.d / s.sg.t_j;
  const double b = s.omega_n * power_slope(uep, s.grid) / s.sg.t_j;
  EXPECT_LT(dir.eigenvalue, 0.0);
  EXPECT_NEAR(dir.eigenvalue * dir.eigenvalue + a * dir.eigenvalue + b, 0.0, 1e-6);
}

TEST(Region, PointClassification) {
  const SwingSystem s = support::case_a();
  const EquilibriumSet eq = equilibria(s);
  EXPECT_TRUE(is_inside({eq.sep, 1.0}, s));
  EXPECT_TRUE(is_inside({eq.sep + 0.5, 1.0}, s));
  EXPECT_FALSE(is_inside({*eq.uep + 0.05, 1.0}, s));
  const auto w = trace_boundary(eq, s).upper_speed_at(eq.sep);
  ASSERT_TRUE(w.has_value());
  EXPECT_TRUE(is_inside({eq.sep, *w - 2e-3}, s));
  EXPECT_FALSE(is_inside({eq.sep, *w + 2e-3}, s));
  EXPECT_FALSE(is_inside({2.9, 1.0}, s));  // beyond the maximum allowable angle
}

TEST(Region, PrecheckAgreesWithSimulationAwayFromBoundary) {
  for (const SwingSystem& s : {support::case_a(), support::case_b()}) {
    const EquilibriumSet eq = equilibria(s);
    const StabilityBoundary b = trace_boundary(eq, s);
    double wmax = 1.0;
    for (const auto& x : b.polyline) wmax = std::max(wmax, x.omega_g);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dd(eq.sep, b.critical_state().delta_g),
        ww(1.0, 1.0 + 1.3 * (wmax - 1.0));
    int answered = 0, tested = 0;
    while (tested < 100) {
      const RotorState x{dd(rng), ww(rng)};
      const auto w = b.upper_speed_at(x.delta_g);
      if (w && std::abs(x.omega_g - *w) < 2e-4) continue;  // too close to call
      ++tested;
      const auto pre = boundary_precheck(x, b);
      if (!pre) continue;
      ++answered;
      EXPECT_EQ(*pre, is_inside(x, b, s)) << x.delta_g << " " << x.omega_g;
    }
    EXPECT_GT(answered, 80);
  }
}

TEST(Region, StatesJustAcrossTheBoundarySplit) {
  for (const SwingSystem& s : {support::case_a(), support::case_b()}) {
    const StabilityBoundary b = trace_boundary(equilibria(s), s);
    ASSERT_GT(b.critical_index, 20u);
    for (int k = 0; k < 10; ++k) {
      const RotorState& on = b.polyline[b.critical_index * k / 10];
      EXPECT_TRUE(is_inside({on.delta_g, on.omega_g - 1e-3}, s)) << on.delta_g;
      EXPECT_FALSE(is_inside({on.delta_g, on.omega_g + 1e-3}, s)) << on.delta_g;
    }
  }
}

TEST(Cct, CaseAWithinReferenceBracket) {
  const SwingSystem s = support::case_a();
  const CctResult r = compute_cct(s, dip_template(s));
  EXPECT_NEAR(r.cct, kCaseACct, 1e-3);
  EXPECT_GT(r.cct, 0.26);
  EXPECT_LT(r.cct, 0.27);
  EXPECT_LE(r.unstable_duration - r.stable_duration, 1e-3);
  EXPECT_EQ(r.stable_verdict, Termination::Converged);
  EXPECT_EQ(r.unstable_verdict, Termination::LossOfSynchronism);
  EXPECT_EQ(r.regime, BoundaryRegime::WithUep);
  EXPECT_NEAR(r.pre_fault_sep, kCaseASep, 1e-6);
  EXPECT_GT(r.cca, r.pre_fault_sep);
  EXPECT_LT(r.cca, r.delta_g_max);

  // The bracket ends really are what the result claims.
  const RotorState x0{r.pre_fault_sep, 1.0};
  EXPECT_TRUE(integrate(s, x0, support::dip(s, r.stable_duration)).stable());
  EXPECT_FALSE(integrate(s, x0, support::dip(s, r.unstable_duration)).stable());
}

TEST(Cct, OrderingAcrossCases) {
  const double a = compute_cct(support::case_a(), dip_template(support::case_a())).cct;
  const double b = compute_cct(support::case_b(), dip_template(support::case_b())).cct;
  const double c = compute_cct(support::case_c(), dip_template(support::case_c())).cct;
  EXPECT_LT(c, a);
  EXPECT_LT(a, b);
}

TEST(Cct, TighterToleranceNarrowsBracket) {
  const SwingSystem s = support::case_a();
  CctOptions o;
  o.tolerance = 1e-4;
  const CctResult r = compute_cct(s, dip_template(s), o);
  EXPECT_LE(r.unstable_duration - r.stable_duration, 1e-4);
  EXPECT_NEAR(r.cct, kCaseACct, 1e-3);
}

TEST(Cct, FaultOnLossOfSynchronismHasNoCct) {
  const SwingSystem s = support::case_a();
  FaultScenario f = dip_template(s);
  f.fault.ibg = {1.5, kActiveMode};
  try {
    compute_cct(s, f);
    FAIL() << "expected NoCct";
  } catch (const NoCct& e) {
    EXPECT_EQ(e.reason(), NoCct::Reason::FaultOnLossOfSynchronism);
  }
}

TEST(Cct, MildDipHasNoCct) {
  const SwingSystem s = support::case_a();
  FaultScenario f = dip_template(s);
  f.fault.u_0 = 0.9;
  try {
    compute_cct(s, f);
    FAIL() << "expected NoCct";
  } catch (const NoCct& e) {
    EXPECT_EQ(e.reason(), NoCct::Reason::NoInstabilityFound);
  }
}

TEST(Cct, RejectsBadTolerance) {
  CctOptions o;
  o.tolerance = 0.0;
  EXPECT_THROW(compute_cct(support::case_a(), dip_template(support::case_a()), o),
               InvalidParameter);
}
