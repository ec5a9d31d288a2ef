#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "transtab/network.hpp"

using namespace transtab;

namespace {

// Textbook per-unit base change: Z_new = Z_old * S_new / S_old for
// impedances; stored-energy constants scale with the rated power they are
// quoted on, H_new = H_old * S_old / S_new.
double impedance_to_system_base(double z_rated, double s_rated, double s_system) {
  return z_rated * s_system / s_rated;
}
double energy_constant_to_system_base(double h_rated, double s_rated, double s_system) {
  return h_rated * s_rated / s_system;
}

}  // namespace

TEST(Network, DefaultsMatchReferenceSet) {
  const SystemParams p;
  EXPECT_DOUBLE_EQ(p.x_g1, 0.2);
  EXPECT_DOUBLE_EQ(p.x_g2_line, 0.1);
  EXPECT_DOUBLE_EQ(p.x_g3, 0.3);
  EXPECT_DOUBLE_EQ(p.e_g, 1.15);
  EXPECT_DOUBLE_EQ(p.u_0_nominal, 1.0);
  EXPECT_DOUBLE_EQ(p.u_0_fault, 0.1);
  EXPECT_DOUBLE_EQ(p.omega_n, 100.0 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(p.x_d_prime_rated, 0.16);
  EXPECT_DOUBLE_EQ(p.t_j_rated, 6.0);
  EXPECT_DOUBLE_EQ(p.d_rated, 10.0);
}

TEST(Network, UnitCapacityReduction) {
  const ScaledSystem s = scale_to_capacity(SystemParams{});
  EXPECT_DOUBLE_EQ(s.net.x_g2, 0.26);
  EXPECT_DOUBLE_EQ(s.net.k1, 0.2 / 0.46);
  EXPECT_DOUBLE_EQ(s.net.k2, 0.26 / 0.46);
  EXPECT_DOUBLE_EQ(s.net.x_g4, 0.2 * 0.26 / 0.46);
  EXPECT_DOUBLE_EQ(s.net.x_g5, 0.3 + 0.2 * 0.26 / 0.46);
  EXPECT_DOUBLE_EQ(s.sg.t_j, 6.0);
  EXPECT_DOUBLE_EQ(s.sg.d, 10.0);
  EXPECT_DOUBLE_EQ(s.sg.omega_0, 1.0);
}

TEST(Network, HalfCapacityAgreesWithBaseChangeOracle) {
  SystemParams p;
  p.s_sg = 0.5;
  const ScaledSystem s = scale_to_capacity(p);
  EXPECT_NEAR(s.x_d_prime, impedance_to_system_base(0.16, 0.5, 1.0), 1e-15);
  EXPECT_NEAR(s.x_d_prime, 0.32, 1e-15);
  // T_J = 2H: same rule as H; damping is a power-per-speed quantity quoted
  // on the machine rating and follows the same scaling.
  EXPECT_NEAR(s.sg.t_j, energy_constant_to_system_base(6.0, 0.5, 1.0), 1e-15);
  EXPECT_NEAR(s.sg.t_j, 3.0, 1e-15);
  EXPECT_NEAR(s.sg.d, 5.0, 1e-15);
  EXPECT_NEAR(s.net.x_g2, 0.42, 1e-15);
}

TEST(Network, RejectsNonPositiveCapacity) {
  SystemParams p;
  p.s_sg = 0.0;
  EXPECT_THROW(scale_to_capacity(p), InvalidParameter);
  p.s_sg = -1.0;
  EXPECT_THROW(scale_to_capacity(p), InvalidParameter);
}

TEST(Network, RejectsInvalidParameters) {
  auto bad = [](auto mutate) {
    SystemParams p;
    mutate(p);
    return p;
  };
  EXPECT_THROW(validate(bad([](SystemParams& p) { p.x_g1 = 0.0; })), InvalidParameter);
  EXPECT_THROW(validate(bad([](SystemParams& p) { p.x_g3 = -0.1; })), InvalidParameter);
  EXPECT_THROW(validate(bad([](SystemParams& p) { p.e_g = 0.0; })), InvalidParameter);
  EXPECT_THROW(validate(bad([](SystemParams& p) { p.u_0_fault = 1.0; })), InvalidParameter);
  EXPECT_THROW(validate(bad([](SystemParams& p) { p.omega_n = 0.0; })), InvalidParameter);
  EXPECT_THROW(validate(bad([](SystemParams& p) { p.t_j_rated = 0.0; })), InvalidParameter);
  EXPECT_THROW(validate(bad([](SystemParams& p) { p.d_rated = -1.0; })), InvalidParameter);
  EXPECT_THROW(validate(bad([](SystemParams& p) { p.x_g1 = NAN; })), InvalidParameter);
  EXPECT_NO_THROW(validate(SystemParams{}));
}

TEST(Network, RandomParameterInvariants) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> x(0.01, 2.0), cap(0.05, 5.0);
  for (int i = 0; i < 500; ++i) {
    SystemParams p;
    p.x_g1 = x(rng);
    p.x_g2_line = x(rng);
    p.x_d_prime_rated = x(rng);
    p.x_g3 = x(rng);
    p.s_sg = cap(rng);
    const ScaledSystem s = scale_to_capacity(p);
    const ReducedNetwork& n = s.net;
    EXPECT_NEAR(n.k1 + n.k2, 1.0, 1e-12);
    EXPECT_GT(n.x_g5, n.x_g3);
    EXPECT_GT(n.x_g4, 0.0);
    EXPECT_LT(n.x_g4, std::min(n.x_g1, n.x_g2));
    EXPECT_GT(n.k1, 0.0);
    EXPECT_GT(n.k2, 0.0);

    // Bit-identical on repeat.
    const ScaledSystem again = scale_to_capacity(p);
    EXPECT_EQ(std::memcmp(&s.net, &again.net, sizeof s.net), 0);
    EXPECT_EQ(s.sg, again.sg);

    // Doubling the capacity halves x'_d and doubles T_J and D exactly.
    SystemParams p2 = p;
    p2.s_sg = 2.0 * p.s_sg;
    const ScaledSystem d = scale_to_capacity(p2);
    EXPECT_EQ(d.x_d_prime, s.x_d_prime / 2.0);
    EXPECT_EQ(d.sg.t_j, 2.0 * s.sg.t_j);
    EXPECT_EQ(d.sg.d, 2.0 * s.sg.d);
  }
}
