#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "qcdma/asymptotic.hpp"
#include "qcdma/oracle.hpp"

using namespace qcdma;

namespace {

SystemConfig two_user_case(double m = 1.0) {
  SystemConfig c = SystemConfig::uniform(2, 2.0, m);
  c.preparation_variance = 1.0;
  c.eve_variance = 1.0;
  c.env_variance = 1.0;
  c.channel = Transmittance{0.5};
  return c;
}

}  // namespace

TEST(BobVariances, TwoUserHandCase) {
  const BobVariances v = bob_variances(two_user_case(), 1);
  EXPECT_NEAR(v.total, 1.5, 1e-15);
  EXPECT_NEAR(v.conditional, 1.25, 1e-15);
  EXPECT_NEAR(mutual_information(two_user_case(), 1), 0.131517202916896917, 1e-15);
}

TEST(BobVariances, ZeroCorrection) {
  SystemConfig c = SystemConfig::uniform(4, 50.0, 0.0);
  c.channel = Transmittance{0.2};
  const BobVariances v = bob_variances(c, 3);
  EXPECT_NEAR(v.total, 0.2 / 16 * 51.0, 1e-15);
  EXPECT_NEAR(v.conditional, 0.2 / 16, 1e-15);
  EXPECT_NEAR(mutual_information(c, 3), 0.5 * std::log2(51.0), 1e-14);
}

TEST(BobVariances, EnvironmentTermFollowsRouting) {
  SystemConfig c = SystemConfig::uniform(8, 10.0, 1.0);
  c.channel = Transmittance{0.3};
  const double d = bob_variances(c, 1).total - bob_variances(c, 2).total;
  EXPECT_NEAR(d, 2.43566017177982128660 - 0.0214466094067262378, 1e-13);
}

TEST(MutualInformation, NoModulationGivesZero) {
  SystemConfig c = two_user_case();
  c.modulation_variance = {0.0, 0.0};
  EXPECT_EQ(mutual_information(c, 1), 0.0);
}

TEST(EveCm, HandValues) {
  SystemConfig c = SystemConfig::uniform(2, 1000.0, 1.0);
  c.channel = Transmittance{0.1};
  c.eve_variance = 2.0;
  const Eigen::Matrix4d s = eve_cm(c);
  EXPECT_NEAR(s(0, 0), 901.1, 1e-10);
  EXPECT_NEAR(std::abs(s(0, 2)), std::sqrt(0.3), 1e-15);
  EXPECT_NEAR(s(0, 2), -s(1, 3), 0.0);

  c.eve_variance = 1.0;
  const Eigen::Matrix4d flat = eve_cm(c);
  EXPECT_EQ(flat(0, 2), 0.0);
  EXPECT_EQ(flat(1, 3), 0.0);

  c.channel = Transmittance{1.0};
  c.eve_variance = 3.0;
  EXPECT_NEAR(eve_cm(c)(0, 0), 3.0, 1e-15);
}

TEST(EveSymplectic, Limits) {
  SystemConfig c = SystemConfig::uniform(4, 100.0, 0.5);
  c.channel = Transmittance{0.2};
  const EveSpectrum w1 = eve_symplectic(c);
  EXPECT_NEAR(w1.nu[0], eve_params(c, 1).ev, 1e-12);
  EXPECT_NEAR(w1.nu[1], 1.0, 1e-12);

  c.channel = Transmittance{1.0};
  c.eve_variance = 2.5;
  const EveSpectrum pure = eve_symplectic(c);
  EXPECT_NEAR(pure.nu[0], 1.0, 1e-12);
  EXPECT_NEAR(pure.nu[1], 1.0, 1e-12);
}

TEST(EveConditional, UnitW) {
  SystemConfig c = SystemConfig::uniform(4, 30.0, 0.7);
  c.channel = Transmittance{0.4};
  const EveParams p = eve_params(c, 2);
  const Eigen::Matrix4d s = eve_conditional_cm(p);
  EXPECT_NEAR(s(0, 0), p.ev - p.xi * p.xi / p.beta, 1e-12);
  EXPECT_NEAR(s(1, 1), p.ev, 1e-12);
  EXPECT_NEAR(s(2, 2), 1.0, 1e-15);
  EXPECT_EQ(s(0, 2), 0.0);
  const double expect = g_entropy(p.ev) - g_entropy(std::sqrt(p.ev * (p.ev - p.xi * p.xi / p.beta)));
  EXPECT_NEAR(holevo(c, 2), expect, 1e-10);
}

TEST(EveConditional, ZeroCorrectionLeavesEveUntouched) {
  SystemConfig c = SystemConfig::uniform(4, 30.0, 0.0);
  c.channel = Transmittance{0.4};
  c.eve_variance = 2.0;
  const EveParams p = eve_params(c, 1);
  EXPECT_EQ(p.xi, 0.0);
  EXPECT_EQ(p.psi, 0.0);
  EXPECT_EQ(eve_conditional_cm(p), eve_cm(p));
  EXPECT_NEAR(holevo(c, 1), 0.0, 1e-15);
}

TEST(Holevo, UnitWHandCase) {
  const HolevoResult h = holevo_terms(two_user_case(), 1);
  EXPECT_NEAR(h.chi, 0.146023115658776447, 1e-12);
  const EveParams p = eve_params(two_user_case(), 1);
  EXPECT_NEAR(p.ev, 2.0, 1e-15);
  EXPECT_NEAR(std::abs(p.xi), 0.707106781186547524, 1e-15);
  EXPECT_NEAR(p.beta, 1.5, 1e-15);
}

TEST(Holevo, TwoPathAgreementOverRandomConfigs) {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int k = 0; k < 220; ++k) {
    const SystemConfig c = random_config(rng);
    const int user = 1 + k % c.n_users;
    const EveParams p = eve_params(c, user);
    const double closed = holevo_closed_form(p).chi;
    const double numeric = holevo_numerical(p).chi;
    EXPECT_NEAR(closed, numeric, 1e-9 * std::max(1.0, std::abs(numeric))) << "case " << k;
    EXPECT_GE(closed, -1e-9);
    ++checked;
  }
  EXPECT_GE(checked, 200);
}

TEST(Holevo, BetaIsBobVariance) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 50; ++k) {
    const SystemConfig c = random_config(rng);
    EXPECT_EQ(eve_params(c, 1).beta, bob_variances(c, 1).total);
  }
}

TEST(Holevo, ZeroAtUnitTransmittanceAndW) {
  SystemConfig c = SystemConfig::uniform(4, 100.0, 0.6);
  c.channel = Transmittance{1.0};
  for (int i = 1; i <= 4; ++i) EXPECT_NEAR(holevo(c, i), 0.0, 1e-12);
}

TEST(Skr, ZeroCorrectionClosedForm) {
  const SkrBreakdown r = skr(two_user_case(0.0));
  ASSERT_EQ(r.per_user.size(), 2u);
  EXPECT_NEAR(r.per_user[0].rate, 0.792481250360578091, 1e-12);
  EXPECT_NEAR(r.total_rate, 2.0 * 0.792481250360578091, 1e-12);
  // V_T = 0 here, so E_V = eta W < 1: flagged, rate unaffected.
  EXPECT_TRUE(r.flags().has(Flag::kSubVacuumEve));
  EXPECT_FALSE(r.flags().has(Flag::kNegativeRate));
}

TEST(Skr, NegativeRatesAreKeptAndFlagged) {
  const SkrBreakdown r = skr(two_user_case());
  EXPECT_NEAR(r.per_user[0].rate, -0.0145059127418795305, 1e-12);
  EXPECT_TRUE(r.per_user[0].flags.has(Flag::kNegativeRate));
  EXPECT_NEAR(r.total_rate, 2.0 * r.per_user[0].rate, 1e-15);
  EXPECT_EQ(r.clipped_total(), 0.0);
}

TEST(Skr, ReconciliationEfficiencyScalesInformation) {
  SystemConfig c = two_user_case(0.0);
  c.reconciliation_efficiency = 0.95;
  EXPECT_NEAR(skr(c).per_user[0].rate, 0.95 * 0.792481250360578091, 1e-12);
}

TEST(Skr, MirrorSymmetry) {
  for (int n : {2, 4, 8, 16}) {
    SystemConfig c = SystemConfig::uniform(n, 1000.0, 0.05);
    c.channel = FiberLink{0.25, 30.0};
    c.eve_variance = 1.3;
    const SkrBreakdown r = skr(c);
    double sum = 0.0;
    for (int i = 1; i <= n; ++i) {
      EXPECT_NEAR(r.per_user[i - 1].rate, r.per_user[n - i].rate, 1e-12);
      sum += r.per_user[i - 1].rate;
    }
    EXPECT_NEAR(r.total_rate, sum, 1e-12);
  }
}

TEST(Skr, MonotoneInNoise) {
  SystemConfig base = SystemConfig::uniform(4, 1000.0, 0.05);
  base.channel = FiberLink{0.25, 20.0};
  for (int user = 1; user <= 4; ++user) {
    double prev = INFINITY;
    for (int k = 0; k <= 24; ++k) {
      SystemConfig c = base;
      c.env_variance = 0.1 * k;
      const double r = skr(c).per_user[user - 1].rate;
      EXPECT_LE(r, prev + 1e-12) << "sigma step " << k;
      prev = r;
    }
    prev = INFINITY;
    for (int k = 0; k <= 24; ++k) {
      SystemConfig c = base;
      c.eve_variance = 1.0 + 0.1 * k;
      const double r = skr(c).per_user[user - 1].rate;
      EXPECT_LE(r, prev + 1e-12) << "W step " << k;
      prev = r;
    }
  }
}

TEST(Skr, SubVacuumEveIsFlaggedNotFatal) {
  SystemConfig c = SystemConfig::uniform(4, 1000.0, 1e-4);
  c.channel = FiberLink{0.25, 100.0};
  SkrBreakdown r;
  ASSERT_NO_THROW(r = skr(c));
  EXPECT_TRUE(r.flags().has(Flag::kSubVacuumEve));
  EXPECT_TRUE(std::isfinite(r.total_rate));
}
