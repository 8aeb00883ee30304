#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "slabwald/errors.hpp"
#include "slabwald/tuner.hpp"

using namespace slabwald;

namespace {

tuner::ToleranceRequest request(double eps, double g, Cell cell = {10.0, 10.0, 1.0}) {
  tuner::ToleranceRequest r;
  r.epsilon = eps;
  r.geometry = cell;
  r.spec = DielectricSpec(g, g);
  return r;
}

}  // namespace

TEST(Errors, ImageTruncationUsesHalfLevels) {
  const double decay = std::exp(-4.0 * std::numbers::pi * 1.0 / 10.0);
  EXPECT_DOUBLE_EQ(errors::image_truncation_energy(0, 0.6, 0.6, 1.0, 10.0, 10.0), 1.0);
  EXPECT_NEAR(errors::image_truncation_energy(3, 0.6, 0.6, 1.0, 10.0, 10.0), std::pow(0.36 * decay, 2), 1e-16);
  EXPECT_EQ(errors::image_truncation_energy(3, 0.6, 0.6, 1.0, 10.0, 10.0),
            errors::image_truncation_energy(4, 0.6, 0.6, 1.0, 10.0, 10.0));
  EXPECT_NEAR(errors::image_truncation_force(5, 0.6, 0.6, 1.0, 10.0, 10.0),
              errors::image_truncation_energy(5, 0.6, 0.6, 1.0, 10.0, 10.0) / 3.0, 1e-18);
  EXPECT_THROW(errors::image_truncation_energy(-1, 0.5, 0.5, 1, 10, 10), std::domain_error);
}

TEST(Errors, EstimatesAreMonotone) {
  double prev = INFINITY;
  for (int M = 1; M <= 41; M += 2) {
    const double v = errors::image_truncation_energy(M, 1.0, 1.0, 1.0, 10.0, 10.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
  prev = INFINITY;
  for (double Lz = 5.0; Lz < 60.0; Lz += 5.0) {
    const double v = errors::elc_energy_estimate(3, 0.9, 0.9, 1.0, 10.0, 10.0, Lz);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(errors::splitting_error(4.0), errors::splitting_error(3.0));
}

TEST(Errors, ElcEstimateSumsImageWeights) {
  const double H = 1.0, L = 10.0, Lz = 20.0;
  const double two_pi_l = 2.0 * std::numbers::pi / L;
  // gamma_u = 0.5, gamma_d = 0.8: C(1) = 0.8 + 0.5, C(2) = 2 * 0.4.
  const double expected = std::exp(-two_pi_l * (Lz - H)) + 1.3 * std::exp(-two_pi_l * (Lz - 2 * H)) +
                          0.8 * std::exp(-two_pi_l * (Lz - 3 * H));
  EXPECT_NEAR(errors::elc_energy_estimate(2, 0.5, 0.8, H, L, L, Lz), expected, 1e-18);
  EXPECT_DOUBLE_EQ(errors::image_weight(3, 0.5, 0.8), 0.8 * 0.8 * 0.5 + 0.8 * 0.5 * 0.5);
}

TEST(Errors, RegimeClassification) {
  const double g = errors::amplification(1.0, 1.0, 10.0, 10.0);
  EXPECT_NEAR(g, std::exp(std::numbers::pi / 5.0), 1e-15);
  EXPECT_EQ(errors::classify(g, g), errors::Regime::amplifying);
  EXPECT_EQ(errors::classify(0.5, 0.5), errors::Regime::contracting);
  EXPECT_EQ(errors::classify(2.0, 0.5), errors::Regime::marginal);
}

TEST(Errors, LeadingOrderClosedFormTracksFiniteSum) {
  const double H = 0.5, L = 10.0, Lz = 40.0;
  const double g = errors::amplification(1.0, H, L, L);
  for (int M : {40, 41}) {
    const auto lo = errors::leading_order(M, g, g, H, L, L, Lz);
    EXPECT_EQ(lo.regime, errors::Regime::amplifying);
    EXPECT_GT(lo.magnitude, 0.0);
    // Geometric tail: the sum exceeds its last term by 1 / (1 - 1/g), and odd M
    // keeps the (g + 1) g^{M-1} pair.
    const double expected = (M % 2 == 0) ? 1.0 - 1.0 / g : 1.0 - 1.0 / (g * g);
    EXPECT_NEAR(lo.magnitude / lo.exact, expected, 1e-3);
  }
  const auto mar = errors::leading_order(10, 1.0, 1.0, H, L, L, Lz);
  EXPECT_EQ(mar.regime, errors::Regime::marginal);
  EXPECT_NEAR(mar.magnitude, 0.5 * 10 * 4.0 * std::exp(-2.0 * std::numbers::pi * Lz / L), 1e-20);
}

TEST(Errors, TotalBudgetCollectsEveryTerm) {
  const auto p = EwaldParams::from_splitting(4.0, 1.0, 30.0, 10);
  const auto b = errors::total_budget(p, DielectricSpec(0.5, 0.5), Cell{10, 10, 1});
  EXPECT_DOUBLE_EQ(b.splitting, std::exp(-16.0) / 16.0);
  EXPECT_DOUBLE_EQ(b.trapezoidal, std::exp(-29.0 * 29.0));
  EXPECT_NEAR(b.total(), b.splitting + b.image_truncation + b.elc_base + b.elc_image + b.trapezoidal, 1e-30);
}

TEST(Tuner, SelectMCases) {
  EXPECT_EQ(tuner::select_M(request(1e-6, 0.0)), 0);
  auto one = request(1e-6, 0.0);
  one.spec = DielectricSpec(0.9, 0.0);
  EXPECT_EQ(tuner::select_M(one), 1);
  EXPECT_EQ(tuner::select_M(request(1e-4, 0.6)), 9);
  EXPECT_EQ(tuner::select_M(request(1e-8, 0.6)), 17);
  EXPECT_EQ(tuner::select_M(request(1e-12, 0.6)), 25);
  EXPECT_EQ(tuner::select_M(request(1e-4, 1.0)), 16);
  EXPECT_EQ(tuner::select_M(request(1e-8, 1.0)), 31);
  EXPECT_EQ(tuner::select_M(request(1e-12, 1.0)), 45);
}

TEST(Tuner, SelectS) {
  EXPECT_EQ(tuner::select_s(1e-4, false), 3.0);
  EXPECT_EQ(tuner::select_s(1e-8, false), 4.0);
  EXPECT_EQ(tuner::select_s(1e-12, false), 5.0);
  const double s = tuner::select_s(1e-8, true);
  EXPECT_NEAR(errors::splitting_error(s), 1e-8, 1e-20);
  EXPECT_LT(s, 4.0);
}

TEST(Tuner, PaddedHeightAmplifyingBranch) {
  EXPECT_EQ(tuner::select_Lz(request(1e-4, 1.0), 16), 32.0);
  EXPECT_EQ(tuner::select_Lz(request(1e-8, 1.0), 31), 62.0);
  // (M + 1) H + (L / 2 pi)(log(1/eps) + log gamma^2) for gamma = 0.6, M = 9.
  const double raw = 10.0 + 10.0 / (2.0 * std::numbers::pi) * (std::log(1e4) + std::log(0.36));
  EXPECT_NEAR(tuner::select_Lz_raw(request(1e-4, 0.6), 9), raw, 1e-12);
  EXPECT_EQ(tuner::select_Lz(request(1e-4, 0.6), 9), std::ceil(raw));
}

TEST(Tuner, PaddedHeightHomogeneous) {
  const double raw = 1.0 + 10.0 / (2.0 * std::numbers::pi) * std::log(1e12);
  EXPECT_NEAR(tuner::select_Lz_raw(request(1e-12, 0.0), 0), raw, 1e-12);
  EXPECT_EQ(tuner::select_Lz(request(1e-12, 0.0), 0), 45.0);
  auto nearest = request(1e-12, 0.0);
  nearest.rounding = tuner::Rounding::nearest;
  EXPECT_EQ(tuner::select_Lz(nearest, 0), 45.0);
}

TEST(Tuner, ContractingBranchKeepsPositiveLogTerm) {
  // gamma_u = 0.9, gamma_d = 0: log(0.9 + e^{-2 pi H / L}) > 0 is added.
  auto r = request(1e-6, 0.0);
  r.spec = DielectricSpec(0.9, 0.0);
  const double L = 10.0;
  const double raw = 1.0 + L / (2.0 * std::numbers::pi) *
                               (std::log(1e6) + std::log(0.9 + std::exp(-2.0 * std::numbers::pi / L)));
  EXPECT_NEAR(tuner::select_Lz_raw(r, 1), raw, 1e-12);
  // Weak reflections make the log negative; it is clamped.
  r.spec = DielectricSpec(0.1, 0.1);
  EXPECT_NEAR(tuner::select_Lz_raw(r, 1), 1.0 + L / (2.0 * std::numbers::pi) * std::log(1e6), 1e-12);
}

TEST(Tuner, SplittingRaisesAlphaForTrapezoidBound) {
  const auto r = request(1e-8, 0.0);
  const auto wide = tuner::select_splitting(r, 40.0, 1.0);
  EXPECT_FALSE(wide.raised);
  EXPECT_DOUBLE_EQ(wide.alpha, 4.0 / 2.5);
  EXPECT_DOUBLE_EQ(wide.r_c, 2.5);
  EXPECT_DOUBLE_EQ(wide.k_c, 2.0 * 4.0 * 1.6);
  const auto narrow = tuner::select_splitting(r, 1.5, 1.0);
  EXPECT_TRUE(narrow.raised);
  EXPECT_NEAR(narrow.alpha, std::sqrt(std::log(1e8)) / 0.5, 1e-12);
  EXPECT_FALSE(tuner::select_splitting(r, 1.0, 1.0).feasible);
}

TEST(Tuner, SelectAllIsMonotoneInTolerance) {
  for (double g : {0.0, 0.6, 1.0}) {
    tuner::TuneResult prev = tuner::select_all(request(1e-3, g));
    for (double eps : {1e-5, 1e-7, 1e-9, 1e-11, 1e-13}) {
      const auto t = tuner::select_all(request(eps, g));
      EXPECT_GE(t.params.M, prev.params.M);
      EXPECT_GE(t.params.L_z, prev.params.L_z);
      EXPECT_GE(t.params.s, prev.params.s);
      if (errors::classify(t.budget.g_u, t.budget.g_d) != errors::Regime::contracting) {
        EXPECT_GE(t.params.L_z, (t.params.M + 1) * 1.0);
      }
      prev = t;
    }
  }
}

TEST(Tuner, SelectAllReportsBudgetOverruns) {
  const auto t = tuner::select_all(request(1e-8, 1.0));
  EXPECT_EQ(t.params.s, 4.0);
  EXPECT_EQ(t.params.M, 31);
  EXPECT_EQ(t.params.L_z, 62.0);
  EXPECT_GT(t.budget.elc_image, 1e-8);
  bool flagged = false;
  for (const auto& d : t.diagnostics) flagged = flagged || d.find("elc_image") != std::string::npos;
  EXPECT_TRUE(flagged);
}

TEST(Tuner, RejectsBadRequests) {
  EXPECT_THROW(tuner::select_M(request(1.5, 0.5)), validation_error);
  EXPECT_THROW(tuner::select_M(request(0.0, 0.5)), validation_error);
  EXPECT_THROW(tuner::select_M(request(1e-6, 0.5, Cell{10, 10, 0})), validation_error);
}
