#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "ch2/io.hpp"
#include "ch2/persistence.hpp"

using namespace ch2;

namespace {

std::vector<WeightSpec> theorem_weights() {
  return {polynomial_weight(2.0), polynomial_weight(4.0), exponential_weight(0.5),
          psi_weight(1.0)};
}

WeightSpec corollary_weight() { return {1.0, 1.0, -2.0, 0.0}; }

class SechRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    EvolveControls c;
    c.output_stride = 0.01;
    traj_ = std::make_unique<Trajectory>(
        evolve(make_preset(Preset::sech, make_grid(60.0, 4096), 0.5, 0.3), 1.0, c));
  }
  static void TearDownTestSuite() { traj_.reset(); }
  static const Trajectory& traj() { return *traj_; }

 private:
  static std::unique_ptr<Trajectory> traj_;
};

std::unique_ptr<Trajectory> SechRun::traj_;

}  // namespace

TEST(Gronwall, UnitWeightTracesToFourteen) {
  const auto g = gronwall_constants(certify({}));
  EXPECT_DOUBLE_EQ(g.C2, 1.0);
  EXPECT_DOUBLE_EQ(g.C3, 2.0);
  EXPECT_DOUBLE_EQ(g.C5, 4.0);
  EXPECT_DOUBLE_EQ(g.C, 14.0);
}

TEST(Gronwall, HandTracedPolynomialWeight) {
  // c_mod = 1, A = 2, ||Gv||_1 = 5: C2 = 5, C3 = 6, C5 = max(6, 7)
  const auto g = gronwall_constants(certify(polynomial_weight(2.0)));
  EXPECT_NEAR(g.C2, 5.0, 1e-10);
  EXPECT_NEAR(g.C3, 6.0, 1e-10);
  EXPECT_NEAR(g.C5, 7.0, 1e-10);
  EXPECT_NEAR(g.C, 6.0 + 7.0 + 7.0 + 2.0 + 5.0, 1e-10);
}

TEST(Gronwall, MonotoneInTheCertificate) {
  ModerateCertificate a = certify({});
  ModerateCertificate b = a;
  b.A += 0.5;
  b.Gv_l1 *= 2.0;
  b.dGv_l1 *= 2.0;
  EXPECT_GT(gronwall_constant(b), gronwall_constant(a));
}

TEST(QuintupleNorm, ClosedFormSupNorm) {
  // a sech: sup|f| = a, sup|f'| = a/2, sup|f''| = a; grid maxima miss by O(dx^2)
  const State s = make_preset(Preset::sech, make_grid(60.0, 4096), 0.5, 0.3);
  const double n = quintuple_norm(s, UnitWeight{}, kInf, standard_window(s.grid()));
  EXPECT_NEAR(n, 0.5 * 2.5 + 0.3 * 1.5, 1e-3);
  EXPECT_LE(n, 0.5 * 2.5 + 0.3 * 1.5 + 1e-12);
}

TEST(QuintupleNorm, ZeroState) {
  const State s = make_preset(Preset::zero, make_grid(20.0, 256), 0.0, 0.0);
  EXPECT_EQ(quintuple_norm(s, SpecWeight{psi_weight(1.0)}, 2.0, standard_window(s.grid())), 0.0);
}

TEST(QuintupleNorm, WeightOutgrowingTheDatumIsInfinite) {
  const auto g = make_grid(60.0, 4096);
  const State s = make_state(
      Field::sample(g, [](double x) { return 1.0 / std::cosh(x / 4.0); }), Field::zeros(g));
  const SpecWeight w{exponential_weight(0.5)};
  const auto q = quintuple_norm_parts(derivatives(s), w, 2.0, analysis_window(*g, w));
  EXPECT_TRUE(q.divergent);
  EXPECT_TRUE(std::isinf(quintuple_norm(s, w, 2.0, analysis_window(*g, w))));
}

TEST(QuintupleNorm, TruncatedWeightsIncreaseToTheFullNorm) {
  const State s = make_preset(Preset::sech, make_grid(60.0, 4096), 0.5, 0.3);
  const WeightSpec spec = psi_weight(1.0);
  const Window win = analysis_window(s.grid(), SpecWeight{spec});
  double previous = 0.0;
  for (double n : {1.0, 4.0, 16.0, 64.0, 1e3, 1e6, 1e9}) {
    const double q = quintuple_norm(s, ch2::truncate(spec, n), 2.0, win);
    EXPECT_GE(q, previous);
    previous = q;
  }
  EXPECT_NEAR(previous, quintuple_norm(s, SpecWeight{spec}, 2.0, win), 1e-12 * previous);
}

TEST(AnalysisWindow, RespectsResolvableWeight) {
  const auto g = make_grid(60.0, 4096);
  const Window poly = analysis_window(*g, SpecWeight{polynomial_weight(2.0)});
  EXPECT_NEAR(poly.lo, -55.0, g->dx());
  EXPECT_NEAR(poly.hi, 55.0, g->dx());
  const Window e = analysis_window(*g, SpecWeight{exponential_weight(0.5)});
  EXPECT_NEAR(e.hi, 2.0 * std::log(kResolvableWeight), g->dx());
}

TEST_F(SechRun, TheoremBoundHoldsAcrossTheWeightMatrix) {
  for (const auto& w : theorem_weights()) {
    for (double p : {2.0, kInf}) {
      const auto r = verify_theorem1(traj(), w, p);
      EXPECT_TRUE(r.pass) << weight_label(w) << " p=" << p;
      EXPECT_FALSE(r.infinite_norm);
      for (std::size_t i = 0; i < r.times.size(); ++i) {
        ASSERT_GE(r.margin[i], -1e-9 * r.bound[i]);
      }
    }
  }
}

TEST_F(SechRun, ReportsCarryTracedConstants) {
  const auto r = verify_theorem1(traj(), {}, 2.0);
  EXPECT_DOUBLE_EQ(r.C_used, 14.0);
  EXPECT_NEAR(r.M, run_M(traj()), 0.0);
  EXPECT_EQ(r.times.size(), traj().size());
  EXPECT_DOUBLE_EQ(r.margin.front(), 0.0);
}

TEST_F(SechRun, DifferentialInequalitiesHold) {
  for (const auto& w : theorem_weights()) {
    for (double p : {2.0, kInf}) {
      const auto r = verify_differential_inequalities(traj(), w, p);
      ASSERT_FALSE(r.refused) << r.reason;
      for (const auto& c : r.components) {
        EXPECT_TRUE(c.holds) << weight_label(w) << " p=" << p << ' ' << c.name
                             << " worst=" << c.worst_violation;
      }
    }
  }
}

TEST_F(SechRun, CorollaryTiersStayBounded) {
  const auto r = verify_corollary1(traj(), corollary_weight(), kInf);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(std::isfinite(r.sup1));
  EXPECT_TRUE(std::isfinite(r.sup2));
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    EXPECT_GT(r.tier1[i], 0.0);
    EXPECT_GT(r.tier2[i], 0.0);
  }
}

TEST_F(SechRun, OneSidedExponentialDecayIsPreserved) {
  const auto r = decay_preservation_check(traj(), DecayKind::one_sided_exponential(0.9));
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.initial_rate, 1.0, 0.01);
}

TEST(Theorem1, ZeroDatumPasses) {
  const Trajectory traj =
      evolve(make_preset(Preset::zero, make_grid(20.0, 256), 0.0, 0.0), 0.1, {});
  const auto r = verify_theorem1(traj, psi_weight(1.0), 2.0);
  EXPECT_TRUE(r.pass);
  for (double n : r.N_p) EXPECT_EQ(n, 0.0);
}

TEST(Theorem1, InadmissibleWeightRefused) {
  const Trajectory traj =
      evolve(make_preset(Preset::zero, make_grid(20.0, 256), 0.0, 0.0), 0.1, {});
  EXPECT_THROW(verify_theorem1(traj, exponential_weight(1.0), 2.0), AdmissibilityError);
}

TEST(Theorem1, InfiniteInitialNormIsAPreconditionFailure) {
  const auto g = make_grid(60.0, 4096);
  const State s0 = make_state(
      Field::sample(g, [](double x) { return 0.2 / std::cosh(x / 4.0); }), Field::zeros(g));
  EvolveControls c;
  c.output_stride = 0.05;
  c.tail_tolerance = 1.0;
  const Trajectory traj = evolve(s0, 0.05, c);
  EXPECT_THROW(verify_theorem1(traj, exponential_weight(0.5), 2.0), PreconditionError);
}

TEST(DiffIneq, CoarseStrideIsRefused) {
  EvolveControls c;
  c.output_stride = 0.05;
  const Trajectory traj =
      evolve(make_preset(Preset::sech, make_grid(60.0, 1024), 0.5, 0.3), 0.2, c);
  const auto r = verify_differential_inequalities(traj, {}, 2.0);
  EXPECT_TRUE(r.refused);
  EXPECT_FALSE(r.pass);
}

TEST(Corollary1, CompanionRules) {
  EXPECT_EQ(corollary1_companion(polynomial_weight(-2.0)).c, 2.0);
  const WeightSpec v = corollary1_companion(corollary_weight());
  EXPECT_EQ(v.a, 1.0);
  EXPECT_EQ(v.c, -2.0);
  EXPECT_THROW(corollary1_companion({1.0, 1.0, 0.0, 0.0}), AdmissibilityError);
  EXPECT_THROW(corollary1_companion({2.0, 1.0, -2.0, 0.0}), AdmissibilityError);
}

TEST(Corollary1, DecayMembership) {
  const WeightSpec v = corollary1_companion(corollary_weight());
  EXPECT_TRUE(v_decay_in_Lp(v, kInf));
  EXPECT_TRUE(v_decay_in_Lp(v, 2.0));
  EXPECT_FALSE(v_decay_in_Lp({1.0, 1.0, -0.25, 0.0}, 2.0));
  EXPECT_TRUE(v_decay_in_Lp({1.0, 1.0, -0.25, 0.0}, kInf));
}

TEST(Corollary1, GrowthFitRecoversSyntheticLaw) {
  std::vector<double> t, y;
  for (int i = 0; i <= 50; ++i) {
    t.push_back(0.02 * i);
    y.push_back(0.7 * std::exp(1.5 * t.back()) + 0.4);
  }
  const auto f = fit_growth(t, y);
  EXPECT_NEAR(f.tau, 1.5, 1e-12);
  EXPECT_NEAR(f.alpha, 0.7, 1e-9);
  EXPECT_NEAR(f.beta, 0.4, 1e-9);
  EXPECT_LT(f.rms, 1e-10);
}

TEST(Decay, AlgebraicRateIsPreserved) {
  // (1+x^2)^{-2} needs a wide box (seam value ~0.5 L^-4) and a fine grid: the
  // seam kink seeds top-mode content that steepening amplifies into the far field.
  const auto g = make_grid(200.0, 8192);
  auto prof = [](double x) { return 1.0 / ((1.0 + x * x) * (1.0 + x * x)); };
  const State s0 = make_state(Field::sample(g, [&](double x) { return 0.5 * prof(x); }),
                              Field::sample(g, [&](double x) { return 0.3 * prof(x); }));
  EvolveControls c;
  c.output_stride = 0.1;
  c.tail_tolerance = 1e-8;
  const Trajectory traj = evolve(s0, 0.5, c);
  const auto r = decay_preservation_check(traj, DecayKind::algebraic(4.0));
  EXPECT_TRUE(r.pass) << "initial=" << r.initial_rate;
  EXPECT_GT(r.initial_rate, 3.95);
}

TEST(Decay, ZeroDataAreVacuousAndWrongClaimsRefused) {
  const Trajectory zero =
      evolve(make_preset(Preset::zero, make_grid(20.0, 256), 0.0, 0.0), 0.1, {});
  EXPECT_TRUE(decay_preservation_check(zero, DecayKind::algebraic(2.0)).vacuous);
  EvolveControls c;
  c.output_stride = 0.1;
  const Trajectory sech =
      evolve(make_preset(Preset::sech, make_grid(60.0, 2048), 0.5, 0.3), 0.1, c);
  EXPECT_THROW(decay_preservation_check(sech, DecayKind::one_sided_exponential(1.5)),
               PreconditionError);
}
