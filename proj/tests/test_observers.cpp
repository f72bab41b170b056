#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mhgo/numerics.hpp"
#include "mhgo/observers.hpp"
#include "mhgo/plant.hpp"
#include "mhgo/control.hpp"
#include "oracles.hpp"

using namespace mhgo;

namespace {

const std::vector<Vec> kExampleBank{{5.0, 5.0}, {-5.0, 5.0}, {5.0, -5.0}};

ObserverBankState example_bank() { return ObserverBankState{kExampleBank}; }

}  // namespace

TEST(HgoGain, Examples) {
  const Vec h = hgo_gain({{2.0, 1.0}, 0.15});
  EXPECT_NEAR(h[0], 40.0 / 3.0, 1e-12);
  EXPECT_NEAR(h[1], 400.0 / 9.0, 1e-11);
  const Vec fast = hgo_gain({{71.0, 70.0}, 1e-3});
  EXPECT_NEAR(fast[0], 71000.0, 1e-8);
  EXPECT_NEAR(fast[1], 7e7, 1e-4);
  const Vec unit = hgo_gain({{3.0, 3.0, 1.0}, 1.0});
  EXPECT_EQ(unit, (Vec{3.0, 3.0, 1.0}));
}

TEST(GainProfile, Validation) {
  EXPECT_THROW((ObserverGainProfile{{-1.0, 1.0}, 0.1}.validate()), Error);
  EXPECT_THROW((ObserverGainProfile{{2.0, 1.0}, 0.0}.validate()), Error);
  EXPECT_THROW((ObserverGainProfile{{2.0, 1.0}, 1.5}.validate()), Error);
  EXPECT_NO_THROW((ObserverGainProfile{{2.0, 1.0}, 1.0}.validate()));
}

TEST(HgoDerivative, Examples) {
  const ObserverGainProfile unit{{2.0, 1.0}, 1.0};
  const Vec rest = hgo_derivative(Vec{0.0, 0.0}, 0.0, 0.0, unit);
  EXPECT_EQ(rest, (Vec{0.0, 0.0}));
  EXPECT_EQ(hgo_derivative(Vec{1.0, 0.0}, 1.0, 0.0, unit), (Vec{0.0, 0.0}));
  EXPECT_EQ(hgo_derivative(Vec{1.0, 0.0}, 2.0, 0.0, unit), (Vec{2.0, 1.0}));
}

TEST(HgoDerivative, NominalModelEntersLastComponent) {
  const ObserverGainProfile unit{{2.0, 1.0}, 1.0};
  const NominalModel fo = [](std::span<const double> x, double u) { return u - x[1] * std::abs(x[1]); };
  const Vec d = hgo_derivative(Vec{1.0, 2.0}, 1.0, 7.0, unit, fo);
  EXPECT_EQ(d[0], 2.0);
  EXPECT_EQ(d[1], 3.0);
  EXPECT_THROW(hgo_derivative(Vec{1.0}, 1.0, 0.0, unit), Error);
}

TEST(BankDerivative, EqualMembersEqualDerivatives) {
  const ObserverGainProfile p{{2.0, 1.0}, 0.15};
  const ObserverBankState bank{{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}}};
  const auto d = mhgo_bank_derivative(bank, 0.3, p);
  EXPECT_EQ(d[0], d[1]);
  EXPECT_EQ(d[1], d[2]);
}

TEST(BankDerivative, ZeroInnovationIsShift) {
  const ObserverGainProfile p{{2.0, 1.0}, 0.15};
  const ObserverBankState bank{{{1.0, 2.0}, {3.0, -4.0}}};
  const auto d = mhgo_bank_derivative(bank, 3.0, p);
  EXPECT_EQ(d[1], (Vec{-4.0, 0.0}));
}

TEST(BankDerivative, ExampleBankHandArithmetic) {
  const ObserverGainProfile p{{2.0, 1.0}, 0.15};
  const auto d = mhgo_bank_derivative(example_bank(), 0.0, p);
  EXPECT_NEAR(d[0][0], 5.0 - 200.0 / 3.0, 1e-11);
  EXPECT_NEAR(d[0][1], -2000.0 / 9.0, 1e-10);
}

TEST(BuildE, Examples) {
  const Mat e = build_E(example_bank());
  ASSERT_EQ(e.rows(), 2u);
  ASSERT_EQ(e.cols(), 2u);
  EXPECT_EQ(e(0, 0), 0.0);
  EXPECT_EQ(e(0, 1), 10.0);
  EXPECT_EQ(e(1, 0), -10.0);
  EXPECT_EQ(e(1, 1), -10.0);

  const Mat z = build_E(ObserverBankState{{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}}});
  EXPECT_EQ(max_abs(z), 0.0);

  const Mat two = build_E(ObserverBankState{{{1.0, 2.0}, {4.0, -1.0}}});
  ASSERT_EQ(two.cols(), 1u);
  EXPECT_EQ(two(0, 0), 3.0);
  EXPECT_EQ(two(1, 0), -3.0);

  EXPECT_THROW(build_E(ObserverBankState{{{1.0, 2.0}}}), Error);
}

TEST(Rls, ExampleInitialRates) {
  const RlsState rls = RlsState::initial(3, 1e3, {0.0, 0.0});
  const Mat E = build_E(example_bank());
  const double y_tilde = 0.0 - 5.0;  // y - C x^_3
  const RlsDerivative d = rls_derivative(rls, E, y_tilde);

  // independent substitution: P = 1000 I, CE = [0, 10]
  const double ce[2] = {0.0, 10.0};
  const double resid = y_tilde + ce[0] * 0.0 + ce[1] * 0.0;
  EXPECT_NEAR(d.beta_hat[0], -1000.0 * ce[0] * resid, 1e-9);
  EXPECT_NEAR(d.beta_hat[1], -1000.0 * ce[1] * resid, 1e-9);
  EXPECT_NEAR(d.beta_hat[1], 50000.0, 1e-9);
  EXPECT_EQ(d.info(0, 0), 0.0);
  EXPECT_EQ(d.info(0, 1), 0.0);
  EXPECT_EQ(d.info(1, 0), 0.0);
  EXPECT_EQ(d.info(1, 1), 100.0);
}

TEST(Rls, NoExcitationNoChange) {
  const RlsState rls = RlsState::initial(3, 1e3, {0.2, 0.3});
  const RlsDerivative d = rls_derivative(rls, Mat(2, 2), 4.0);
  EXPECT_EQ(d.beta_hat, (Vec{0.0, 0.0}));
  EXPECT_EQ(max_abs(d.info), 0.0);
}

TEST(Rls, ZeroResidual) {
  RlsState rls = RlsState::initial(3, 10.0, {0.25, 0.5});
  const Mat E{{1.0, 2.0}, {0.0, 1.0}};
  const double y_tilde = -(1.0 * 0.25 + 2.0 * 0.5);
  const RlsDerivative d = rls_derivative(rls, E, y_tilde);
  EXPECT_EQ(d.beta_hat, (Vec{0.0, 0.0}));
  EXPECT_GE(min_max_eig_sym(d.info).lambda_min, -1e-15);
}

TEST(Rls, GeneralInformationFormMatchesCovarianceForm) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 1 + trial % 4;
    RlsState rls = RlsState::initial(p + 1, 5.0);
    Mat r = Mat::identity(p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) r(i, j) += 0.1 * u(rng) * u(rng);
    r = 0.5 * (r + transpose(r));
    rls.info = r;
    for (double& b : rls.beta_hat) b = u(rng);
    Mat E(2, p);
    for (double& v : E.data()) v = u(rng);
    const double yt = u(rng);
    const RlsDerivative d = rls_derivative(rls, E, yt);
    const Mat P = inverse(r);
    const Vec ce = E.row_vec(0);
    const double resid = yt + dot(ce, rls.beta_hat);
    const Vec pc = P * ce;
    for (std::size_t i = 0; i < p; ++i) EXPECT_NEAR(d.beta_hat[i], -pc[i] * resid, 1e-12);
    // d/dt P^-1 = -P^-1 P' P^-1 with P' = -P c^T c P  gives  c^T c
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) EXPECT_NEAR(d.info(i, j), ce[i] * ce[j], 1e-15);
  }
}

TEST(Rls, SingularInfoRejected) {
  RlsState rls = RlsState::initial(3, 1e3);
  rls.info = Mat(2, 2);
  try {
    rls_derivative(rls, build_E(example_bank()), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numerical);
  }
}

TEST(Rls, InitialState) {
  const RlsState eq = RlsState::initial(4, 100.0);
  EXPECT_EQ(eq.beta_hat, (Vec{0.25, 0.25, 0.25}));
  EXPECT_EQ(eq.info(0, 0), 0.01);
  EXPECT_THROW(RlsState::initial(1, 1.0), Error);
  EXPECT_THROW(RlsState::initial(3, 0.0), Error);
  EXPECT_THROW(RlsState::initial(3, 1.0, {1.0}), Error);
}

TEST(Combine, Examples) {
  RlsState rls = RlsState::initial(3, 1e3, {0.0, 0.0});
  EXPECT_EQ(combine(example_bank(), rls), (Vec{5.0, -5.0}));
  rls.beta_hat = {0.0, 0.5};
  EXPECT_EQ(combine(example_bank(), rls), (Vec{0.0, 0.0}));
  const ObserverBankState same{{{1.5, -2.0}, {1.5, -2.0}, {1.5, -2.0}}};
  rls.beta_hat = {3.7, -11.2};
  const Vec xo = combine(same, rls);
  EXPECT_NEAR(xo[0], 1.5, 1e-13);
  EXPECT_NEAR(xo[1], -2.0, 1e-13);
}

TEST(ConvexWeights, ExampleBankOrigin) {
  const auto w = convex_weights(kExampleBank, Vec{0.0, 0.0});
  ASSERT_TRUE(w);
  EXPECT_NEAR((*w)[0], 0.0, 1e-15);
  EXPECT_NEAR((*w)[1], 0.5, 1e-15);
  EXPECT_NEAR((*w)[2], 0.5, 1e-15);
}

TEST(ConvexWeights, VertexGivesIndicator) {
  for (std::size_t i = 0; i < 3; ++i) {
    const auto w = convex_weights(kExampleBank, kExampleBank[i]);
    ASSERT_TRUE(w);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR((*w)[j], i == j ? 1.0 : 0.0, 1e-14);
  }
}

TEST(ConvexWeights, CollinearHullExcludesOrigin) {
  const auto w = convex_weights({{5.0, 5.0}, {6.0, 6.0}, {7.0, 7.0}}, Vec{0.0, 0.0});
  EXPECT_FALSE(w.has_value());
}

TEST(ConvexWeights, FlatSimplexContainingPointIsDegenerate) {
  try {
    convex_weights({{5.0, 5.0}, {6.0, 6.0}, {7.0, 7.0}}, Vec{6.5, 6.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_simplex);
  }
}

TEST(ConvexWeights, OutsideTriangle) {
  EXPECT_FALSE(convex_weights(kExampleBank, Vec{-4.0, -4.0}).has_value());
}

TEST(ConvexWeights, TooFewInits) {
  EXPECT_THROW(convex_weights({{1.0, 0.0}, {0.0, 1.0}}, Vec{0.5, 0.5}), Error);
}

TEST(ConvexWeights, RandomBanksRecoverInteriorPoints) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-3.0, 3.0), w01(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 3;
    const std::size_t N = n + 1 + static_cast<std::size_t>(trial % 5);
    std::vector<Vec> inits(N, Vec(n));
    for (auto& v : inits)
      for (double& x : v) x = u(rng);
    Vec lam(N);
    double s = 0.0;
    for (double& l : lam) s += (l = w01(rng));
    Vec x0(n, 0.0);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t r = 0; r < n; ++r) x0[r] += lam[i] / s * inits[i][r];
    std::optional<Vec> w;
    try {
      w = convex_weights(inits, x0);
    } catch (const Error& e) {
      ASSERT_EQ(e.kind(), ErrorKind::degenerate_simplex);
      continue;
    }
    ASSERT_TRUE(w) << "trial " << trial;
    double sum = 0.0;
    Vec fit(n, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      EXPECT_GE((*w)[i], 0.0);
      sum += (*w)[i];
      for (std::size_t r = 0; r < n; ++r) fit[r] += (*w)[i] * inits[i][r];
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    for (std::size_t r = 0; r < n; ++r) EXPECT_NEAR(fit[r], x0[r], 1e-9);

    // Far outside the bounding box is never feasible.
    Vec far(n, 100.0);
    EXPECT_FALSE(convex_weights(inits, far).has_value());
  }
}

TEST(Switching, Schedule) {
  const ObserverGainProfile fast{{71.0, 70.0}, 1e-3}, slow{{2.0, 1.0}, 0.15};
  EXPECT_EQ(&switching_schedule(0.0, 0.1, fast, slow), &fast);
  EXPECT_EQ(&switching_schedule(1.0, 0.1, fast, slow), &slow);
  EXPECT_EQ(&switching_schedule(0.1, 0.1, fast, slow), &slow);
  EXPECT_EQ(&switching_schedule(0.0, 0.0, fast, slow), &slow);
  EXPECT_THROW(switching_schedule(0.0, -1.0, fast, slow), Error);
}

TEST(Switching, EstimatorUsesScheduledGain) {
  const ObserverGainProfile fast{{71.0, 70.0}, 1e-3}, slow{{2.0, 1.0}, 0.15};
  const SwitchingHgo est(fast, slow, 0.1, {5.0, -5.0});
  Vec d(2);
  est.derivative(0.05, Vec{5.0, -5.0}, 0.0, 0.0, d);
  EXPECT_EQ(d, hgo_derivative(Vec{5.0, -5.0}, 0.0, 0.0, fast));
  est.derivative(0.5, Vec{5.0, -5.0}, 0.0, 0.0, d);
  EXPECT_EQ(d, hgo_derivative(Vec{5.0, -5.0}, 0.0, 0.0, slow));
  EXPECT_GT(est.stiffness(0.0, {}), 7e4);
  EXPECT_LT(est.stiffness(1.0, {}), 100.0);
}

TEST(Selector, ArgminAndTies) {
  EXPECT_EQ(argmin_lowest(Vec{0.5, 0.2, 0.9}), 1u);  // observer 2
  EXPECT_EQ(argmin_lowest(Vec{0.3, 0.1, 0.1}), 1u);
  EXPECT_EQ(argmin_lowest(Vec{0.0, 0.0, 0.0}), 0u);
}

TEST(Selector, HomogeneousDecay) {
  SelectorState s{{1.0, 2.0, 4.0}, 0.1, 0};
  const SelectorState next = selector_step(s, Vec{0.0, 0.0, 0.0}, 0.5);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(next.mu[i], s.mu[i] * std::exp(-0.05), 1e-15);
  EXPECT_EQ(next.sigma, 0u);
}

TEST(Selector, ConstantResidualMatchesExactSolution) {
  SelectorState s{{0.0, 0.0}, 0.4, 1};
  const SelectorState next = selector_step(s, Vec{1.0, 0.5}, 2.0);
  EXPECT_NEAR(next.mu[0], (1.0 - std::exp(-0.8)) / 0.4, 1e-14);
  EXPECT_NEAR(next.mu[1], 0.25 * (1.0 - std::exp(-0.8)) / 0.4, 1e-14);
  EXPECT_EQ(next.sigma, 1u);
  EXPECT_THROW(selector_step(s, Vec{1.0, 0.5}, 0.0), Error);
}

TEST(MultiObserver, StartsFromConfiguredObserver) {
  const MultiObserver mo({{2.0, 1.0}, 0.15}, kExampleBank, 0.1, 2);
  const Vec s = mo.initial_state();
  Vec out(2);
  mo.estimate(s, {}, out);
  EXPECT_EQ(out, (Vec{5.0, -5.0}));
  EXPECT_EQ(*mo.selection(s), 2u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(s[6 + i], 0.0);
}

TEST(MultiObserver, SwitchesToSmallestCriterion) {
  const MultiObserver mo({{2.0, 1.0}, 0.15}, kExampleBank, 0.1, 2);
  Vec s = mo.initial_state();
  s[6] = 0.9;
  s[7] = 0.2;
  s[8] = 0.5;
  mo.after_step(0.0, s);
  EXPECT_EQ(*mo.selection(s), 1u);
  Vec out(2);
  mo.estimate(s, {}, out);
  EXPECT_EQ(out, (Vec{-5.0, 5.0}));
}

TEST(MultiObserver, CriterionDerivative) {
  const MultiObserver mo({{2.0, 1.0}, 0.15}, kExampleBank, 0.1, 0);
  Vec s = mo.initial_state();
  s[6] = 1.0;
  Vec ds(s.size());
  mo.derivative(0.0, s, 1.0, 0.0, ds);
  EXPECT_NEAR(ds[6], -0.1 * 1.0 + 16.0, 1e-14);   // (1 - 5)^2
  EXPECT_NEAR(ds[7], 36.0, 1e-14);                // (1 + 5)^2
  EXPECT_EQ(ds[9], 0.0);
}

TEST(Mhgo, RejectsTooFewObservers) {
  try {
    Mhgo m({{2.0, 1.0}, 0.15}, {{1.0, 1.0}, {2.0, 2.0}}, MhgoOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
    EXPECT_NE(std::string(e.what()).find("N >= n+1 required"), std::string::npos);
  }
}

TEST(Mhgo, InitialFusedEstimate) {
  MhgoOptions opt;
  opt.beta0 = {0.0, 0.0};
  const Mhgo m({{2.0, 1.0}, 0.15}, kExampleBank, opt);
  const Vec s = m.initial_state();
  Vec out(2);
  m.estimate(s, {}, out);
  EXPECT_EQ(out, (Vec{5.0, -5.0}));
  EXPECT_EQ(m.weights(s), (Vec{0.0, 0.0, 1.0}));
}

TEST(Mhgo, DefaultWeightsAreEqual) {
  const Mhgo m({{2.0, 1.0}, 0.15}, kExampleBank, MhgoOptions{});
  const Vec w = m.weights(m.initial_state());
  for (double v : w) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Mhgo, DerivativeMatchesFreeFunctions) {
  MhgoOptions opt;
  opt.beta0 = {0.0, 0.0};
  const Mhgo m({{2.0, 1.0}, 0.15}, kExampleBank, opt);
  const Vec s = m.initial_state();
  Vec ds(s.size());
  m.derivative(0.0, s, 0.0, 0.0, ds);
  const auto bank = mhgo_bank_derivative(example_bank(), 0.0, {{2.0, 1.0}, 0.15});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t r = 0; r < 2; ++r) EXPECT_EQ(ds[i * 2 + r], bank[i][r]);
  const RlsDerivative rd = rls_derivative(m.rls(s), build_E(example_bank()), -5.0);
  EXPECT_NEAR(ds[6], rd.beta_hat[0], 1e-9);
  EXPECT_NEAR(ds[7], rd.beta_hat[1], 1e-9);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(ds[8 + k], rd.info.data()[k]);
  // fusion rate (CE) P (CE)^T = 1000 * 100
  EXPECT_NEAR(m.fusion_rate(s), 1e5, 1e-6);
}

TEST(Mhgo, WeightsSumToOne) {
  MhgoOptions opt;
  const Mhgo m({{2.0, 1.0}, 0.15}, kExampleBank, opt);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Vec s = m.initial_state();
  for (int i = 0; i < 1000; ++i) {
    s[6] = u(rng);
    s[7] = u(rng);
    const Vec w = m.weights(s);
    EXPECT_LE(std::abs(w[0] + w[1] + w[2] - 1.0), 1e-15);
  }
}

TEST(Mhgo, FrozenWeightsCombineBank) {
  MhgoOptions opt;
  opt.frozen_weights = Vec{0.0, 0.5, 0.5};
  const Mhgo m({{2.0, 1.0}, 0.15}, kExampleBank, opt);
  EXPECT_EQ(m.state_size(), 6u);
  Vec out(2);
  m.estimate(m.initial_state(), {}, out);
  EXPECT_EQ(out, (Vec{0.0, 0.0}));
}

// The bank differences obey eps E_o' = A_o E_o whatever y is, so after 20 eps
// the scaled spread has collapsed by the matrix exponential exp(20 A_o).
TEST(Mhgo, ScaledSpreadDecays) {
  for (double eps : {0.05, 0.15}) {
    MhgoOptions opt;
    opt.frozen_weights = Vec{1.0, 0.0, 0.0};
    const Mhgo m({{2.0, 1.0}, eps}, kExampleBank, opt);
    Vec s = m.initial_state();
    NoiseModel y{1.0, 1e-4, 17};
    auto f = [&](double t, std::span<const double> x, std::span<double> dx) {
      m.derivative(t, x, 3.0 + y.at(t), 0.0, dx);
    };
    Rk4Stepper st(s.size());
    const double dt = 1e-4;
    const std::size_t steps = static_cast<std::size_t>(std::llround(20.0 * eps / dt));
    for (std::size_t k = 0; k < steps; ++k)
      st.macro_step(f, k * dt, s, dt, substeps_for(dt, m.stiffness(0.0, s)));
    const Mat d = scaling_matrix(eps, 2);
    const Mat e0 = d * build_E(example_bank());
    const Mat e1 = d * build_E(m.bank(s));
    EXPECT_LE(spectral_norm(e1), 1e-6 * spectral_norm(e0)) << eps;
    const Mat closed = matrix_exponential(20.0 * observer_error_matrix(Vec{2.0, 1.0})) * e0;
    EXPECT_LE(max_abs(e1 - closed), 1e-9 * spectral_norm(e0));
  }
}

// HGO with the exact model and no noise: smaller eps settles sooner. The
// settling time is eps times a log term that itself depends on eps, so only
// the ordering and a coarse ratio are checked.
TEST(Hgo, NoiseFreeConvergenceScalesWithEps) {
  const PlantDefinition plant = underwater_vehicle(1.0);
  const UnderwaterControllerOptions ctl;
  auto time_to = [&](double eps) {
    const ObserverGainProfile prof{{2.0, 1.0}, eps};
    const HighGainObserver obs(prof, {1.0, -1.0}, plant.f);
    Vec s{0.0, 0.0, 1.0, -1.0};
    auto f = [&](double t, std::span<const double> z, std::span<double> dz) {
      const double u = underwater_controller(z.first(2), t, ctl);
      dz[0] = z[1];
      dz[1] = plant.f(z.first(2), u);
      obs.derivative(t, z.subspan(2), z[0], u, dz.subspan(2));
    };
    Rk4Stepper st(4);
    const double dt = 1e-4;
    double last_out = 0.0;
    for (std::size_t k = 0; k < 200000; ++k) {
      st.macro_step(f, k * dt, s, dt, substeps_for(dt, prof.speed()));
      const double err = std::max(std::abs(s[0] - s[2]), std::abs(s[1] - s[3]));
      if (err >= 1e-6) last_out = (k + 1) * dt;
    }
    return last_out;
  };
  const double t05 = time_to(0.05), t15 = time_to(0.15), t50 = time_to(0.5);
  EXPECT_LT(t50, 20.0);
  EXPECT_LT(t05, t15);
  EXPECT_LT(t15, t50);
  EXPECT_GT(t50 / t05, 3.0);
}

TEST(Estimators, SharedContract) {
  std::vector<std::unique_ptr<Estimator>> all;
  all.push_back(std::make_unique<StateFeedbackBypass>(2));
  all.push_back(std::make_unique<HighGainObserver>(ObserverGainProfile{{2.0, 1.0}, 0.15}, Vec{5.0, -5.0}));
  all.push_back(std::make_unique<SwitchingHgo>(ObserverGainProfile{{71.0, 70.0}, 1e-3},
                                               ObserverGainProfile{{2.0, 1.0}, 0.15}, 0.1, Vec{5.0, -5.0}));
  all.push_back(std::make_unique<MultiObserver>(ObserverGainProfile{{2.0, 1.0}, 0.15}, kExampleBank, 0.1, 2));
  all.push_back(std::make_unique<Mhgo>(ObserverGainProfile{{2.0, 1.0}, 0.15}, kExampleBank, MhgoOptions{}));
  for (const auto& e : all) {
    EXPECT_EQ(e->n(), 2u);
    const Vec s = e->initial_state();
    ASSERT_EQ(s.size(), e->state_size()) << e->kind();
    Vec out(2), ds(s.size());
    e->estimate(s, Vec{0.5, 0.5}, out);
    e->derivative(0.0, s, 0.1, 0.0, ds);
    for (double v : out) EXPECT_TRUE(std::isfinite(v));
    for (double v : ds) EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(e->stiffness(0.0, s), 0.0);
  }
}
