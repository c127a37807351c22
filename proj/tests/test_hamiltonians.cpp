#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kmag/constants.hpp"
#include "kmag/hamiltonians.hpp"

using namespace kmag;

namespace {

double residual(double n, double delta, double kerr, double kappa, double omega) {
    const double eff = delta - kerr * n;
    return n * (eff * eff + 0.25 * kappa * kappa) - omega * omega;
}

}  // namespace

TEST(SteadyAmplitude, LinearDrive) {
    const auto s = steady_amplitude(10.0, 0.0, 2.0, {7.0, 3.0});
    ASSERT_EQ(s.roots.size(), 1u);
    EXPECT_NEAR(s.occupation, 9.0 / (9.0 + 1.0), 1e-14);
    EXPECT_NEAR(std::norm(s.amplitude), s.occupation, 1e-14);
    EXPECT_TRUE(s.stable[0]);
}

TEST(SteadyAmplitude, UndrivenIsVacuum) {
    const auto s = steady_amplitude(5.0, 1e-3, 1.0, {5.0, 0.0});
    EXPECT_EQ(s.occupation, 0.0);
    EXPECT_EQ(s.amplitude, cplx{});
}

TEST(SteadyAmplitude, BistableBranches) {
    // delta/kappa large enough for three roots.
    const double delta = -10.0, kerr = -1.0, kappa = 1.0;
    const double omega = 6.0;
    const auto s = steady_amplitude(delta, kerr, kappa, {0.0, omega});
    ASSERT_EQ(s.roots.size(), 3u);
    for (double n : s.roots) EXPECT_NEAR(residual(n, delta, kerr, kappa, omega) / (omega * omega), 0.0, 1e-10);
    EXPECT_TRUE(s.stable[0]);
    EXPECT_FALSE(s.stable[1]);
    EXPECT_TRUE(s.stable[2]);
    EXPECT_EQ(s.selected, 0u);
    const auto high = steady_amplitude(delta, kerr, kappa, {0.0, omega}, 2);
    EXPECT_EQ(high.occupation, s.roots[2]);
    EXPECT_THROW(steady_amplitude(delta, kerr, kappa, {0.0, omega}, 3), std::out_of_range);
}

TEST(SteadyAmplitude, ResidualProperty) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        const double delta = 20 * u(rng), kerr = u(rng), kappa = 0.1 + std::abs(u(rng)), omega = 5 * std::abs(u(rng)) + 0.01;
        const auto s = steady_amplitude(delta, kerr, kappa, {0.0, omega});
        for (double n : s.roots) {
            EXPECT_GE(n, 0.0);
            EXPECT_LT(std::abs(residual(n, delta, kerr, kappa, omega)), 1e-8 * omega * omega);
        }
        EXPECT_NEAR(std::norm(s.amplitude), s.occupation, 1e-9 * std::max(1.0, s.occupation));
    }
}

TEST(SteadyAmplitude, RejectsInvalid) {
    EXPECT_THROW(steady_amplitude(1.0, 0.0, -1.0, {0.0, 1.0}), std::domain_error);
    EXPECT_THROW(steady_amplitude(1.0, 0.0, 1.0, {0.0, -1.0}), std::domain_error);
}

TEST(Linearize, ShiftAndTwoMagnonStrength) {
    const double k = angular_from_hz(128.0);
    const DriveConfig drive{angular_from_hz(5e9), 0.0};
    const auto lin = linearize(angular_from_hz(5e9), angular_from_hz(5e9), k, cplx(1e3, 0.0), drive);
    EXPECT_NEAR(hz_from_angular(lin.two_magnon), 128e6, 1e-3);
    EXPECT_NEAR(hz_from_angular(lin.magnon_detuning), 256e6, 1e-2);
    const auto re = linearize(angular_from_hz(5e9), angular_from_hz(5e9), k, cplx(0.0, 1e3), drive,
                              DetuningConvention::Rederived);
    EXPECT_NEAR(hz_from_angular(re.magnon_detuning), -256e6, 1e-2);
    EXPECT_NEAR(re.occupation, 1e6, 1e-6);
}

TEST(Linearize, ConventionStrings) {
    EXPECT_EQ(detuning_convention_from_string("paper"), DetuningConvention::Paper);
    EXPECT_EQ(to_string(DetuningConvention::Rederived), "rederived");
    EXPECT_THROW(detuning_convention_from_string("other"), std::invalid_argument);
}

TEST(SqueezeFrame, PythagoreanTriple) {
    LinearizedParams lin;
    lin.magnon_detuning = 5.0;
    lin.two_magnon = 3.0;
    const auto f = squeeze_frame(lin, 2.0);
    EXPECT_NEAR(f.squeezed_detuning, 4.0, 1e-14);
    EXPECT_NEAR(f.squeezing, 0.25 * std::log(4.0), 1e-14);
    EXPECT_NEAR(f.coupling, std::sqrt(2.0), 1e-14);
}

TEST(SqueezeFrame, ZeroKerrIsIdentity) {
    LinearizedParams lin;
    lin.magnon_detuning = 7.0;
    const auto f = squeeze_frame(lin, 3.0);
    EXPECT_EQ(f.squeezing, 0.0);
    EXPECT_EQ(f.squeezed_detuning, 7.0);
    EXPECT_EQ(f.coupling, 1.5);
}

TEST(SqueezeFrame, InstabilityCarriesMargin) {
    LinearizedParams lin;
    lin.magnon_detuning = 1.0;
    lin.two_magnon = 1.5;
    try {
        squeeze_frame(lin, 1.0);
        FAIL() << "expected InstabilityError";
    } catch (const InstabilityError& e) {
        EXPECT_NEAR(e.margin(), -0.5, 1e-14);
    }
    lin.two_magnon = 1.0;
    EXPECT_THROW(squeeze_frame(lin, 1.0), InstabilityError);
}

TEST(SqueezeFrame, LargeSqueezingNeedsInjection) {
    // r = 10 requires K2/Delta = tanh(20), which rounds to 1 in double precision.
    LinearizedParams lin;
    lin.magnon_detuning = 1.0;
    lin.two_magnon = std::tanh(20.0);
    EXPECT_THROW(squeeze_frame(lin, 1.0), InstabilityError);
    const auto f = SqueezedFrame::injected(1.0, 2.0, 10.0);
    EXPECT_EQ(f.squeezing, 10.0);
    EXPECT_THROW(SqueezedFrame::injected(NAN, 1.0), std::domain_error);
}

TEST(Builders, HermitianAndSpecChecked) {
    const auto spec = HilbertSpec::magnon_spins(6, 1);
    LinearizedParams lin;
    lin.magnon_detuning = 3.0;
    lin.qubit_detuning = 2.0;
    lin.two_magnon = 1.0;
    const auto frame = squeeze_frame(lin, 0.4);
    EXPECT_TRUE(build_H_NL(spec, 2.0, 3.0, 0.01, 0.1).is_hermitian());
    EXPECT_TRUE(build_H_L(spec, lin, 0.4).hamiltonian.is_hermitian());
    EXPECT_TRUE(build_H_rabi(spec, frame, 2.0).is_hermitian());
    EXPECT_TRUE(build_H_squeezed_exact(spec, lin, 0.4, 2.0).is_hermitian());
    EXPECT_THROW(build_H_rabi(HilbertSpec::magnon_spins(6, 2), frame, 2.0), DimensionError);
    EXPECT_THROW(build_H_TC(HilbertSpec::qubits(2), frame, 2.0), DimensionError);
}

TEST(Builders, LinearizedReportsStability) {
    const auto spec = HilbertSpec::magnon_spins(4, 1);
    LinearizedParams lin;
    lin.magnon_detuning = 1.0;
    lin.two_magnon = 2.0;
    const auto h = build_H_L(spec, lin, 0.1);
    EXPECT_FALSE(h.stable);
    EXPECT_NEAR(h.stability_margin, -1.0, 1e-14);
}

TEST(Builders, NonlinearKerrSpectrum) {
    // Magnon-only block with g = 0: E_n = w n - (K/2) n (n - 1) for spin |g>.
    const auto spec = HilbertSpec::magnon_spins(5, 1);
    const double wq = 1.0, wm = 3.0, k = 0.2;
    const auto h = build_H_NL(spec, wq, wm, k, 0.0);
    for (int n = 0; n < 5; ++n) {
        const int i = spec.index({n, 0});
        EXPECT_NEAR(h.mat(i, i).real(), -0.5 * wq + wm * n - 0.5 * k * n * (n - 1), 1e-14);
    }
}

TEST(Builders, ExactMinusRabiResidual) {
    const auto spec = HilbertSpec::magnon_spins(8, 1);
    LinearizedParams lin;
    lin.magnon_detuning = 5.0;
    lin.two_magnon = 3.0;
    const double g = 0.3, dq = 4.0;
    const auto frame = squeeze_frame(lin, g);
    const auto diff = build_H_squeezed_exact(spec, lin, g, dq) - build_H_rabi(spec, frame, dq);
    const ModeOperators ops(spec);
    const auto& m = ops.magnon();
    const auto md = m.adjoint();
    const double c = 0.5 * g * std::exp(-frame.squeezing);
    const auto expected = c * ((ops.sp[0] * m + md * ops.sm[0]) - (ops.sp[0] * md + m * ops.sm[0]));
    EXPECT_LT(max_norm(diff - expected), 1e-14);
    // Entry-wise, the largest residual element is c * sqrt(cutoff - 1).
    EXPECT_NEAR(max_norm(diff), c * std::sqrt(7.0), 1e-14);
}

TEST(Builders, TavisCummingsConservesExcitations) {
    const auto frame = SqueezedFrame::injected(0.7, 3.0);
    for (int spins = 1; spins <= 3; ++spins) {
        const auto spec = HilbertSpec::magnon_spins(5, spins);
        const auto h = build_H_TC(spec, frame, 2.0);
        const ModeOperators ops(spec);
        EXPECT_LT(max_norm(commutator(h, ops.excitation_number())), 1e-14);
        EXPECT_TRUE(h.is_hermitian());
    }
}

TEST(Builders, RabiDoesNotConserveExcitations) {
    const auto spec = HilbertSpec::magnon_spins(5, 1);
    const auto h = build_H_rabi(spec, SqueezedFrame::injected(0.7, 3.0), 2.0);
    EXPECT_GT(max_norm(commutator(h, ModeOperators(spec).excitation_number())), 0.1);
}

TEST(Advisories, Thresholds) {
    const auto f = SqueezedFrame::injected(1.0, 5.0);
    EXPECT_FALSE(rwa_advisory(f, 6.0));
    EXPECT_TRUE(rwa_advisory(f, 4.0));
    EXPECT_FALSE(dispersive_advisory(1.0, 20.0));
    EXPECT_TRUE(dispersive_advisory(1.0, -5.0));
}

TEST(EffectiveCoupling, ValuesAndSingularity) {
    const auto e = effective_coupling(2.0, 4.0, 1.0, 0.0);
    EXPECT_DOUBLE_EQ(e.exchange, 0.25);
    EXPECT_DOUBLE_EQ(e.spin_frequency, 1.0);
    EXPECT_DOUBLE_EQ(effective_coupling(2.0, 4.0, 1.0, 0.5).spin_frequency, 2.0);
    EXPECT_THROW(effective_coupling(2.0, 0.0, 1.0, 0.0), SingularDetuningError);
}

TEST(EffectiveCoupling, ExchangeBlock) {
    const auto h = build_H_eff(2.0, 4.0, 1.0, 0.0);
    EXPECT_NEAR(h.mat(1, 2).real(), 0.25, 1e-15);
    EXPECT_NEAR(h.mat(2, 1).real(), 0.25, 1e-15);
    EXPECT_NEAR(h.mat(0, 0).real(), -1.0, 1e-15);
    EXPECT_NEAR(h.mat(3, 3).real(), 1.0, 1e-15);
    EXPECT_NEAR(h.mat(1, 1).real(), 0.0, 1e-15);
    const auto with_magnon = build_H_eff(HilbertSpec::magnon_spins(3, 2), 2.0, 4.0, 1.0, 0.0);
    EXPECT_EQ(with_magnon.dim(), 12);
}

TEST(EffectiveCoupling, DispersiveSpectrumMatchesTavisCummings) {
    // Single-excitation TC spectrum: dark state at Delta_q, bright pair split
    // from it by 2 G_eff to second order in G / Delta_-.
    const double dq = 0.0, ds = 20.0, g = 0.5;
    const auto spec = HilbertSpec::magnon_spins(3, 2);
    const auto h = build_H_TC(spec, SqueezedFrame::injected(g, ds), dq);
    const ModeOperators ops(spec);
    // Restrict to N = 1: |0,ge>, |0,eg>, |1,gg>.
    const std::vector<int> idx{spec.index({0, 0, 1}), spec.index({0, 1, 0}), spec.index({1, 0, 0})};
    Matrix block(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) block(i, j) = h.mat(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    Eigen::SelfAdjointEigenSolver<Matrix> es(block);
    const double geff = effective_coupling(dq, ds - dq, g, 0.0).exchange;
    const double split = es.eigenvalues()(1) - es.eigenvalues()(0);
    EXPECT_NEAR(split, 2.0 * std::abs(geff), 2.0 * std::abs(geff) * 0.01);
}
