#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kmag/fidelity.hpp"
#include "kmag/hamiltonians.hpp"

using namespace kmag;

namespace {

Matrix local_phases(double p1, double p2) {
    Matrix d = Matrix::Zero(4, 4);
    for (int r = 0; r < 4; ++r) d(r, r) = std::polar(1.0, p1 * ((r >> 1) & 1) + p2 * (r & 1));
    return d;
}

Channel channel_from_map(const std::function<Matrix(const Matrix&)>& f) {
    const auto in = tomography_inputs();
    std::vector<Matrix> out;
    for (const auto& rho : in) out.push_back(f(rho));
    return reconstruct_channel(in, out);
}

}  // namespace

TEST(Iswap, MatrixEntries) {
    const Matrix u = iswap_matrix();
    EXPECT_EQ(u(2, 1), cplx(0.0, -1.0));
    EXPECT_EQ(u(1, 2), cplx(0.0, -1.0));
    EXPECT_EQ(u(0, 0), cplx(1.0));
    EXPECT_EQ(u(3, 3), cplx(1.0));
    EXPECT_LT((u * u.adjoint() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Iswap, IdealMapOnBasisStates) {
    const auto spec = HilbertSpec::qubits(2);
    const auto out = iswap_ideal_map(QuantumState::basis(spec, {1, 0}));
    EXPECT_EQ(out.vector()(1), cplx(0.0, -1.0));
    const auto same = iswap_ideal_map(QuantumState::basis(spec, {1, 1}));
    EXPECT_EQ(same.vector()(3), cplx(1.0));
    EXPECT_THROW(iswap_ideal_map(QuantumState::basis(HilbertSpec::qubits(1), {0})), DimensionError);
}

TEST(Tomography, InputsAreValidStates) {
    const auto in = tomography_inputs();
    ASSERT_EQ(in.size(), 16u);
    for (const auto& rho : in) {
        EXPECT_NEAR(rho.trace().real(), 1.0, 1e-15);
        EXPECT_NEAR((rho * rho).trace().real(), 1.0, 1e-15);
    }
}

TEST(Channel, ReconstructsUnitary) {
    const Matrix u = iswap_matrix();
    const auto ch = channel_from_map([&](const Matrix& r) -> Matrix { return u * r * u.adjoint(); });
    EXPECT_LT((ch.superop - Channel::unitary(u).superop).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(process_fidelity(ch, u), 1.0, 1e-12);
    EXPECT_NEAR(average_gate_fidelity(process_fidelity(ch, u)), 1.0, 1e-12);
}

TEST(Channel, IdentityVersusIswap) {
    // |tr(U)|^2 / 16 = 4 / 16.
    EXPECT_NEAR(process_fidelity(Channel::identity(), iswap_matrix()), 0.25, 1e-15);
    EXPECT_NEAR(average_gate_fidelity(0.25), 0.4, 1e-15);
}

TEST(Channel, DepolarizingFidelity) {
    const double p = 0.1;
    const auto ch = channel_from_map([&](const Matrix& r) -> Matrix {
        return (1 - p) * r + p * r.trace() * Matrix::Identity(4, 4) / 4.0;
    });
    const double expected = 1 - p + p / 16.0;
    EXPECT_NEAR(process_fidelity(ch, Matrix::Identity(4, 4)), expected, 1e-12);
    EXPECT_NEAR(average_gate_fidelity(expected), (4 * expected + 1) / 5, 1e-15);
}

TEST(Channel, TraceDefectRejected) {
    EXPECT_THROW(channel_from_map([](const Matrix& r) -> Matrix { return 0.9 * r; }), DiagnosticsError);
    const auto in = tomography_inputs();
    EXPECT_THROW(reconstruct_channel({in.begin(), in.begin() + 4}, in), std::invalid_argument);
}

TEST(GateFidelity, StripsLocalPhases) {
    const double p1 = 0.7, p2 = -1.9;
    const Matrix u = local_phases(p1, p2) * iswap_matrix();
    const auto gf = gate_fidelity(Channel::unitary(u));
    EXPECT_LT(gf.average_raw, 0.9);
    EXPECT_NEAR(gf.process_stripped, 1.0, 1e-12);
    EXPECT_NEAR(gf.average_stripped, 1.0, 1e-12);
    EXPECT_NEAR(std::remainder(gf.phase1 - p1, two_pi), 0.0, 1e-6);
    EXPECT_NEAR(std::remainder(gf.phase2 - p2, two_pi), 0.0, 1e-6);
    EXPECT_NEAR(gf.transfer, 1.0, 1e-12);
}

TEST(GateFidelity, ConjugateGateNeedsPiPhases) {
    const auto gf = gate_fidelity(Channel::unitary(iswap_matrix().conjugate()));
    EXPECT_NEAR(gf.process_stripped, 1.0, 1e-12);
    EXPECT_NEAR(std::abs(gf.phase1), std::numbers::pi, 1e-6);
}

TEST(GateFidelity, StrippedNeverBelowRaw) {
    const auto gf = gate_fidelity(Channel::identity());
    EXPECT_GE(gf.process_stripped, gf.process_raw);
    EXPECT_NEAR(gf.transfer, 0.0, 1e-15);
}

TEST(EvolveChannel, EffectiveHamiltonianGivesIswap) {
    const double geff = 2.0;
    // G^2 / Delta_- = geff with Delta_q = 0 so the spin term vanishes.
    const auto h = build_H_eff(0.0, 0.5, 1.0, 0.0);
    const LindbladModel model{h, {}};
    const double t = std::numbers::pi / (2 * geff);
    const auto series = evolve_channel(model, {0.0, t});
    EXPECT_EQ(series.diagnostics.method, "eigendecomposition");
    const auto gf = gate_fidelity(series.channels[1]);
    EXPECT_NEAR(gf.process_raw, 1.0, 1e-12);
    EXPECT_NEAR(gate_fidelity(series.channels[0], Matrix::Identity(4, 4)).process_raw, 1.0, 1e-12);
}

TEST(EvolveChannel, DissipativeWithIdleMagnon) {
    const auto spec = HilbertSpec::magnon_spins(2, 2);
    const auto h = build_H_eff(spec, 0.0, 0.5, 1.0, 0.0);
    const ModeOperators ops(spec);
    const double gamma = 0.01;
    const LindbladModel model{h, {{ops.magnon(), 1.0, "magnon"}, {ops.sm[0], gamma, "spin1"}, {ops.sm[1], gamma, "spin2"}}};
    const double t = std::numbers::pi / 4.0;
    const auto series = evolve_channel(model, {t});
    const auto gf = gate_fidelity(series.channels[0]);
    EXPECT_LT(gf.average_stripped, 1.0);
    EXPECT_GT(gf.average_stripped, 1.0 - 2.0 * gamma * t);
    EXPECT_LT(series.diagnostics.max_trace_error, 1e-10);
}

TEST(EvolveChannel, RequiresTwoSpins) {
    const auto spec = HilbertSpec::magnon_spins(3, 1);
    const LindbladModel model{OperatorMatrix::zero(spec), {}};
    EXPECT_THROW(evolve_channel(model, {0.0}), DimensionError);
}
