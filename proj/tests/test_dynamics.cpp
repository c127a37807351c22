#include <gtest/gtest.h>

#include <cmath>

#include "kmag/dynamics.hpp"
#include "kmag/hamiltonians.hpp"

using namespace kmag;

namespace {

std::vector<double> grid(double t_end, int n) {
    std::vector<double> t(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = t_end * i / (n - 1);
    return t;
}

LindbladModel decaying_qubit(double gamma, double omega = 0.0) {
    const auto spec = HilbertSpec::qubits(1);
    const auto q = qubit_ops();
    return {0.5 * omega * q.sz, {{q.sm, gamma, "qubit"}}};
}

}  // namespace

TEST(Unitary, ResonantVacuumRabi) {
    const double g = 1.3;
    const auto spec = HilbertSpec::magnon_spins(4, 1);
    const auto h = build_H_TC(spec, SqueezedFrame::injected(g, 0.0), 0.0);
    const auto times = grid(5.0, 51);
    const auto traj = evolve_unitary(h, QuantumState::basis(spec, {0, 1}), times, population_observables(spec));
    const auto& pe = populations(traj, "spin1");
    const auto& nm = populations(traj, "magnon");
    for (std::size_t i = 0; i < times.size(); ++i) {
        EXPECT_NEAR(pe[i], std::pow(std::cos(g * times[i]), 2), 1e-12);
        EXPECT_NEAR(nm[i] + pe[i], 1.0, 1e-12);
    }
    EXPECT_LT(traj.diagnostics.max_norm_error, 1e-12);
}

TEST(Unitary, RejectsBadInputs) {
    const auto spec = HilbertSpec::qubits(1);
    const auto h = 0.5 * qubit_ops().sz;
    const auto psi = QuantumState::basis(spec, {1});
    EXPECT_THROW(evolve_unitary(h, psi, {}, {}), std::invalid_argument);
    EXPECT_THROW(evolve_unitary(h, psi, {0.0, 1.0, 0.5}, {}), std::invalid_argument);
    EXPECT_THROW(evolve_unitary(qubit_ops().sp, psi, {0.0}, {}), std::domain_error);
    EXPECT_THROW(evolve_unitary(h, QuantumState::basis(HilbertSpec::boson(2), {0}), {0.0}, {}), DimensionError);
}

TEST(Lindblad, SpontaneousDecay) {
    const double gamma = 2.0;
    const auto model = decaying_qubit(gamma, 10.0);
    const auto spec = model.spec();
    const auto times = grid(3.0, 31);
    const auto traj = evolve_lindblad(model, QuantumState::basis(spec, {1}), times, population_observables(spec));
    const auto& pe = populations(traj, "spin1");
    for (std::size_t i = 0; i < times.size(); ++i) EXPECT_NEAR(pe[i], std::exp(-gamma * times[i]), 1e-7);
    EXPECT_LT(traj.diagnostics.max_trace_error, 1e-12);
    EXPECT_LE(traj.diagnostics.step * traj.diagnostics.rate_bound, IntegratorOptions::max_courant);
}

TEST(Lindblad, CavityRingDown) {
    const double kappa = 0.5;
    const auto spec = HilbertSpec::boson(8);
    const auto a = annihilation(8);
    const LindbladModel model{1.0 * (a.adjoint() * a), {{a, kappa, "magnon"}}};
    const auto times = grid(4.0, 9);
    const auto traj = evolve_lindblad(model, QuantumState::basis(spec, {3}), times, {{"n", a.adjoint() * a}});
    for (std::size_t i = 0; i < times.size(); ++i) EXPECT_NEAR(traj.series[0][i], 3.0 * std::exp(-kappa * times[i]), 1e-7);
}

TEST(Lindblad, DirectAndPropagatorAgree) {
    const auto spec = HilbertSpec::magnon_spins(3, 1);
    const auto frame = SqueezedFrame::injected(1.0, 2.0);
    const auto h = build_H_TC(spec, frame, 1.0);
    const ModeOperators ops(spec);
    const LindbladModel model{h, {{ops.magnon(), 0.3, "magnon"}, {ops.sm[0], 0.05, "spin1"}}};
    const auto times = grid(6.0, 13);
    const auto rho0 = QuantumState::basis(spec, {0, 1});
    IntegratorOptions direct, prop;
    direct.method = IntegratorOptions::Method::Direct;
    prop.method = IntegratorOptions::Method::Propagator;
    const auto obs = population_observables(spec);
    const auto a = evolve_lindblad(model, rho0, times, obs, direct);
    const auto b = evolve_lindblad(model, rho0, times, obs, prop);
    EXPECT_EQ(a.diagnostics.method, "rk4-direct");
    EXPECT_EQ(b.diagnostics.method, "rk4-propagator");
    for (std::size_t k = 0; k < obs.size(); ++k)
        for (std::size_t i = 0; i < times.size(); ++i) EXPECT_NEAR(a.series[k][i], b.series[k][i], 1e-8);
}

TEST(Lindblad, ZeroRatesReduceToUnitary) {
    const auto spec = HilbertSpec::magnon_spins(4, 1);
    const auto h = build_H_TC(spec, SqueezedFrame::injected(0.8, 0.5), 0.2);
    const ModeOperators ops(spec);
    const LindbladModel model{h, {{ops.magnon(), 0.0, "magnon"}}};
    const auto times = grid(8.0, 17);
    const auto psi0 = QuantumState::basis(spec, {0, 1});
    const auto u = evolve_unitary(h, psi0, times, population_observables(spec));
    const auto l = evolve_lindblad(model, psi0, times, population_observables(spec));
    for (std::size_t k = 0; k < u.series.size(); ++k)
        for (std::size_t i = 0; i < times.size(); ++i) EXPECT_NEAR(u.series[k][i], l.series[k][i], 1e-6);
}

TEST(Lindblad, StepRuleEnforced) {
    const auto model = decaying_qubit(1.0, 100.0);
    // rate bound = 100/2 * 2 / 2 ... half-width of (omega/2) sz is omega/2 = 50, plus gamma = 1.
    IntegratorOptions ok;
    ok.step = 0.1 / 51.0;
    EXPECT_NO_THROW(LindbladSolver(model, ok));
    IntegratorOptions bad;
    bad.step = 0.11 / 51.0;
    EXPECT_THROW(LindbladSolver(model, bad), StepSizeError);
    IntegratorOptions courant;
    courant.courant = 0.2;
    EXPECT_THROW(LindbladSolver(model, courant), StepSizeError);
    EXPECT_NEAR(LindbladSolver(model, {}).rate_bound(), 51.0, 1e-12);
}

TEST(Lindblad, ConstantShiftDoesNotChangeStep) {
    const auto spec = HilbertSpec::qubits(1);
    const auto q = qubit_ops();
    const LindbladModel a{0.5 * q.sz, {}};
    const LindbladModel b{0.5 * q.sz + 1e6 * OperatorMatrix::identity(spec), {}};
    EXPECT_NEAR(LindbladSolver(a, {}).rate_bound(), LindbladSolver(b, {}).rate_bound(), 1e-6);
}

TEST(Lindblad, NegativeRateRejected) {
    auto model = decaying_qubit(1.0);
    model.collapses[0].rate = -1.0;
    EXPECT_THROW(evolve_lindblad(model, QuantumState::basis(model.spec(), {1}), {0.0, 1.0}, {}), std::domain_error);
}

TEST(Lindblad, ObservableSpecMismatch) {
    const auto model = decaying_qubit(1.0);
    EXPECT_THROW(evolve_lindblad(model, QuantumState::basis(model.spec(), {1}), {0.0, 1.0}, {{"n", annihilation(2)}}),
                 DimensionError);
}

TEST(Lindblad, StepHalvingConverges) {
    const auto model = decaying_qubit(1.0, 3.0);
    const auto spec = model.spec();
    const auto times = grid(2.0, 5);
    IntegratorOptions coarse, fine;
    coarse.courant = 0.1;
    fine.courant = 0.05;
    coarse.method = fine.method = IntegratorOptions::Method::Direct;
    const auto a = evolve_lindblad(model, QuantumState::basis(spec, {1}), times, population_observables(spec), coarse);
    const auto b = evolve_lindblad(model, QuantumState::basis(spec, {1}), times, population_observables(spec), fine);
    double err_a = 0.0, err_b = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        err_a = std::max(err_a, std::abs(a.series[0][i] - std::exp(-times[i])));
        err_b = std::max(err_b, std::abs(b.series[0][i] - std::exp(-times[i])));
    }
    EXPECT_LT(err_b, err_a);
    EXPECT_LT(err_b, 1e-6);
}

TEST(Helpers, KronAndPower) {
    Matrix a(2, 2), b = Matrix::Identity(3, 3);
    a << 1.0, 2.0, 3.0, 4.0;
    const Matrix k = detail::kron(a, b);
    EXPECT_EQ(k(3, 0), cplx(3.0));
    EXPECT_EQ(k(4, 1), cplx(3.0));
    const Matrix p = detail::matrix_power(a, 5);
    EXPECT_LT((p - a * a * a * a * a).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(detail::next_pow2(5), 8u);
    EXPECT_EQ(detail::next_pow2(8), 8u);
}
