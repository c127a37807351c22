#pragma once

// Two-qubit channels reconstructed from evolved tomography inputs, and their
// fidelity to the iSWAP gate.
//
// Two-qubit basis order: |gg>, |ge>, |eg>, |ee> (index 2*s1 + s2, 1 = excited).

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "kmag/constants.hpp"
#include "kmag/dynamics.hpp"

namespace kmag {

class DiagnosticsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int two_qubit_dim = 4;

/// |gg> -> |gg>, |ge> -> -i|eg>, |eg> -> -i|ge>, |ee> -> |ee>.
inline Matrix iswap_matrix() {
    Matrix u = Matrix::Zero(4, 4);
    u(0, 0) = 1.0;
    u(2, 1) = cplx(0.0, -1.0);
    u(1, 2) = cplx(0.0, -1.0);
    u(3, 3) = 1.0;
    return u;
}

inline QuantumState iswap_ideal_map(const QuantumState& state) {
    if (!(state.spec() == HilbertSpec::qubits(2))) throw DimensionError("iswap_ideal_map: expected a two-qubit state");
    const Matrix u = iswap_matrix();
    if (state.is_pure()) return QuantumState::ket(state.spec(), u * state.vector());
    return QuantumState::density(state.spec(), u * state.density_matrix() * u.adjoint());
}

/// Linear map on 4x4 operators, stored as a column-stacking superoperator.
struct Channel {
    Matrix superop;  // 16 x 16

    static Channel unitary(const Matrix& u) { return {detail::kron(u.conjugate(), u)}; }
    static Channel identity() { return {Matrix::Identity(16, 16)}; }

    Matrix apply(const Matrix& rho) const {
        Eigen::Map<const Vector> v(rho.data(), rho.size());
        Vector out = superop * v;
        return Eigen::Map<Matrix>(out.data(), rho.rows(), rho.cols());
    }

    /// max_j |tr E(X_j) - tr X_j| over matrix units.
    double trace_defect() const {
        Vector vec_id = Vector::Zero(16);
        for (int i = 0; i < 4; ++i) vec_id(i * 5) = 1.0;
        const Vector row = superop.transpose() * vec_id;
        return (row - vec_id).cwiseAbs().maxCoeff();
    }
};

/// Product inputs {|g>, |e>, |+>, |+i>} per qubit, spin 1 outer.
inline std::vector<Matrix> tomography_inputs() {
    const double s = 1.0 / std::numbers::sqrt2;
    const std::array<Vector, 4> local = [&] {
        std::array<Vector, 4> k;
        for (auto& v : k) v = Vector::Zero(2);
        k[0](0) = 1.0;
        k[1](1) = 1.0;
        k[2](0) = s;
        k[2](1) = s;
        k[3](0) = s;
        k[3](1) = cplx(0.0, s);
        return k;
    }();
    std::vector<Matrix> out;
    for (const auto& a : local)
        for (const auto& b : local) {
            Vector psi(4);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) psi(2 * i + j) = a(i) * b(j);
            out.push_back(psi * psi.adjoint());
        }
    return out;
}

/// Linear-inversion reconstruction from evolved tomography inputs.
inline Channel reconstruct_channel(const std::vector<Matrix>& inputs, const std::vector<Matrix>& outputs,
                                   double trace_tolerance = 1e-6) {
    if (inputs.size() != 16 || outputs.size() != 16)
        throw std::invalid_argument("reconstruct_channel: need 16 input/output pairs");
    Matrix in(16, 16), out(16, 16);
    for (int k = 0; k < 16; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        if (inputs[idx].rows() != 4 || outputs[idx].rows() != 4)
            throw DimensionError("reconstruct_channel: expected 4x4 operators");
        in.col(k) = Eigen::Map<const Vector>(inputs[idx].data(), 16);
        out.col(k) = Eigen::Map<const Vector>(outputs[idx].data(), 16);
    }
    Channel ch{out * in.fullPivLu().inverse()};
    const double defect = ch.trace_defect();
    if (defect > trace_tolerance)
        throw DiagnosticsError("reconstructed channel is not trace preserving (defect " + std::to_string(defect) + ")");
    return ch;
}

/// Entanglement fidelity (1/d^2) tr(S_U^dag S) of the channel with unitary u.
inline double process_fidelity(const Channel& ch, const Matrix& u) {
    return (Channel::unitary(u).superop.adjoint() * ch.superop).trace().real() / 16.0;
}

inline double average_gate_fidelity(double process, int d = two_qubit_dim) { return (d * process + 1.0) / (d + 1.0); }

struct GateFidelity {
    double process_raw = 0.0;
    double process_stripped = 0.0;
    double average_raw = 0.0;
    double average_stripped = 0.0;
    double phase1 = 0.0;  // local z phases applied after the ideal gate
    double phase2 = 0.0;
    double transfer = 0.0;  // <ge| E(|eg><eg|) |ge>
};

/// Fidelity against `u`, raw and maximized over local z rotations
/// diag(1, e^{i p2}) (x) ... applied after u.
inline GateFidelity gate_fidelity(const Channel& ch, const Matrix& u = iswap_matrix()) {
    // F(p) = (1/16) sum_{r,c} e^{-i(th_r - th_c)} w_{rc}, with w the diagonal of
    // S (U-bar (x) U)^dag and th_r = p1 * bit1(r) + p2 * bit2(r).
    const Matrix w_full = ch.superop * Channel::unitary(u).superop.adjoint();
    std::array<cplx, 16> w{};
    for (int k = 0; k < 16; ++k) w[static_cast<std::size_t>(k)] = w_full(k, k);
    const auto theta = [](int r, double p1, double p2) { return p1 * ((r >> 1) & 1) + p2 * (r & 1); };
    const auto f = [&](double p1, double p2) {
        cplx acc{};
        for (int c = 0; c < 4; ++c)
            for (int r = 0; r < 4; ++r)
                acc += std::polar(1.0, -(theta(r, p1, p2) - theta(c, p1, p2))) * w[static_cast<std::size_t>(r + 4 * c)];
        return acc.real() / 16.0;
    };

    GateFidelity out;
    out.process_raw = f(0.0, 0.0);

    // Coarse grid, then coordinate ascent; along each axis F = A + Re(B e^{ip}).
    constexpr int grid = 24;
    double best = -1.0, b1 = 0.0, b2 = 0.0;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            const double p1 = two_pi * i / grid, p2 = two_pi * j / grid;
            const double v = f(p1, p2);
            if (v > best) { best = v; b1 = p1; b2 = p2; }
        }
    const auto axis_max = [&](auto&& g) {
        const double f0 = g(0.0), fpi = g(std::numbers::pi), fh = g(0.5 * std::numbers::pi);
        const double a = 0.5 * (f0 + fpi);
        const cplx b(f0 - a, a - fh);
        return -std::arg(b);
    };
    for (int it = 0; it < 200; ++it) {
        b1 = axis_max([&](double p) { return f(p, b2); });
        b2 = axis_max([&](double p) { return f(b1, p); });
        const double v = f(b1, b2);
        const bool done = std::abs(v - best) < 1e-16;
        best = std::max(best, v);
        if (done) break;
    }
    out.process_stripped = std::max(best, out.process_raw);
    out.phase1 = std::remainder(b1, two_pi);
    out.phase2 = std::remainder(b2, two_pi);
    out.average_raw = average_gate_fidelity(out.process_raw);
    out.average_stripped = average_gate_fidelity(out.process_stripped);

    Matrix eg = Matrix::Zero(4, 4);
    eg(2, 2) = 1.0;
    out.transfer = ch.apply(eg)(1, 1).real();
    return out;
}

struct ChannelSeries {
    std::vector<double> times;
    std::vector<Channel> channels;
    EvolutionDiagnostics diagnostics;
};

/// Two-spin channel at every grid time: tomography inputs on the spins, magnon
/// (if present) starting in vacuum and traced out at the end. Runs without
/// dissipation use the exact unitary propagator.
inline ChannelSeries evolve_channel(const LindbladModel& model, const std::vector<double>& times,
                                    IntegratorOptions options = {}) {
    const auto& spec = model.spec();
    if (spec.spin_count() != 2) throw DimensionError("evolve_channel: model must contain exactly two spins");
    detail::validate_times(times);
    model.validate();
    const auto inputs = tomography_inputs();
    ChannelSeries out;
    out.times = times;

    if (!model.dissipative()) {
        const Eigen::SelfAdjointEigenSolver<Matrix> es(model.hamiltonian.mat);
        const Matrix& v = es.eigenvectors();
        const Eigen::VectorXd& e = es.eigenvalues();
        // Columns: evolved |magnon 0> (x) |k> for the four spin basis states.
        Matrix basis = Matrix::Zero(spec.dim(), 4);
        for (int k = 0; k < 4; ++k) basis(k, k) = 1.0;
        const Matrix coeffs = v.adjoint() * basis;
        out.diagnostics.method = "eigendecomposition";
        for (double t : times) {
            Vector phase(e.size());
            for (Eigen::Index k = 0; k < e.size(); ++k) phase(k) = std::polar(1.0, -e(k) * t);
            const Matrix evolved = v * (phase.asDiagonal() * coeffs);
            std::vector<Matrix> outs;
            outs.reserve(16);
            for (const auto& rho_in : inputs) {
                const Matrix rho = evolved * rho_in * evolved.adjoint();
                detail::record_density_diagnostics(out.diagnostics, rho);
                outs.push_back(trace_out_magnon(rho, spec));
            }
            out.channels.push_back(reconstruct_channel(inputs, outs));
        }
        return out;
    }

    LindbladSolver solver(model, options);
    std::vector<Matrix> states;
    states.reserve(16);
    for (const auto& rho_in : inputs) states.push_back(with_magnon_vacuum(rho_in, spec));
    solver.propagate(states, times, [&](std::size_t, const std::vector<Matrix>& s) {
        std::vector<Matrix> outs;
        outs.reserve(16);
        for (const auto& rho : s) {
            detail::record_density_diagnostics(out.diagnostics, rho);
            outs.push_back(trace_out_magnon(rho, spec));
        }
        out.channels.push_back(reconstruct_channel(inputs, outs));
    });
    out.diagnostics.method = solver.method();
    out.diagnostics.step = solver.max_step();
    out.diagnostics.rate_bound = solver.rate_bound();
    return out;
}

}  // namespace kmag
