#pragma once

// Unitary and Lindblad time evolution with observable recording.
//
// Lindblad runs integrate
//   d rho/dt = -i[H, rho] + sum_k rate_k (c rho c^dag - {c^dag c, rho}/2)
// with fixed-step classical RK4. Because the generator is linear and time
// independent, one RK4 step is the fourth-order Taylor polynomial of h L; the
// solver either applies that polynomial step by step to each density matrix
// (Direct) or forms it once as a superoperator and raises it to the number of
// steps per output interval (Propagator). Both produce the same RK4 iterates.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmag/fock.hpp"

namespace kmag {

class StepSizeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct CollapseTerm {
    OperatorMatrix op;
    double rate = 0.0;
    std::string label;
};

struct LindbladModel {
    OperatorMatrix hamiltonian;
    std::vector<CollapseTerm> collapses;

    const HilbertSpec& spec() const { return hamiltonian.spec; }

    void validate() const {
        const double scale = std::max(1.0, max_norm(hamiltonian));
        if (hamiltonian.hermiticity_error() > 1e-12 * scale)
            throw std::domain_error("Lindblad model: Hamiltonian is not hermitian");
        for (const auto& c : collapses) {
            if (!(c.rate >= 0.0) || !std::isfinite(c.rate))
                throw std::domain_error("Lindblad model: collapse rate for '" + c.label + "' must be non-negative");
            if (!(c.op.spec == spec())) throw DimensionError("Lindblad model: collapse operator on a different spec");
        }
    }

    bool dissipative() const {
        return std::any_of(collapses.begin(), collapses.end(), [](const auto& c) { return c.rate > 0.0; });
    }
};

struct Observable {
    std::string label;
    OperatorMatrix op;
};

/// <m^dag m> for the magnon and <s+ s-> for each spin, labelled by subsystem.
inline std::vector<Observable> population_observables(const HilbertSpec& spec) {
    const ModeOperators ops(spec);
    std::vector<Observable> out;
    if (spec.has_magnon()) out.push_back({"magnon", ops.number()});
    for (int i = 0; i < spec.spin_count(); ++i) out.push_back({spec[spec.spin_slot(i)].label, ops.excited(i)});
    return out;
}

struct EvolutionDiagnostics {
    std::string method;            // eigendecomposition | rk4-direct | rk4-propagator
    double step = 0.0;             // largest RK4 step used (0 for exact propagation)
    double rate_bound = 0.0;       // spectral half-width of H + dissipative bound
    double max_norm_error = 0.0;   // pure states
    double max_trace_error = 0.0;  // density matrices
    double max_hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> series;  // series[k][i] = <obs_k>(times[i])
    std::vector<QuantumState> final_states;   // one element: the state at times.back()
    EvolutionDiagnostics diagnostics;

    const std::vector<double>& series_for(const std::string& label) const {
        for (std::size_t k = 0; k < labels.size(); ++k)
            if (labels[k] == label) return series[k];
        throw std::out_of_range("trajectory has no observable '" + label + "'");
    }
    const QuantumState& final_state() const { return final_states.at(0); }
};

/// Population series of a subsystem (magnon or spinN) recorded by
/// population_observables().
inline const std::vector<double>& populations(const Trajectory& traj, const std::string& subsystem) {
    for (std::size_t k = 0; k < traj.labels.size(); ++k)
        if (traj.labels[k] == subsystem) return traj.series[k];
    throw std::out_of_range("unknown subsystem '" + subsystem + "' in trajectory");
}

namespace detail {

inline void validate_times(const std::vector<double>& times) {
    if (times.empty()) throw std::invalid_argument("time grid is empty");
    if (!(times.front() >= 0.0)) throw std::invalid_argument("time grid must start at t >= 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");
}

inline Trajectory empty_trajectory(const std::vector<double>& times, const std::vector<Observable>& obs) {
    Trajectory t;
    t.times = times;
    for (const auto& o : obs) {
        t.labels.push_back(o.label);
        t.series.emplace_back();
        t.series.back().reserve(times.size());
    }
    return t;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Matrix matrix_power(Matrix base, std::uint64_t exponent) {
    Matrix result = Matrix::Identity(base.rows(), base.cols());
    bool first = true;
    while (exponent > 0) {
        if (exponent & 1U) {
            if (first) { result = base; first = false; }
            else result = (result * base).eval();
        }
        exponent >>= 1U;
        if (exponent > 0) base = (base * base).eval();
    }
    return result;
}

inline std::uint64_t next_pow2(std::uint64_t k) {
    std::uint64_t p = 1;
    while (p < k) p <<= 1U;
    return p;
}

}  // namespace detail

/// psi(t) = exp(-i H t) psi0 through the eigendecomposition of H.
inline Trajectory evolve_unitary(const OperatorMatrix& h, const QuantumState& psi0, const std::vector<double>& times,
                                 const std::vector<Observable>& observables) {
    detail::validate_times(times);
    if (!psi0.is_pure()) throw std::invalid_argument("evolve_unitary: initial state must be a state vector");
    if (!(psi0.spec() == h.spec)) throw DimensionError("evolve_unitary: state and Hamiltonian specs differ");
    if (h.hermiticity_error() > 1e-12 * std::max(1.0, max_norm(h)))
        throw std::domain_error("evolve_unitary: Hamiltonian is not hermitian");
    for (const auto& o : observables)
        if (!(o.op.spec == h.spec)) throw DimensionError("observable '" + o.label + "' on a different spec");

    const Eigen::SelfAdjointEigenSolver<Matrix> es(h.mat);
    const Matrix& v = es.eigenvectors();
    const Eigen::VectorXd& e = es.eigenvalues();
    const Vector coeffs = v.adjoint() * psi0.vector();

    auto traj = detail::empty_trajectory(times, observables);
    traj.diagnostics.method = "eigendecomposition";
    Vector psi;
    for (double t : times) {
        Vector phased(coeffs.size());
        for (Eigen::Index k = 0; k < coeffs.size(); ++k) phased(k) = std::polar(1.0, -e(k) * t) * coeffs(k);
        psi = v * phased;
        traj.diagnostics.max_norm_error = std::max(traj.diagnostics.max_norm_error, std::abs(psi.norm() - 1.0));
        for (std::size_t k = 0; k < observables.size(); ++k)
            traj.series[k].push_back(expectation(psi, observables[k].op.mat).real());
    }
    psi.normalize();
    traj.final_states.push_back(QuantumState::ket(h.spec, psi));
    return traj;
}

struct IntegratorOptions {
    enum class Method { Auto, Direct, Propagator };
    /// Fixed RK4 step in seconds; 0 picks courant / rate_bound.
    double step = 0.0;
    /// Target value of step * rate_bound for automatic steps.
    double courant = 0.05;
    Method method = Method::Auto;

    /// Upper limit on step * rate_bound; larger explicit steps are rejected.
    static constexpr double max_courant = 0.1;
};

/// Fixed-step RK4 integrator for one Lindblad model.
class LindbladSolver {
public:
    LindbladSolver(const LindbladModel& model, IntegratorOptions options) : model_(model), options_(options) {
        model_.validate();
        if (!(options_.courant > 0.0) || options_.courant > IntegratorOptions::max_courant)
            throw StepSizeError("integrator courant number must lie in (0, 0.1]");
        if (options_.step < 0.0 || !std::isfinite(options_.step))
            throw StepSizeError("integrator step must be non-negative");

        // Shifting H by a multiple of the identity leaves the commutator
        // unchanged, so only its spectral half-width limits the step.
        const Eigen::SelfAdjointEigenSolver<Matrix> es(model_.hamiltonian.mat, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
        const double mid = 0.5 * (lo + hi);
        hamiltonian_ = model_.hamiltonian.mat - cplx(mid) * Matrix::Identity(dim(), dim());
        rate_bound_ = 0.5 * (hi - lo);

        h_eff_ = hamiltonian_;
        for (const auto& c : model_.collapses) {
            if (c.rate == 0.0) continue;
            const Matrix cdc = c.op.mat.adjoint() * c.op.mat;
            h_eff_ -= cplx(0.0, 0.5 * c.rate) * cdc;
            // ||c^dag c|| bounds the dissipator's contribution to the spectrum.
            const Eigen::SelfAdjointEigenSolver<Matrix> ces(cdc, Eigen::EigenvaluesOnly);
            rate_bound_ += c.rate * ces.eigenvalues().maxCoeff();
            jumps_.push_back(std::sqrt(c.rate) * c.op.mat);
        }
        if (rate_bound_ <= 0.0) rate_bound_ = std::numeric_limits<double>::min();

        if (options_.step > 0.0 && options_.step * rate_bound_ > IntegratorOptions::max_courant * (1.0 + 1e-12))
            throw StepSizeError("integrator step " + std::to_string(options_.step) + " s violates step * rate_bound <= 0.1 (rate bound " +
                                std::to_string(rate_bound_) + " 1/s)");
        nominal_step_ = options_.step > 0.0 ? options_.step : options_.courant / rate_bound_;
    }

    int dim() const { return model_.hamiltonian.dim(); }
    double rate_bound() const { return rate_bound_; }
    double nominal_step() const { return nominal_step_; }

    /// Right-hand side of the master equation at rho.
    Matrix derivative(const Matrix& rho) const {
        const Matrix x = cplx(0.0, -1.0) * (h_eff_ * rho);
        Matrix out = x + x.adjoint();
        for (const auto& j : jumps_) out.noalias() += j * rho * j.adjoint();
        return out;
    }

    /// Vectorized (column-stacking) generator.
    Matrix superoperator() const {
        const Matrix eye = Matrix::Identity(dim(), dim());
        // -i(H_eff rho - rho H_eff^dag) + sum J rho J^dag
        Matrix l = detail::kron(eye, cplx(0.0, -1.0) * h_eff_) + detail::kron(cplx(0.0, 1.0) * h_eff_.conjugate(), eye);
        for (const auto& j : jumps_) l += detail::kron(j.conjugate(), j);
        return l;
    }

    /// Advance every state through `times`; `observe(i, states)` is called at
    /// each grid point. States are taken to be at t = 0 on entry.
    void propagate(std::vector<Matrix>& states, const std::vector<double>& times,
                   const std::function<void(std::size_t, const std::vector<Matrix>&)>& observe) {
        detail::validate_times(times);
        for (const auto& s : states)
            if (s.rows() != dim() || s.cols() != dim()) throw DimensionError("propagate: state dimension mismatch");

        const bool use_propagator = choose_propagator(times, states.size());
        method_ = use_propagator ? "rk4-propagator" : "rk4-direct";
        double t_prev = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double interval = times[i] - t_prev;
            if (interval > 0.0) {
                std::uint64_t k = steps_for(interval);
                if (use_propagator) k = detail::next_pow2(k);
                const double h = interval / static_cast<double>(k);
                max_step_ = std::max(max_step_, h);
                if (use_propagator) {
                    const Matrix& p = propagator_for(k, h);
                    for (auto& s : states) {
                        Eigen::Map<const Vector> v(s.data(), s.size());
                        Vector out = p * v;
                        s = Eigen::Map<Matrix>(out.data(), dim(), dim());
                    }
                } else {
                    for (auto& s : states)
                        for (std::uint64_t n = 0; n < k; ++n) rk4_step(s, h);
                }
            }
            t_prev = times[i];
            observe(i, states);
        }
    }

    const std::string& method() const { return method_; }
    double max_step() const { return max_step_; }

private:
    std::uint64_t steps_for(double interval) const {
        const double ratio = interval / nominal_step_;
        const double k = std::ceil(ratio * (1.0 - 1e-12));
        return static_cast<std::uint64_t>(std::max(1.0, k));
    }

    bool choose_propagator(const std::vector<double>& times, std::size_t n_states) const {
        if (options_.method == IntegratorOptions::Method::Direct) return false;
        if (options_.method == IntegratorOptions::Method::Propagator) return true;
        const double d = dim();
        const double d2 = d * d;
        const double n_out = static_cast<double>(times.size());
        const double span = times.back();
        const double steps = std::max(1.0, span / nominal_step_);
        const double direct = steps * 4.0 * (2.0 + 2.0 * static_cast<double>(jumps_.size())) * d * d * d *
                              static_cast<double>(n_states);
        const double per_interval = std::max(1.0, steps / n_out);
        const double prop = (4.0 + std::log2(per_interval) + 1.0) * d2 * d2 * d2 + n_out * d2 * d2 * static_cast<double>(n_states);
        return prop < direct;
    }

    void rk4_step(Matrix& rho, double h) const {
        const Matrix k1 = derivative(rho);
        const Matrix k2 = derivative(rho + 0.5 * h * k1);
        const Matrix k3 = derivative(rho + 0.5 * h * k2);
        const Matrix k4 = derivative(rho + h * k3);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    const Matrix& propagator_for(std::uint64_t k, double h) {
        for (const auto& c : cache_)
            if (c.steps == k && std::abs(c.step - h) <= 1e-12 * h) return c.propagator;
        if (superop_.size() == 0) superop_ = superoperator();
        const Eigen::Index n = superop_.rows();
        const Matrix eye = Matrix::Identity(n, n);
        const Matrix x = h * superop_;
        // I + X (I + X/2 (I + X/3 (I + X/4)))
        Matrix p = eye + x / 4.0;
        p = eye + (x * p) / 3.0;
        p = eye + (x * p) / 2.0;
        p = eye + x * p;
        cache_.push_back({k, h, detail::matrix_power(std::move(p), k)});
        return cache_.back().propagator;
    }

    struct CachedPropagator {
        std::uint64_t steps;
        double step;
        Matrix propagator;
    };

    LindbladModel model_;
    IntegratorOptions options_;
    Matrix hamiltonian_;
    Matrix h_eff_;
    std::vector<Matrix> jumps_;
    double rate_bound_ = 0.0;
    double nominal_step_ = 0.0;
    double max_step_ = 0.0;
    std::string method_;
    Matrix superop_;
    std::vector<CachedPropagator> cache_;
};

namespace detail {

inline void record_density_diagnostics(EvolutionDiagnostics& diag, const Matrix& rho) {
    diag.max_trace_error = std::max(diag.max_trace_error, std::abs(rho.trace() - cplx(1.0)));
    diag.max_hermiticity_error = std::max(diag.max_hermiticity_error, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
    const Matrix herm = 0.5 * (rho + rho.adjoint());
    const Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    diag.min_eigenvalue = std::min(diag.min_eigenvalue, es.eigenvalues().minCoeff());
}

}  // namespace detail

/// Lindblad evolution of rho0 with observables recorded on `times`.
inline Trajectory evolve_lindblad(const LindbladModel& model, const QuantumState& rho0, const std::vector<double>& times,
                                  const std::vector<Observable>& observables, IntegratorOptions options = {}) {
    if (!(rho0.spec() == model.spec())) throw DimensionError("evolve_lindblad: state and model specs differ");
    for (const auto& o : observables)
        if (!(o.op.spec == model.spec())) throw DimensionError("observable '" + o.label + "' on a different spec");
    LindbladSolver solver(model, options);
    auto traj = detail::empty_trajectory(times, observables);
    std::vector<Matrix> states{rho0.density_matrix()};
    solver.propagate(states, times, [&](std::size_t, const std::vector<Matrix>& s) {
        detail::record_density_diagnostics(traj.diagnostics, s[0]);
        for (std::size_t k = 0; k < observables.size(); ++k)
            traj.series[k].push_back(expectation(s[0], observables[k].op.mat).real());
    });
    traj.diagnostics.method = solver.method();
    traj.diagnostics.step = solver.max_step();
    traj.diagnostics.rate_bound = solver.rate_bound();
    Matrix final = 0.5 * (states[0] + states[0].adjoint());
    final /= final.trace();
    traj.final_states.push_back(QuantumState::density(model.spec(), std::move(final)));
    return traj;
}

}  // namespace kmag
