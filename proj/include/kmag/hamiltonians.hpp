#pragma once

// Hamiltonians of the driven Kerr magnon coupled to one or two spins, the
// mean-field drive linearization and the Bogoliubov squeezed frame.
//
// Everything is in angular frequency units with hbar = 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmag/fock.hpp"

namespace kmag {

struct DriveConfig {
    double frequency = 0.0;  // omega_d
    double amplitude = 0.0;  // Omega_d, >= 0

    void validate() const {
        if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
            throw std::domain_error("drive amplitude must be non-negative");
        if (!std::isfinite(frequency)) throw std::domain_error("drive frequency must be finite");
    }
};

/// Sign of the 2 K N_m shift in the linearized magnon detuning. `Paper` uses
/// Delta_m = omega_m + 2 K N_m - omega_d; `Rederived` uses the minus sign that
/// follows from expanding -(K/2) m^dag m^dag m m around the mean field.
enum class DetuningConvention { Paper, Rederived };

inline DetuningConvention detuning_convention_from_string(const std::string& s) {
    if (s == "paper") return DetuningConvention::Paper;
    if (s == "rederived") return DetuningConvention::Rederived;
    throw std::invalid_argument("unknown detuning convention '" + s + "' (expected paper|rederived)");
}
inline std::string to_string(DetuningConvention c) { return c == DetuningConvention::Paper ? "paper" : "rederived"; }

class InstabilityError : public std::runtime_error {
public:
    InstabilityError(const std::string& what, double margin) : std::runtime_error(what), margin_(margin) {}
    /// (Delta_m - |K_2|) / |Delta_m| at the offending point; <= 0 when unstable.
    double margin() const { return margin_; }

private:
    double margin_;
};

class SingularDetuningError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// ---------------------------------------------------------------------------
// Mean-field steady state
// ---------------------------------------------------------------------------

struct SteadyAmplitude {
    cplx amplitude;               // <m> of the selected root
    double occupation = 0.0;      // N_m = |<m>|^2 of the selected root
    std::vector<double> roots;    // all real non-negative roots, ascending
    std::vector<bool> stable;     // per root
    std::size_t selected = 0;
};

/// Mean-field steady state of the driven, damped Kerr magnon:
///   N [(omega_m - omega_d - K N)^2 + kappa^2/4] = Omega_d^2,
///   <m> = -Omega_d / ((omega_m - omega_d - K N) - i kappa/2).
/// A root is stable when d(Omega_d^2)/dN > 0 there. By default the lowest
/// stable root is selected; `root_override` picks an index into `roots`.
inline SteadyAmplitude steady_amplitude(double omega_m, double kerr, double kappa_m, const DriveConfig& drive,
                                        std::optional<std::size_t> root_override = std::nullopt) {
    if (!(kappa_m >= 0.0)) throw std::domain_error("steady_amplitude: kappa_m must be non-negative");
    drive.validate();
    const double delta = omega_m - drive.frequency;
    const double half_k = 0.5 * kappa_m;
    const double drive2 = drive.amplitude * drive.amplitude;

    const auto f = [&](double n) {
        const double eff = delta - kerr * n;
        return n * (eff * eff + half_k * half_k) - drive2;
    };
    const auto slope = [&](double n) {
        return 3.0 * kerr * kerr * n * n - 4.0 * delta * kerr * n + delta * delta + half_k * half_k;
    };

    SteadyAmplitude out;
    std::vector<double> roots;
    if (drive.amplitude == 0.0) {
        roots.push_back(0.0);
        if (kappa_m == 0.0 && kerr != 0.0 && delta / kerr > 0.0) roots.push_back(delta / kerr);
    } else if (kerr == 0.0) {
        const double denom = delta * delta + half_k * half_k;
        if (denom == 0.0) throw std::runtime_error("steady_amplitude: resonant undamped linear drive has no steady state");
        roots.push_back(drive2 / denom);
    } else {
        // f is a cubic in N with positive leading coefficient and f(0) < 0.
        // Bracket between the critical points and bisect.
        std::vector<double> edges{0.0};
        const double a = 3.0 * kerr * kerr, b = -4.0 * delta * kerr, c = delta * delta + half_k * half_k;
        const double disc = b * b - 4.0 * a * c;
        if (disc > 0.0) {
            const double s = std::sqrt(disc);
            for (double cp : {(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)})
                if (cp > 0.0) edges.push_back(cp);
        }
        double hi = std::max(edges.back(), 1.0);
        while (f(hi) <= 0.0) hi *= 2.0;
        edges.push_back(hi);
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            double lo = edges[i], up = edges[i + 1];
            double flo = f(lo), fup = f(up);
            if (flo == 0.0) { roots.push_back(lo); continue; }
            if ((flo < 0.0) == (fup < 0.0)) continue;
            for (int it = 0; it < 200 && up - lo > 4.0 * std::numeric_limits<double>::epsilon() * up; ++it) {
                const double mid = 0.5 * (lo + up);
                const double fm = f(mid);
                if ((fm < 0.0) == (flo < 0.0)) { lo = mid; flo = fm; } else { up = mid; }
            }
            roots.push_back(0.5 * (lo + up));
        }
        std::sort(roots.begin(), roots.end());
        roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    }
    if (roots.empty()) throw std::logic_error("steady_amplitude: no non-negative root found");

    out.roots = roots;
    for (double n : roots) out.stable.push_back(slope(n) > 0.0 || (drive.amplitude == 0.0 && n == 0.0));
    if (root_override) {
        if (*root_override >= roots.size()) throw std::out_of_range("steady_amplitude: root index out of range");
        out.selected = *root_override;
    } else {
        const auto it = std::find(out.stable.begin(), out.stable.end(), true);
        out.selected = it == out.stable.end() ? 0 : static_cast<std::size_t>(it - out.stable.begin());
    }
    out.occupation = roots[out.selected];
    const double eff = delta - kerr * out.occupation;
    out.amplitude = drive.amplitude == 0.0 ? cplx{} : -drive.amplitude / cplx(eff, -half_k);
    return out;
}

// ---------------------------------------------------------------------------
// Linearization and squeezed frame
// ---------------------------------------------------------------------------

struct LinearizedParams {
    double magnon_detuning = 0.0;  // Delta_m
    double qubit_detuning = 0.0;   // Delta_q
    cplx mean_amplitude;           // <m> as solved; its phase is absorbed into m
    double occupation = 0.0;       // N_m
    double two_magnon = 0.0;       // K |<m>|^2 (real after the phase rotation)

    bool stable() const { return magnon_detuning > std::abs(two_magnon); }
    double stability_margin() const {
        if (magnon_detuning == 0.0) return -std::numeric_limits<double>::infinity();
        return (magnon_detuning - std::abs(two_magnon)) / std::abs(magnon_detuning);
    }
};

inline LinearizedParams linearize(double omega_m, double omega_q, double kerr, cplx mean_amplitude,
                                  const DriveConfig& drive,
                                  DetuningConvention convention = DetuningConvention::Paper) {
    LinearizedParams lin;
    lin.mean_amplitude = mean_amplitude;
    lin.occupation = std::norm(mean_amplitude);
    const double shift = 2.0 * kerr * lin.occupation;
    lin.magnon_detuning = omega_m + (convention == DetuningConvention::Paper ? shift : -shift) - drive.frequency;
    lin.qubit_detuning = omega_q - drive.frequency;
    lin.two_magnon = kerr * lin.occupation;
    return lin;
}

struct SqueezedFrame {
    double squeezing = 0.0;           // r_m
    double squeezed_detuning = 0.0;   // Delta_s
    double coupling = 0.0;            // G

    /// Frame quantities given directly rather than derived from a drive.
    static SqueezedFrame injected(double coupling, double squeezed_detuning, double squeezing = 0.0) {
        if (!std::isfinite(coupling) || !std::isfinite(squeezed_detuning) || !std::isfinite(squeezing))
            throw std::domain_error("squeezed frame quantities must be finite");
        return SqueezedFrame{squeezing, squeezed_detuning, coupling};
    }
};

/// r_m = (1/4) ln[(Delta_m + K2)/(Delta_m - K2)], Delta_s = sqrt(Delta_m^2 - K2^2),
/// G = g e^{r_m} / 2. Requires Delta_m > |K2|.
inline SqueezedFrame squeeze_frame(const LinearizedParams& lin, double bare_coupling) {
    const double dm = lin.magnon_detuning;
    const double k2 = lin.two_magnon;
    if (!lin.stable()) {
        throw InstabilityError("linearized magnon is beyond the instability threshold: Delta_m = " +
                                   std::to_string(dm) + ", |K2| = " + std::to_string(std::abs(k2)) +
                                   ", margin = " + std::to_string(lin.stability_margin()),
                               lin.stability_margin());
    }
    const double x = k2 / dm;
    SqueezedFrame frame;
    frame.squeezing = 0.25 * (std::log1p(x) - std::log1p(-x));
    frame.squeezed_detuning = std::sqrt((dm - k2) * (dm + k2));
    frame.coupling = 0.5 * bare_coupling * std::exp(frame.squeezing);
    return frame;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

namespace detail {

inline void require_spec(const HilbertSpec& spec, int min_spins, int max_spins, const char* who) {
    if (!spec.has_magnon() || spec.spin_count() < min_spins || spec.spin_count() > max_spins)
        throw DimensionError(std::string(who) + ": expected one magnon and " + std::to_string(min_spins) +
                             (min_spins == max_spins ? "" : ".." + std::to_string(max_spins)) + " spin(s)");
}

}  // namespace detail

/// 1/2 w_q sz + w_m m^dag m - (K/2) m^dag m^dag m m + g (s+ m + m^dag s-).
inline OperatorMatrix build_H_NL(const HilbertSpec& spec, double omega_q, double omega_m, double kerr, double g) {
    detail::require_spec(spec, 1, 1, "build_H_NL");
    const ModeOperators ops(spec);
    const auto& m = ops.magnon();
    const auto md = m.adjoint();
    auto h = 0.5 * omega_q * ops.sz[0] + omega_m * (md * m) - 0.5 * kerr * (md * md * m * m);
    h += g * (ops.sp[0] * m + md * ops.sm[0]);
    return h;
}

/// H_K2 = Delta_m m^dag m - 1/2 K2 (m^2 + m^dag^2) on a lone magnon mode.
inline OperatorMatrix two_magnon_hamiltonian(int cutoff, const LinearizedParams& lin) {
    const auto m = annihilation(cutoff);
    const auto md = m.adjoint();
    return lin.magnon_detuning * (md * m) - 0.5 * lin.two_magnon * (m * m + md * md);
}

struct LinearizedHamiltonian {
    OperatorMatrix hamiltonian;
    bool stable = true;
    double stability_margin = 0.0;
};

/// Drive-frame linearized Hamiltonian. Built even past the instability
/// threshold; `stable` reports which side of it the parameters are on.
inline LinearizedHamiltonian build_H_L(const HilbertSpec& spec, const LinearizedParams& lin, double g) {
    detail::require_spec(spec, 1, 1, "build_H_L");
    const ModeOperators ops(spec);
    const auto& m = ops.magnon();
    const auto md = m.adjoint();
    auto h = 0.5 * lin.qubit_detuning * ops.sz[0] + lin.magnon_detuning * (md * m) -
             0.5 * lin.two_magnon * (m * m + md * md);
    h += g * (ops.sp[0] * m + md * ops.sm[0]);
    return {std::move(h), lin.stable(), lin.stability_margin()};
}

/// Quantum Rabi model in the squeezed frame:
/// 1/2 Delta_q sz + Delta_s m^dag m + G (m^dag + m)(s+ + s-).
inline OperatorMatrix build_H_rabi(const HilbertSpec& spec, const SqueezedFrame& frame, double delta_q) {
    detail::require_spec(spec, 1, 1, "build_H_rabi");
    const ModeOperators ops(spec);
    const auto& m = ops.magnon();
    const auto md = m.adjoint();
    auto h = 0.5 * delta_q * ops.sz[0] + frame.squeezed_detuning * (md * m);
    h += frame.coupling * ((md + m) * (ops.sp[0] + ops.sm[0]));
    return h;
}

/// Bogoliubov-transformed H_L without dropping any coupling term:
/// 1/2 Delta_q sz + Delta_s m^dag m + g cosh r (s+ m + m^dag s-) + g sinh r (s+ m^dag + m s-).
/// Differs from build_H_rabi by a coupling of strength g e^{-r}/2.
inline OperatorMatrix build_H_squeezed_exact(const HilbertSpec& spec, const LinearizedParams& lin, double g,
                                             double delta_q) {
    detail::require_spec(spec, 1, 1, "build_H_squeezed_exact");
    const auto frame = squeeze_frame(lin, g);
    const ModeOperators ops(spec);
    const auto& m = ops.magnon();
    const auto md = m.adjoint();
    const auto& sp = ops.sp[0];
    const auto& sm = ops.sm[0];
    auto h = 0.5 * delta_q * ops.sz[0] + frame.squeezed_detuning * (md * m);
    h += g * std::cosh(frame.squeezing) * (sp * m + md * sm);
    h += g * std::sinh(frame.squeezing) * (sp * md + m * sm);
    return h;
}

/// Tavis-Cummings model: Delta_s m^dag m + sum_i [1/2 Delta_q sz_i + G (m^dag s-_i + m s+_i)].
inline OperatorMatrix build_H_TC(const HilbertSpec& spec, const SqueezedFrame& frame, double delta_q) {
    detail::require_spec(spec, 1, 8, "build_H_TC");
    const ModeOperators ops(spec);
    const auto& m = ops.magnon();
    const auto md = m.adjoint();
    auto h = frame.squeezed_detuning * (md * m);
    for (int i = 0; i < spec.spin_count(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        h += 0.5 * delta_q * ops.sz[k];
        h += frame.coupling * (md * ops.sm[k] + m * ops.sp[k]);
    }
    return h;
}

/// RWA for the Rabi model needs G << Delta_+ = Delta_s + Delta_q.
inline bool rwa_advisory(const SqueezedFrame& frame, double delta_q) {
    return frame.coupling >= (frame.squeezed_detuning + delta_q) / 10.0;
}

/// Dispersive elimination needs G << |Delta_-|.
inline bool dispersive_advisory(double coupling, double delta_minus) {
    return coupling >= std::abs(delta_minus) / 10.0;
}

struct EffectiveCoupling {
    double spin_frequency;  // omega_eff = (1 + 2 <n_s>) Delta_q^2 / Delta_-
    double exchange;        // G_eff = G^2 / Delta_-
};

inline EffectiveCoupling effective_coupling(double delta_q, double delta_minus, double coupling,
                                            double magnon_occupation) {
    if (delta_minus == 0.0 || !std::isfinite(delta_minus))
        throw SingularDetuningError("effective coupling: Delta_- = Delta_s - Delta_q must be non-zero");
    return {(1.0 + 2.0 * magnon_occupation) * delta_q * delta_q / delta_minus, coupling * coupling / delta_minus};
}

/// Effective spin-spin Hamiltonian on `spec` (two spins, with or without an
/// idle magnon mode): 1/2 omega_eff (sz1 + sz2) + G_eff (s+1 s-2 + h.c.).
inline OperatorMatrix build_H_eff(const HilbertSpec& spec, double delta_q, double delta_minus, double coupling,
                                  double magnon_occupation) {
    if (spec.spin_count() != 2) throw DimensionError("build_H_eff: expected exactly two spins");
    const auto eff = effective_coupling(delta_q, delta_minus, coupling, magnon_occupation);
    const ModeOperators ops(spec);
    auto h = 0.5 * eff.spin_frequency * (ops.sz[0] + ops.sz[1]);
    h += eff.exchange * (ops.sp[0] * ops.sm[1] + ops.sp[1] * ops.sm[0]);
    return h;
}

inline OperatorMatrix build_H_eff(double delta_q, double delta_minus, double coupling, double magnon_occupation) {
    return build_H_eff(HilbertSpec::qubits(2), delta_q, delta_minus, coupling, magnon_occupation);
}

}  // namespace kmag
