#pragma once

// Dense operators on truncated tensor-product spaces: one bosonic mode
// followed by zero or more two-level spins.
//
// Ordering convention (fixed): magnon first, then spins in index order. The
// composite basis index is row-major over that list, so for (magnon, spin1,
// spin2) the index of |n, s1, s2> is (n * 2 + s1) * 2 + s2. Qubit basis index 0
// is |g>, index 1 is |e>.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace kmag {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class SubsystemKind { Boson, Qubit };

struct Subsystem {
    SubsystemKind kind;
    int dim;
    std::string label;

    bool operator==(const Subsystem&) const = default;
    std::string tag() const {
        return kind == SubsystemKind::Boson ? "boson(" + std::to_string(dim) + ")" : "qubit";
    }
};

class HilbertSpec {
public:
    HilbertSpec() = default;

    /// Magnon with `cutoff` Fock states followed by `spins` qubits labelled
    /// spin1, spin2, ... A cutoff of 0 means no magnon.
    static HilbertSpec magnon_spins(int cutoff, int spins) {
        std::vector<Subsystem> parts;
        if (cutoff != 0) {
            if (cutoff < 2) throw DimensionError("boson cutoff must be >= 2, got " + std::to_string(cutoff));
            parts.push_back({SubsystemKind::Boson, cutoff, "magnon"});
        }
        for (int i = 0; i < spins; ++i)
            parts.push_back({SubsystemKind::Qubit, 2, "spin" + std::to_string(i + 1)});
        return HilbertSpec(std::move(parts));
    }
    static HilbertSpec boson(int cutoff) { return magnon_spins(cutoff, 0); }
    static HilbertSpec qubits(int n) { return magnon_spins(0, n); }

    explicit HilbertSpec(std::vector<Subsystem> parts) : parts_(std::move(parts)) {
        if (parts_.empty()) throw DimensionError("Hilbert spec needs at least one subsystem");
        bool seen_qubit = false;
        for (const auto& p : parts_) {
            if (p.kind == SubsystemKind::Boson) {
                if (p.dim < 2) throw DimensionError("boson cutoff must be >= 2");
                if (seen_qubit) throw DimensionError("boson must precede spins in a Hilbert spec");
            } else {
                if (p.dim != 2) throw DimensionError("qubit subsystem must have dimension 2");
                seen_qubit = true;
            }
        }
    }

    int size() const { return static_cast<int>(parts_.size()); }
    const Subsystem& operator[](int slot) const { return parts_.at(static_cast<std::size_t>(slot)); }
    const std::vector<Subsystem>& parts() const { return parts_; }

    int dim() const {
        int d = 1;
        for (const auto& p : parts_) d *= p.dim;
        return d;
    }
    int dim(int slot) const { return (*this)[slot].dim; }

    int slot_of(const std::string& label) const {
        for (int i = 0; i < size(); ++i)
            if (parts_[static_cast<std::size_t>(i)].label == label) return i;
        throw DimensionError("no subsystem labelled '" + label + "'");
    }
    bool has_magnon() const { return !parts_.empty() && parts_.front().kind == SubsystemKind::Boson; }
    int spin_count() const { return size() - (has_magnon() ? 1 : 0); }
    int spin_slot(int spin_index) const { return (has_magnon() ? 1 : 0) + spin_index; }
    int cutoff() const { return has_magnon() ? parts_.front().dim : 0; }

    /// Composite basis index for per-slot local indices.
    int index(const std::vector<int>& local) const {
        if (static_cast<int>(local.size()) != size()) throw DimensionError("index: wrong number of local indices");
        int idx = 0;
        for (int i = 0; i < size(); ++i) {
            const int l = local[static_cast<std::size_t>(i)];
            if (l < 0 || l >= dim(i)) throw DimensionError("index: local index out of range");
            idx = idx * dim(i) + l;
        }
        return idx;
    }

    bool operator==(const HilbertSpec&) const = default;

private:
    std::vector<Subsystem> parts_;
};

/// Square dense operator tied to the space it acts on.
struct OperatorMatrix {
    HilbertSpec spec;
    Matrix mat;

    OperatorMatrix() = default;
    OperatorMatrix(HilbertSpec s, Matrix m) : spec(std::move(s)), mat(std::move(m)) {
        if (mat.rows() != spec.dim() || mat.cols() != spec.dim())
            throw DimensionError("operator dimension " + std::to_string(mat.rows()) + "x" +
                                 std::to_string(mat.cols()) + " does not match spec dimension " +
                                 std::to_string(spec.dim()));
    }

    static OperatorMatrix identity(const HilbertSpec& s) { return {s, Matrix::Identity(s.dim(), s.dim())}; }
    static OperatorMatrix zero(const HilbertSpec& s) { return {s, Matrix::Zero(s.dim(), s.dim())}; }

    int dim() const { return static_cast<int>(mat.rows()); }
    OperatorMatrix adjoint() const { return {spec, mat.adjoint()}; }

    /// max |A - A^dagger| over entries.
    double hermiticity_error() const { return (mat - mat.adjoint()).cwiseAbs().maxCoeff(); }
    bool is_hermitian(double tol = 1e-12) const { return hermiticity_error() < tol; }

    OperatorMatrix& operator+=(const OperatorMatrix& o) { check(o); mat += o.mat; return *this; }
    OperatorMatrix& operator-=(const OperatorMatrix& o) { check(o); mat -= o.mat; return *this; }
    OperatorMatrix& operator*=(cplx s) { mat *= s; return *this; }

    friend OperatorMatrix operator+(OperatorMatrix a, const OperatorMatrix& b) { return a += b; }
    friend OperatorMatrix operator-(OperatorMatrix a, const OperatorMatrix& b) { return a -= b; }
    friend OperatorMatrix operator*(cplx s, OperatorMatrix a) { return a *= s; }
    friend OperatorMatrix operator*(double s, OperatorMatrix a) { return a *= cplx(s, 0.0); }
    friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
        a.check(b);
        return {a.spec, a.mat * b.mat};
    }

private:
    void check(const OperatorMatrix& o) const {
        if (!(spec == o.spec)) throw DimensionError("operators act on different Hilbert specs");
    }
};

inline OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) { return a * b - b * a; }

/// Largest absolute entry.
inline double max_norm(const OperatorMatrix& a) { return a.mat.size() ? a.mat.cwiseAbs().maxCoeff() : 0.0; }

/// Bosonic annihilation operator on `cutoff` Fock states.
inline OperatorMatrix annihilation(int cutoff) {
    const auto spec = HilbertSpec::boson(cutoff);
    Matrix a = Matrix::Zero(cutoff, cutoff);
    for (int n = 1; n < cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return {spec, a};
}

struct QubitOps {
    OperatorMatrix sz, sp, sm;
};

/// sigma_z |e> = +|e>, sigma_- |e> = |g>.
inline QubitOps qubit_ops() {
    const auto spec = HilbertSpec::qubits(1);
    Matrix sz = Matrix::Zero(2, 2), sp = Matrix::Zero(2, 2);
    sz(0, 0) = -1.0;
    sz(1, 1) = 1.0;
    sp(1, 0) = 1.0;  // |e><g|
    return {{spec, sz}, {spec, sp}, {spec, sp.adjoint()}};
}

/// op acting on `slot`, identity elsewhere.
inline OperatorMatrix embed(const OperatorMatrix& op, int slot, const HilbertSpec& spec) {
    if (slot < 0 || slot >= spec.size()) throw DimensionError("embed: slot out of range");
    if (op.dim() != spec.dim(slot))
        throw DimensionError("embed: operator dimension " + std::to_string(op.dim()) +
                             " does not match slot dimension " + std::to_string(spec.dim(slot)));
    int left = 1, right = 1;
    for (int i = 0; i < slot; ++i) left *= spec.dim(i);
    for (int i = slot + 1; i < spec.size(); ++i) right *= spec.dim(i);
    const int local = op.dim();
    const int d = spec.dim();
    Matrix out = Matrix::Zero(d, d);
    for (int l = 0; l < left; ++l)
        for (int i = 0; i < local; ++i)
            for (int j = 0; j < local; ++j) {
                const cplx v = op.mat(i, j);
                if (v == cplx{}) continue;
                const int row0 = (l * local + i) * right;
                const int col0 = (l * local + j) * right;
                for (int r = 0; r < right; ++r) out(row0 + r, col0 + r) = v;
            }
    return {spec, std::move(out)};
}

/// Embedded ladder and Pauli operators on a magnon/spins spec.
struct ModeOperators {
    HilbertSpec spec;
    std::optional<OperatorMatrix> m;         // magnon annihilation, if present
    std::vector<OperatorMatrix> sz, sp, sm;  // per spin

    explicit ModeOperators(HilbertSpec s) : spec(std::move(s)) {
        if (spec.has_magnon()) m = embed(annihilation(spec.cutoff()), 0, spec);
        const auto q = qubit_ops();
        for (int i = 0; i < spec.spin_count(); ++i) {
            const int slot = spec.spin_slot(i);
            sz.push_back(embed(q.sz, slot, spec));
            sp.push_back(embed(q.sp, slot, spec));
            sm.push_back(embed(q.sm, slot, spec));
        }
    }

    const OperatorMatrix& magnon() const {
        if (!m) throw DimensionError("spec has no magnon mode");
        return *m;
    }
    OperatorMatrix number() const { return magnon().adjoint() * magnon(); }
    OperatorMatrix excited(int spin) const { return sp.at(static_cast<std::size_t>(spin)) * sm.at(static_cast<std::size_t>(spin)); }
    OperatorMatrix identity() const { return OperatorMatrix::identity(spec); }

    /// Total excitation number m^dag m + sum sigma_+ sigma_-.
    OperatorMatrix excitation_number() const {
        auto n = spec.has_magnon() ? number() : OperatorMatrix::zero(spec);
        for (int i = 0; i < spec.spin_count(); ++i) n += excited(i);
        return n;
    }
};

/// Pure state or density matrix on a HilbertSpec.
class QuantumState {
public:
    static constexpr double norm_tol = 1e-10;
    static constexpr double trace_tol = 1e-10;
    static constexpr double eigen_floor = -1e-8;

    static QuantumState ket(HilbertSpec spec, Vector psi) {
        if (psi.size() != spec.dim()) throw DimensionError("state vector dimension does not match spec");
        if (std::abs(psi.norm() - 1.0) > norm_tol)
            throw std::domain_error("state vector is not normalized (norm " + std::to_string(psi.norm()) + ")");
        return QuantumState(std::move(spec), std::move(psi));
    }

    static QuantumState density(HilbertSpec spec, Matrix rho) {
        if (rho.rows() != spec.dim() || rho.cols() != spec.dim())
            throw DimensionError("density matrix dimension does not match spec");
        if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
            throw std::domain_error("density matrix is not hermitian");
        if (std::abs(rho.trace() - cplx(1.0)) > trace_tol)
            throw std::domain_error("density matrix trace is not 1");
        Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < eigen_floor)
            throw std::domain_error("density matrix is not positive semidefinite");
        return QuantumState(std::move(spec), std::move(rho));
    }

    /// Product basis state, one local index per slot.
    static QuantumState basis(const HilbertSpec& spec, const std::vector<int>& local) {
        Vector psi = Vector::Zero(spec.dim());
        psi(spec.index(local)) = 1.0;
        return ket(spec, std::move(psi));
    }

    const HilbertSpec& spec() const { return spec_; }
    bool is_pure() const { return std::holds_alternative<Vector>(data_); }
    const Vector& vector() const { return std::get<Vector>(data_); }

    Matrix density_matrix() const {
        if (is_pure()) {
            const auto& v = vector();
            return v * v.adjoint();
        }
        return std::get<Matrix>(data_);
    }

private:
    QuantumState(HilbertSpec spec, Vector psi) : spec_(std::move(spec)), data_(std::move(psi)) {}
    QuantumState(HilbertSpec spec, Matrix rho) : spec_(std::move(spec)), data_(std::move(rho)) {}

    HilbertSpec spec_;
    std::variant<Vector, Matrix> data_;
};

inline cplx expectation(const Vector& psi, const Matrix& op) { return psi.dot(op * psi); }
inline cplx expectation(const Matrix& rho, const Matrix& op) { return (rho * op).trace(); }

/// <psi|A|psi> or tr(rho A).
inline cplx expectation(const QuantumState& state, const OperatorMatrix& op) {
    if (!(state.spec() == op.spec)) throw DimensionError("expectation: state and operator specs differ");
    if (state.is_pure()) return expectation(state.vector(), op.mat);
    return expectation(state.density_matrix(), op.mat);
}

/// Trace out the leading boson of `rho`, keeping the spins.
inline Matrix trace_out_magnon(const Matrix& rho, const HilbertSpec& spec) {
    if (!spec.has_magnon()) return rho;
    const int n = spec.cutoff();
    const int rest = spec.dim() / n;
    Matrix out = Matrix::Zero(rest, rest);
    for (int k = 0; k < n; ++k) out += rho.block(k * rest, k * rest, rest, rest);
    return out;
}

/// |0><0|_magnon (x) rho_spins.
inline Matrix with_magnon_vacuum(const Matrix& rho_spins, const HilbertSpec& spec) {
    if (!spec.has_magnon()) return rho_spins;
    const int rest = spec.dim() / spec.cutoff();
    if (rho_spins.rows() != rest) throw DimensionError("with_magnon_vacuum: spin block dimension mismatch");
    Matrix out = Matrix::Zero(spec.dim(), spec.dim());
    out.topLeftCorner(rest, rest) = rho_spins;
    return out;
}

}  // namespace kmag
