#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace trajkrotov {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using SparseMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Raised when a caller violates a documented precondition (dimension
/// mismatch, invalid parameter range, malformed input).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure fails to reach its tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A pure state was reduced to the zero vector.
class TrajectoryAnnihilated : public NumericalError {
public:
    using NumericalError::NumericalError;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw ContractError(message);
}

/// Complex amplitude vector over the model basis. Trajectory states between
/// jumps are deliberately allowed to be sub-normalized.
class StateVector {
public:
    StateVector() = default;
    explicit StateVector(Eigen::Index dim) : amplitudes_(Vec::Zero(dim)) {}
    explicit StateVector(Vec amplitudes) : amplitudes_(std::move(amplitudes)) {}

    static StateVector basis_state(Eigen::Index dim, Eigen::Index index);

    Eigen::Index dim() const { return amplitudes_.size(); }
    const Vec& amplitudes() const { return amplitudes_; }
    cplx operator[](Eigen::Index i) const { return amplitudes_(i); }
    double norm_squared() const { return amplitudes_.squaredNorm(); }
    bool is_normalized(double tol = 1e-12) const { return std::abs(norm_squared() - 1.0) <= tol; }

private:
    Vec amplitudes_;
};

/// Sparse d x d operator. The hermitian flag is verified at construction.
class Operator {
public:
    Operator() = default;
    explicit Operator(SparseMat entries, bool hermitian = false);

    static Operator from_dense(const Mat& dense, bool hermitian = false);
    static Operator zero(Eigen::Index dim);
    static Operator identity(Eigen::Index dim);

    Eigen::Index dim() const { return entries_.rows(); }
    const SparseMat& matrix() const { return entries_; }
    bool is_hermitian() const { return hermitian_; }
    Mat to_dense() const { return Mat(entries_); }

    Operator adjoint() const;
    Vec apply(const Vec& v) const;
    StateVector apply(const StateVector& psi) const { return StateVector(apply(psi.amplitudes())); }

    /// Maximum absolute column sum; an upper bound for the spectral norm
    /// usable for step-size selection.
    double one_norm() const;

private:
    SparseMat entries_;
    bool hermitian_ = false;
};

Operator operator+(const Operator& a, const Operator& b);
Operator operator-(const Operator& a, const Operator& b);
Operator operator*(cplx s, const Operator& a);
Operator operator*(const Operator& a, const Operator& b);

/// Hermitian, unit-trace density matrix (not enforced per step, validated by
/// `check_valid`).
class DensityMatrix {
public:
    DensityMatrix() = default;
    explicit DensityMatrix(Mat entries);

    static DensityMatrix from_state(const StateVector& psi);

    Eigen::Index dim() const { return entries_.rows(); }
    const Mat& matrix() const { return entries_; }
    cplx trace() const { return entries_.trace(); }

    /// Throws ContractError unless Hermitian to `herm_tol` and trace one to
    /// `trace_tol`.
    void check_valid(double herm_tol = 1e-10, double trace_tol = 1e-8) const;

private:
    Mat entries_;
};

/// <psi|A|psi>
cplx expectation(const Operator& op, const StateVector& psi);
/// tr[rho A]
cplx expectation(const Operator& op, const DensityMatrix& rho);

/// Hilbert-Schmidt overlap tr[a^dagger b].
cplx hs_overlap(const Mat& a, const Mat& b);
inline cplx hs_overlap(const DensityMatrix& a, const DensityMatrix& b) { return hs_overlap(a.matrix(), b.matrix()); }
inline cplx hs_overlap(const Operator& a, const Operator& b) { return hs_overlap(a.to_dense(), b.to_dense()); }
inline cplx hs_overlap(const Operator& a, const DensityMatrix& b) { return hs_overlap(a.to_dense(), b.matrix()); }
inline cplx hs_overlap(const DensityMatrix& a, const Operator& b) { return hs_overlap(a.matrix(), b.to_dense()); }

/// <a|b>
cplx overlap(const StateVector& a, const StateVector& b);

struct Normalized {
    StateVector state;
    double norm_squared;
};

/// Unit-norm copy of `psi` together with its original squared norm. Throws
/// TrajectoryAnnihilated for the zero vector.
Normalized normalize(const StateVector& psi);

/// |psi><psi| as a dense matrix.
Mat projector(const StateVector& psi);

/// Half the trace norm of a - b, for Hermitian arguments.
double trace_distance(const Mat& a, const Mat& b);

}  // namespace trajkrotov
