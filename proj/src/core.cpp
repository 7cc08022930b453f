#include "trajkrotov/core.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace trajkrotov {

namespace {

double max_antihermitian_part(const Mat& m)
{
    if (m.size() == 0) return 0.0;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what)
{
    if (a != b) {
        std::ostringstream msg;
        msg << what << ": dimension mismatch (" << a << " vs " << b << ")";
        throw ContractError(msg.str());
    }
}

}  // namespace

StateVector StateVector::basis_state(Eigen::Index dim, Eigen::Index index)
{
    require(index >= 0 && index < dim, "basis_state: index out of range");
    Vec v = Vec::Zero(dim);
    v(index) = 1.0;
    return StateVector(std::move(v));
}

Operator::Operator(SparseMat entries, bool hermitian) : entries_(std::move(entries)), hermitian_(hermitian)
{
    require(entries_.rows() == entries_.cols(), "Operator: matrix must be square");
    entries_.makeCompressed();
    if (hermitian_ && max_antihermitian_part(Mat(entries_)) > 1e-12)
        throw ContractError("Operator: flagged hermitian but |A - A^dagger| > 1e-12");
}

Operator Operator::from_dense(const Mat& dense, bool hermitian)
{
    return Operator(SparseMat(dense.sparseView(0.0, 0.0)), hermitian);
}

Operator Operator::zero(Eigen::Index dim)
{
    return Operator(SparseMat(dim, dim), true);
}

Operator Operator::identity(Eigen::Index dim)
{
    SparseMat id(dim, dim);
    id.setIdentity();
    return Operator(std::move(id), true);
}

Operator Operator::adjoint() const
{
    return Operator(SparseMat(entries_.adjoint()), hermitian_);
}

Vec Operator::apply(const Vec& v) const
{
    require_same_dim(dim(), v.size(), "Operator::apply");
    return entries_ * v;
}

double Operator::one_norm() const
{
    Eigen::VectorXd col_sums = Eigen::VectorXd::Zero(dim());
    for (Eigen::Index r = 0; r < entries_.outerSize(); ++r)
        for (SparseMat::InnerIterator it(entries_, r); it; ++it) col_sums(it.col()) += std::abs(it.value());
    return col_sums.size() ? col_sums.maxCoeff() : 0.0;
}

Operator operator+(const Operator& a, const Operator& b)
{
    require_same_dim(a.dim(), b.dim(), "Operator +");
    return Operator(SparseMat(a.matrix() + b.matrix()), a.is_hermitian() && b.is_hermitian());
}

Operator operator-(const Operator& a, const Operator& b)
{
    require_same_dim(a.dim(), b.dim(), "Operator -");
    return Operator(SparseMat(a.matrix() - b.matrix()), a.is_hermitian() && b.is_hermitian());
}

Operator operator*(cplx s, const Operator& a)
{
    return Operator(SparseMat(s * a.matrix()), a.is_hermitian() && s.imag() == 0.0);
}

Operator operator*(const Operator& a, const Operator& b)
{
    require_same_dim(a.dim(), b.dim(), "Operator *");
    return Operator(SparseMat(a.matrix() * b.matrix()), false);
}

DensityMatrix::DensityMatrix(Mat entries) : entries_(std::move(entries))
{
    require(entries_.rows() == entries_.cols(), "DensityMatrix: matrix must be square");
}

DensityMatrix DensityMatrix::from_state(const StateVector& psi)
{
    return DensityMatrix(projector(psi));
}

void DensityMatrix::check_valid(double herm_tol, double trace_tol) const
{
    if (max_antihermitian_part(entries_) > herm_tol) throw ContractError("DensityMatrix: not Hermitian");
    if (std::abs(trace() - 1.0) > trace_tol) throw ContractError("DensityMatrix: trace differs from one");
}

cplx expectation(const Operator& op, const StateVector& psi)
{
    require_same_dim(op.dim(), psi.dim(), "expectation");
    return psi.amplitudes().dot(op.matrix() * psi.amplitudes());
}

cplx expectation(const Operator& op, const DensityMatrix& rho)
{
    require_same_dim(op.dim(), rho.dim(), "expectation");
    return (op.matrix() * rho.matrix()).trace();
}

cplx hs_overlap(const Mat& a, const Mat& b)
{
    require_same_dim(a.rows(), b.rows(), "hs_overlap");
    require_same_dim(a.cols(), b.cols(), "hs_overlap");
    // tr[a^dagger b] = sum_ij conj(a_ij) b_ij
    return (a.conjugate().cwiseProduct(b)).sum();
}

cplx overlap(const StateVector& a, const StateVector& b)
{
    require_same_dim(a.dim(), b.dim(), "overlap");
    return a.amplitudes().dot(b.amplitudes());
}

Normalized normalize(const StateVector& psi)
{
    const double n2 = psi.norm_squared();
    if (!(n2 > 0.0)) throw TrajectoryAnnihilated("normalize: zero-norm state (trajectory annihilated)");
    return {StateVector(Vec(psi.amplitudes() / std::sqrt(n2))), n2};
}

Mat projector(const StateVector& psi)
{
    return psi.amplitudes() * psi.amplitudes().adjoint();
}

double trace_distance(const Mat& a, const Mat& b)
{
    require_same_dim(a.rows(), b.rows(), "trace_distance");
    Mat diff = a - b;
    diff = 0.5 * (diff + diff.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> solver(diff, Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace trajkrotov
