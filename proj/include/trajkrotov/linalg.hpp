#pragma once

#include <vector>

#include "trajkrotov/core.hpp"

namespace trajkrotov {

double one_norm(const SparseMat& a);

/// exp(-i A t) v by a truncated Taylor series with substepping. Terms are
/// summed until they fall below machine precision relative to the result,
/// which makes the series exact to double precision for any A.
Vec expmv(const SparseMat& a, const Vec& v, double t);

/// Dense exp(-i A t), assembled column by column from `expmv`.
Mat expm_dense(const SparseMat& a, double t);

/// Right-hand side of the master equation in the form
///   L(rho) = -i (H_eff rho - rho H_eff^dagger) + sum_l J_l rho J_l^dagger
/// or, with `adjoint` set, the Heisenberg-picture generator
///   L^dagger(P) = i (H_eff^dagger P - P H_eff) + sum_l J_l^dagger P J_l.
class LindbladGenerator {
public:
    LindbladGenerator(SparseMat h_eff, const std::vector<SparseMat>& jumps, bool adjoint);

    Mat apply(const Mat& rho) const;
    /// Upper bound on the induced one-norm of the superoperator.
    double norm_bound() const { return norm_bound_; }

private:
    SparseMat h_eff_;
    SparseMat h_eff_adj_;
    std::vector<SparseMat> jumps_;
    std::vector<SparseMat> jumps_adj_;
    bool adjoint_;
    double norm_bound_;
};

/// exp(L t) rho by Taylor series with substepping.
Mat propagate_series(const LindbladGenerator& gen, const Mat& rho, double t);
/// Classical fourth-order Runge-Kutta with `substeps` fixed steps over t.
Mat propagate_rk4(const LindbladGenerator& gen, const Mat& rho, double t, int substeps);

}  // namespace trajkrotov
