#pragma once

#include <random>

#include "trajkrotov/core.hpp"

namespace testsupport {

using trajkrotov::cplx;
using trajkrotov::Mat;
using trajkrotov::Vec;

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index dim)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Vec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = cplx(n(rng), n(rng));
    return v;
}

inline Vec random_unit(std::mt19937_64& rng, Eigen::Index dim)
{
    Vec v = random_vector(rng, dim);
    return v / v.norm();
}

inline Mat random_hermitian(std::mt19937_64& rng, Eigen::Index dim)
{
    Mat a(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) a.col(j) = random_vector(rng, dim);
    return 0.5 * (a + a.adjoint());
}

/// Random mixed state: normalized Gram matrix of a random square matrix.
inline Mat random_density(std::mt19937_64& rng, Eigen::Index dim)
{
    Mat a(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) a.col(j) = random_vector(rng, dim);
    Mat rho = a * a.adjoint();
    return rho / rho.trace();
}

inline double max_abs(const Mat& m)
{
    return m.cwiseAbs().maxCoeff();
}

}  // namespace testsupport
