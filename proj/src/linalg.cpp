#include "trajkrotov/linalg.hpp"

#include <cmath>
#include <limits>

namespace trajkrotov {

namespace {

// Largest |A t| handled by one Taylor segment; keeps the terms from growing
// before they decay, so no cancellation occurs.
constexpr double kSegmentNorm = 0.5;
constexpr int kMaxTerms = 60;
constexpr double kTermTol = std::numeric_limits<double>::epsilon() * 0.25;

int segment_count(double scaled_norm)
{
    return std::max(1, static_cast<int>(std::ceil(scaled_norm / kSegmentNorm)));
}

}  // namespace

double one_norm(const SparseMat& a)
{
    Eigen::VectorXd col_sums = Eigen::VectorXd::Zero(a.cols());
    for (Eigen::Index r = 0; r < a.outerSize(); ++r)
        for (SparseMat::InnerIterator it(a, r); it; ++it) col_sums(it.col()) += std::abs(it.value());
    return col_sums.size() ? col_sums.maxCoeff() : 0.0;
}

Vec expmv(const SparseMat& a, const Vec& v, double t)
{
    require(a.rows() == v.size(), "expmv: dimension mismatch");
    if (t == 0.0) return v;
    const int segments = segment_count(one_norm(a) * std::abs(t));
    const cplx h(0.0, -t / segments);  // exp(-i A t) = exp(h A)^segments
    Vec result = v;
    Vec term(v.size());
    for (int s = 0; s < segments; ++s) {
        term = result;
        for (int k = 1; k <= kMaxTerms; ++k) {
            term = (h / static_cast<double>(k)) * (a * term);
            result += term;
            const double tn = term.lpNorm<1>();
            if (tn <= kTermTol * result.lpNorm<1>() || tn == 0.0) break;
        }
    }
    return result;
}

Mat expm_dense(const SparseMat& a, double t)
{
    const Eigen::Index d = a.rows();
    Mat out(d, d);
    for (Eigen::Index c = 0; c < d; ++c) out.col(c) = expmv(a, Vec::Unit(d, c), t);
    return out;
}

LindbladGenerator::LindbladGenerator(SparseMat h_eff, const std::vector<SparseMat>& jumps, bool adjoint)
    : h_eff_(std::move(h_eff)), jumps_(jumps), adjoint_(adjoint)
{
    h_eff_adj_ = h_eff_.adjoint();
    // Induced bound for the entrywise 1-norm: ||A rho B|| <= ||A||_1 ||B^dag||_1.
    norm_bound_ = 2.0 * one_norm(adjoint_ ? h_eff_adj_ : h_eff_);
    for (const auto& j : jumps_) {
        jumps_adj_.emplace_back(j.adjoint());
        const double jn = one_norm(adjoint_ ? jumps_adj_.back() : j);
        norm_bound_ += jn * jn;
    }
}

Mat LindbladGenerator::apply(const Mat& rho) const
{
    const cplx i(0.0, 1.0);
    Mat out;
    if (!adjoint_) {
        out = -i * (h_eff_ * rho);
        out += i * (rho * h_eff_adj_);
        for (std::size_t l = 0; l < jumps_.size(); ++l) out += jumps_[l] * (rho * jumps_adj_[l]);
    } else {
        out = i * (h_eff_adj_ * rho);
        out -= i * (rho * h_eff_);
        for (std::size_t l = 0; l < jumps_.size(); ++l) out += jumps_adj_[l] * (rho * jumps_[l]);
    }
    return out;
}

Mat propagate_series(const LindbladGenerator& gen, const Mat& rho, double t)
{
    if (t == 0.0) return rho;
    const int segments = segment_count(gen.norm_bound() * std::abs(t));
    const double h = t / segments;
    Mat result = rho;
    Mat term;
    for (int s = 0; s < segments; ++s) {
        term = result;
        for (int k = 1; k <= kMaxTerms; ++k) {
            term = (h / k) * gen.apply(term);
            result += term;
            const double tn = term.cwiseAbs().sum();
            if (tn <= kTermTol * result.cwiseAbs().sum() || tn == 0.0) break;
        }
    }
    return result;
}

Mat propagate_rk4(const LindbladGenerator& gen, const Mat& rho, double t, int substeps)
{
    require(substeps >= 1, "propagate_rk4: substeps must be >= 1");
    const double h = t / substeps;
    Mat y = rho;
    for (int s = 0; s < substeps; ++s) {
        const Mat k1 = gen.apply(y);
        const Mat k2 = gen.apply(y + (0.5 * h) * k1);
        const Mat k3 = gen.apply(y + (0.5 * h) * k2);
        const Mat k4 = gen.apply(y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

}  // namespace trajkrotov
