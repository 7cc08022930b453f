#include <doctest.h>

#include <unsupported/Eigen/KroneckerProduct>

#include "support.hpp"
#include "trajkrotov/network.hpp"

using namespace trajkrotov;
using namespace testsupport;

namespace {

// Untruncated N-node space: per node a two-level atom (g, e) and a cavity
// truncated at one photon (0, 1); factor order atom_1, cav_1, ..., atom_N, cav_N.
struct TensorOracle {
    int n;
    Mat sigma_eg = Mat::Zero(2, 2), pi_g = Mat::Zero(2, 2), a = Mat::Zero(2, 2);

    explicit TensorOracle(int nodes) : n(nodes)
    {
        sigma_eg(1, 0) = 1.0;
        pi_g(0, 0) = 1.0;
        a(0, 1) = 1.0;
    }

    Eigen::Index full_dim() const { return Eigen::Index(1) << (2 * n); }

    /// Operator acting as `op` on factor `slot` (0-based) and identity elsewhere.
    Mat local(const Mat& op, int slot) const
    {
        Mat out = Mat::Identity(1, 1);
        for (int s = 0; s < 2 * n; ++s) {
            const Mat f = s == slot ? op : Mat(Mat::Identity(2, 2));
            out = Eigen::kroneckerProduct(out, f).eval();
        }
        return out;
    }
    Mat atom(const Mat& op, int node) const { return local(op, 2 * (node - 1)); }
    Mat cav(const Mat& op, int node) const { return local(op, 2 * (node - 1) + 1); }

    /// Full-space index of a product state given the occupied factor (or -1).
    Eigen::Index index_of(int excited_slot) const
    {
        if (excited_slot < 0) return 0;
        return Eigen::Index(1) << (2 * n - 1 - excited_slot);
    }

    /// Isometry from the model basis into the full space.
    Mat isometry() const
    {
        Mat p = Mat::Zero(full_dim(), 2 * n + 1);
        p(index_of(-1), 0) = 1.0;
        for (int i = 1; i <= n; ++i) {
            p(index_of(2 * (i - 1)), 2 * i - 1) = 1.0;
            p(index_of(2 * (i - 1) + 1), 2 * i) = 1.0;
        }
        return p;
    }

    Mat node_drift(const NetworkSpec& spec) const
    {
        const double s = spec.g * spec.g / spec.delta;
        Mat h = Mat::Zero(full_dim(), full_dim());
        for (int i = 1; i <= n; ++i) {
            const Mat num = cav(a.adjoint() * a, i);
            h += -s * num + s * atom(pi_g, i) * num;
        }
        return h;
    }

    Mat hamiltonian(const NetworkSpec& spec, const std::vector<double>& omegas) const
    {
        Mat h = node_drift(spec);
        for (int i = 1; i <= n; ++i) {
            const Mat jc = atom(sigma_eg, i) * cav(a, i);
            h += cplx(0.0, -omegas[i - 1] * spec.g / (2.0 * spec.delta)) * (jc - jc.adjoint());
        }
        for (int i = 1; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j) {
                const Mat term = cplx(0.0, spec.kappa) * cav(a.adjoint(), i) * cav(a, j);
                h += term + term.adjoint();
            }
        return h;
    }

    Mat lindblad(const NetworkSpec& spec) const
    {
        Mat l = Mat::Zero(full_dim(), full_dim());
        for (int i = 1; i <= n; ++i) l += std::sqrt(2.0 * spec.kappa) * cav(a, i);
        return l;
    }
};

NetworkSpec nodes(int n)
{
    NetworkSpec s;
    s.n_nodes = n;
    return s;
}

}  // namespace

TEST_CASE("basis dimension and ordering")
{
    CHECK(build_basis(nodes(2)).dim() == 5);
    CHECK(build_basis(nodes(1)).dim() == 3);
    CHECK(build_basis(nodes(20)).dim() == 41);
    const auto b = build_basis(nodes(3));
    CHECK(b.labels.front() == "vac");
    CHECK(Basis::atom(3) == 5);
    CHECK(Basis::cavity(3) == 6);
}

TEST_CASE("spec validation")
{
    NetworkSpec s;
    s.delta = 0.0;
    CHECK_THROWS_AS(s.validate(), ContractError);
    s = NetworkSpec{};
    s.n_steps = 1;
    CHECK_THROWS_AS(s.validate(), ContractError);
    s = NetworkSpec{};
    s.kappa = -1.0;
    CHECK_THROWS_AS(NetworkModel{s}, ContractError);
}

TEST_CASE("node drift vanishes on the single-excitation subspace")
{
    const auto spec = nodes(2);
    const TensorOracle o(2);
    const Mat p = o.isometry();
    CHECK(o.full_dim() == 16);
    CHECK(max_abs(p.adjoint() * o.node_drift(spec) * p) <= 1e-14);
    // The same operator acts nontrivially outside the subspace.
    CHECK(max_abs(o.node_drift(spec)) > 1e-3);
}

TEST_CASE("hamiltonian equals the projected tensor-space hamiltonian")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-300.0, 300.0);
    for (int n : {1, 2, 3}) {
        const auto spec = nodes(n);
        const TensorOracle o(n);
        const Mat p = o.isometry();
        std::vector<double> omegas(static_cast<std::size_t>(n));
        for (double& w : omegas) w = u(rng);
        const Mat ours = build_hamiltonian(spec, omegas).to_dense();
        CHECK(max_abs(p.adjoint() * o.hamiltonian(spec, omegas) * p - ours) <= 1e-12);
        CHECK(max_abs(p.adjoint() * o.lindblad(spec) * p - build_collective_lindblad(spec).to_dense()) <= 1e-14);
    }
}

TEST_CASE("hamiltonian matrix elements")
{
    const auto spec = nodes(3);
    const std::vector<double> omegas{10.0, 20.0, 30.0};
    const Mat h = build_hamiltonian(spec, omegas).to_dense();
    for (int i = 1; i <= 3; ++i) {
        const cplx expected(0.0, -omegas[i - 1] * spec.g / (2.0 * spec.delta));
        CHECK(std::abs(h(Basis::atom(i), Basis::cavity(i)) - expected) < 1e-15);
    }
    CHECK(std::abs(h(Basis::cavity(1), Basis::cavity(2)) - cplx(0.0, 1.0)) < 1e-15);
    CHECK(std::abs(h(Basis::cavity(2), Basis::cavity(1)) - cplx(0.0, -1.0)) < 1e-15);
    CHECK(std::abs(h(Basis::cavity(1), Basis::cavity(3)) - cplx(0.0, 1.0)) < 1e-15);
    CHECK_THROWS_AS(build_hamiltonian(spec, std::vector<double>{1.0}), ContractError);
}

TEST_CASE("property: hermiticity, excitation conservation, linearity")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-500.0, 500.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto spec = nodes(1 + trial % 5);
        std::vector<double> omegas(static_cast<std::size_t>(spec.n_nodes));
        for (double& w : omegas) w = u(rng);
        const Mat h = build_hamiltonian(spec, omegas).to_dense();
        CHECK(max_abs(h - h.adjoint()) <= 1e-12);
        CHECK(h.row(0).cwiseAbs().maxCoeff() == 0.0);
        CHECK(h.col(0).cwiseAbs().maxCoeff() == 0.0);

        const std::vector<double> zero(omegas.size(), 0.0);
        Mat linear = Mat::Zero(h.rows(), h.cols());
        for (int i = 1; i <= spec.n_nodes; ++i)
            linear += omegas[static_cast<std::size_t>(i - 1)] * build_control_operator(spec, i).to_dense();
        CHECK(max_abs(h - build_hamiltonian(spec, zero).to_dense() - linear) == 0.0);
    }
}

TEST_CASE("collective lindblad structure")
{
    const auto spec = nodes(4);
    const Mat l = build_collective_lindblad(spec).to_dense();
    for (int i = 1; i <= 4; ++i) {
        CHECK(l.col(Basis::atom(i)).norm() == 0.0);
        CHECK(std::abs(l(0, Basis::cavity(i)) - std::sqrt(2.0)) < 1e-15);
    }

    // L^dagger L on the cavity span: single eigenvalue 2 kappa N on the symmetric combination.
    const Mat ldl = l.adjoint() * l;
    Mat cav_block(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) cav_block(i, j) = ldl(Basis::cavity(i + 1), Basis::cavity(j + 1));
    Eigen::SelfAdjointEigenSolver<Mat> es(cav_block);
    CHECK(es.eigenvalues()(3) == doctest::Approx(2.0 * spec.kappa * 4));
    for (int k = 0; k < 3; ++k) CHECK(std::abs(es.eigenvalues()(k)) < 1e-12);
    const Vec v = es.eigenvectors().col(3);
    CHECK(std::abs(std::abs(v.sum()) - 2.0) < 1e-12);

    // Null space of L: vacuum, all atoms, N-1 cavity combinations.
    for (int n : {1, 2, 3, 5}) {
        const Mat ln = build_collective_lindblad(nodes(n)).to_dense();
        Eigen::FullPivLU<Mat> lu(ln);
        CHECK(ln.cols() - lu.rank() == 2 * n);
    }
}

TEST_CASE("target and initial states")
{
    const auto t2 = target_state(nodes(2));
    CHECK(t2.is_normalized());
    CHECK(std::abs(t2[1] - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(t2[3] - 1.0 / std::sqrt(2.0)) < 1e-15);
    const auto t1 = target_state(nodes(1));
    CHECK(std::abs(t1[1] - 1.0) == 0.0);
    const NetworkModel model(nodes(5));
    CHECK(std::abs(expectation(model.decay_operator(), model.target())) == 0.0);
    CHECK(model.initial()[Basis::atom(1)] == cplx(1.0));
}

TEST_CASE("blackman guess")
{
    CHECK(blackman_window(0.0, 5.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(std::abs(blackman_window(5.0, 5.0)) < 1e-15);
    CHECK(blackman_window(2.5, 5.0) == doctest::Approx(1.0));
    CHECK(blackman_window(1.25, 5.0) == doctest::Approx(0.34));

    NetworkSpec spec;
    spec.n_steps = 4;
    const auto g = blackman_guess(spec, 200.0, 2);
    CHECK(g.node_index == 2);
    REQUIRE(g.n_steps() == 4);
    // Sampled at interval midpoints t = T(j - 1/2)/n_t.
    CHECK(g.values[0] == doctest::Approx(200.0 * blackman_window(0.625, 5.0)));
    CHECK(g.values[2] == doctest::Approx(200.0 * blackman_window(3.125, 5.0)));
    CHECK_THROWS_AS(blackman_guess(spec, 0.0), ContractError);
    CHECK_THROWS_AS(blackman_guess(spec, 1.0, 3), ContractError);
}

TEST_CASE("flanked shape function")
{
    CHECK(flank_value(0.0, 5.0, 0.1) == 0.0);
    CHECK(flank_value(5.0, 5.0, 0.1) == 0.0);
    CHECK(flank_value(2.5, 5.0, 0.1) == 1.0);
    CHECK(flank_value(0.25, 5.0, 0.1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(flank_value(4.75, 5.0, 0.1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(flank_value(1.0, 5.0, 0.0), ContractError);
    CHECK_THROWS_AS(flank_value(1.0, 5.0, 0.6), ContractError);

    const auto s = flanked_shape(NetworkSpec{}, 0.1);
    for (double v : s.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(s.values.front() < 1e-4);
    CHECK(s.values.back() < 1e-4);
}

TEST_CASE("control grid checks report expected and actual grids")
{
    NetworkSpec spec;
    auto controls = blackman_guess_all(spec, 200.0);
    CHECK_NOTHROW(check_controls(controls, spec));
    controls[1].values.pop_back();
    try {
        check_controls(controls, spec);
        FAIL("expected a grid mismatch");
    } catch (const ContractError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("n_t=1000") != std::string::npos);
        CHECK(msg.find("n_t=999") != std::string::npos);
    }
}
