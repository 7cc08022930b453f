#include <doctest.h>

#include "support.hpp"
#include "trajkrotov/network.hpp"

using namespace trajkrotov;
using namespace testsupport;

TEST_CASE("expectation of the collective decay operator")
{
    NetworkSpec spec;
    const NetworkModel model(spec);
    // Oracle: L built entry by entry, then the matrix element of L^dagger L.
    Mat l = Mat::Zero(5, 5);
    l(0, 2) = l(0, 4) = std::sqrt(2.0);
    const Mat ldl = l.adjoint() * l;

    const auto cav1 = StateVector::basis_state(5, Basis::cavity(1));
    CHECK(expectation(model.decay_operator(), cav1).real() == doctest::Approx(ldl(2, 2).real()).epsilon(1e-15));
    CHECK(expectation(model.decay_operator(), cav1).real() == doctest::Approx(2.0));

    Vec anti = Vec::Zero(5);
    anti(Basis::cavity(1)) = 1.0 / std::sqrt(2.0);
    anti(Basis::cavity(2)) = -1.0 / std::sqrt(2.0);
    CHECK(std::abs((anti.adjoint() * ldl * anti)(0, 0)) < 1e-15);
    CHECK(std::abs(expectation(model.decay_operator(), StateVector(anti))) < 1e-15);

    NetworkSpec one;
    one.n_nodes = 1;
    CHECK(std::abs(expectation(cavity_number_operator(one, 1), StateVector::basis_state(3, 0))) == 0.0);
}

TEST_CASE("expectation rejects mismatched dimensions")
{
    CHECK_THROWS_AS(expectation(Operator::identity(3), StateVector::basis_state(5, 0)), ContractError);
}

TEST_CASE("Hilbert-Schmidt overlaps")
{
    NetworkSpec spec;
    const auto eg = StateVector::basis_state(5, Basis::atom(1));
    const auto ge = StateVector::basis_state(5, Basis::atom(2));
    const Mat p_eg = projector(eg);
    CHECK(hs_overlap(p_eg, p_eg).real() == doctest::Approx(1.0));
    CHECK(std::abs(hs_overlap(p_eg, projector(ge))) == 0.0);
    // Bell projector expanded by hand: 1/2 (|eg><eg| + |eg><ge| + |ge><eg| + |ge><ge|)
    Mat bell = Mat::Zero(5, 5);
    bell(1, 1) = bell(1, 3) = bell(3, 1) = bell(3, 3) = 0.5;
    CHECK(hs_overlap(bell, p_eg).real() == doctest::Approx(0.5));
    CHECK(hs_overlap(projector(target_state(spec)), p_eg).real() == doctest::Approx(0.5));
    CHECK_THROWS_AS(hs_overlap(Mat::Zero(3, 3), Mat::Zero(5, 5)), ContractError);
}

TEST_CASE("normalize")
{
    const auto eg = StateVector::basis_state(5, 1);
    auto r = normalize(eg);
    CHECK(r.norm_squared == 1.0);
    CHECK((r.state.amplitudes() - eg.amplitudes()).norm() == 0.0);

    r = normalize(StateVector(Vec(0.5 * eg.amplitudes())));
    CHECK(r.norm_squared == doctest::Approx(0.25).epsilon(1e-15));
    CHECK((r.state.amplitudes() - eg.amplitudes()).norm() < 1e-15);

    Vec v = Vec::Zero(5);
    v(1) = 0.3;
    v(3) = 0.4;
    r = normalize(StateVector(v));
    CHECK(r.norm_squared == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(std::abs(r.state[1] - 0.6) < 1e-15);
    CHECK(std::abs(r.state[3] - 0.8) < 1e-15);

    CHECK_THROWS_AS(normalize(StateVector(5)), TrajectoryAnnihilated);
}

TEST_CASE("property: core invariants on random inputs")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index d = 2 + trial % 9;
        const Operator a = Operator::from_dense(random_hermitian(rng, d), true);
        const StateVector psi(random_unit(rng, d));
        CHECK(std::abs(expectation(a, psi).imag()) <= 1e-12);

        const Mat m = random_hermitian(rng, d) + cplx(0, 1) * random_hermitian(rng, d);
        const cplx self = hs_overlap(m, m);
        CHECK(std::abs(self.imag()) <= 1e-12 * std::abs(self));
        CHECK(self.real() >= 0.0);

        const StateVector raw(random_vector(rng, d));
        const auto once = normalize(raw).state;
        const auto twice = normalize(once).state;
        CHECK((once.amplitudes() - twice.amplitudes()).cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("operator hermitian flag is verified")
{
    Mat m = Mat::Zero(3, 3);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(Operator::from_dense(m, true), ContractError);
    m(1, 0) = 1.0;
    CHECK(Operator::from_dense(m, true).is_hermitian());
    CHECK_THROWS_AS(Operator::identity(3) + Operator::identity(4), ContractError);
}

TEST_CASE("density matrix validity")
{
    std::mt19937_64 rng(3);
    const DensityMatrix rho(random_density(rng, 5));
    CHECK_NOTHROW(rho.check_valid());
    Mat bad = rho.matrix();
    bad(0, 0) += 0.1;
    CHECK_THROWS_AS(DensityMatrix(bad).check_valid(), ContractError);
    bad = rho.matrix();
    bad(0, 1) += 0.1;
    CHECK_THROWS_AS(DensityMatrix(bad).check_valid(), ContractError);
}

TEST_CASE("trace distance")
{
    const Mat a = projector(StateVector::basis_state(3, 0));
    const Mat b = projector(StateVector::basis_state(3, 1));
    CHECK(trace_distance(a, b) == doctest::Approx(1.0));
    CHECK(trace_distance(a, a) == 0.0);
    // Pure states: D = sqrt(1 - |<a|b>|^2)
    Vec v(3);
    v << 0.6, 0.8, 0.0;
    CHECK(trace_distance(a, projector(StateVector(v))) == doctest::Approx(0.8).epsilon(1e-12));
}
