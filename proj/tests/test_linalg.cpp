#include <catch2/catch.hpp>

#include "ratchetlab/linalg.hpp"
#include "ratchetlab/random.hpp"

using namespace ratchetlab;

TEST_CASE("hermitian_eig reconstructs", "[linalg]") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10; ++i) {
        Mat g = random_gaussian(5, 5, rng);
        Mat a = g + g.adjoint();
        HermEig e = hermitian_eig(a);
        Mat rebuilt = e.vectors * e.values.asDiagonal() * e.vectors.adjoint();
        REQUIRE((rebuilt - a).cwiseAbs().maxCoeff() < 1e-12 * a.cwiseAbs().maxCoeff());
        REQUIRE((e.vectors.adjoint() * e.vectors - Mat::Identity(5, 5))
                    .cwiseAbs()
                    .maxCoeff() < 1e-12);
    }
}

TEST_CASE("matrix functions act on the spectrum", "[linalg]") {
    std::mt19937_64 rng(2);
    Mat g = random_gaussian(4, 4, rng);
    Mat psd = g * g.adjoint();
    Mat root = matrix_sqrt_psd(psd);
    REQUIRE((root * root - psd).cwiseAbs().maxCoeff() < 1e-10);

    Mat inv_root = matrix_invsqrt_psd(psd);
    REQUIRE((root * inv_root * inv_root * root - Mat::Identity(4, 4))
                .cwiseAbs()
                .maxCoeff() < 1e-9);

    // rank-deficient: pseudo-inverse acts only on the support
    Vec v = Vec::Zero(3);
    v(0) = 1;
    Mat proj = v * v.adjoint();
    Mat pinv = matrix_invsqrt_psd(proj);
    REQUIRE((pinv - proj).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((support_projector(proj) - proj).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trace norm", "[linalg]") {
    Mat a(2, 2);
    a << Cplx(1, 0), Cplx(0, 0), Cplx(0, 0), Cplx(-2, 0);
    REQUIRE(trace_norm(a) == Approx(3.0));
}

TEST_CASE("kron and partial trace", "[linalg]") {
    std::mt19937_64 rng(3);
    Mat a = random_gaussian(2, 2, rng);
    a = a * a.adjoint();
    a /= a.trace().real();
    Mat b = random_gaussian(3, 3, rng);
    b = b * b.adjoint();
    b /= b.trace().real();
    Mat ab = kron(a, b);
    REQUIRE((partial_trace(ab, 2, 3, 0) - a).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((partial_trace(ab, 2, 3, 1) - b).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(std::abs(ab.trace().real() - 1.0) < 1e-12);
}

TEST_CASE("random_unitary is unitary", "[linalg]") {
    std::mt19937_64 rng(4);
    for (Index d : {2, 3, 4}) {
        Mat u = random_unitary(d, rng);
        REQUIRE((u.adjoint() * u - Mat::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-12);
    }
}
