#include <catch2/catch.hpp>

#include "ratchetlab/info.hpp"
#include "ratchetlab/quantum.hpp"
#include "ratchetlab/random.hpp"

using namespace ratchetlab;

namespace {

Mat ket0_proj() {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = 1;
    return m;
}
Mat ket1_proj() {
    Mat m = Mat::Zero(2, 2);
    m(1, 1) = 1;
    return m;
}
Mat plus_proj() { return Mat::Constant(2, 2, 0.5); }

KrausChannel dephasing2() {
    return make_channel({ket0_proj(), ket1_proj()});
}

}  // namespace

TEST_CASE("density operator validation", "[quantum]") {
    REQUIRE_THROWS_AS(make_density(Mat::Identity(2, 2)), NotUnitTrace);
    Mat skew(2, 2);
    skew << Cplx(0.5, 0), Cplx(0.3, 0), Cplx(0.1, 0), Cplx(0.5, 0);
    REQUIRE_THROWS_AS(make_density(skew), NotHermitian);
    Mat neg(2, 2);
    neg << Cplx(1.5, 0), Cplx(0, 0), Cplx(0, 0), Cplx(-0.5, 0);
    REQUIRE_THROWS_AS(make_density(neg), NotPositive);
    REQUIRE_NOTHROW(make_density(0.5 * Mat::Identity(2, 2)));
}

TEST_CASE("von_neumann_entropy", "[quantum]") {
    REQUIRE(von_neumann_entropy(make_density(ket0_proj())) == Approx(0.0).margin(1e-12));
    REQUIRE(von_neumann_entropy(make_density(0.5 * Mat::Identity(2, 2))) == Approx(1.0));
    Mat skewed = Mat::Zero(2, 2);
    skewed(0, 0) = 2.0 / 3.0;
    skewed(1, 1) = 1.0 / 3.0;
    REQUIRE(von_neumann_entropy(make_density(skewed)) ==
            Approx(0.9182958340544896).margin(1e-12));
}

TEST_CASE("fidelity", "[quantum]") {
    std::mt19937_64 rng(5);
    DensityOperator rho = random_density(3, rng);
    REQUIRE(fidelity(rho, rho) == Approx(1.0).margin(1e-10));
    REQUIRE(fidelity(make_density(ket0_proj()), make_density(ket1_proj())) ==
            Approx(0.0).margin(1e-12));
    REQUIRE(fidelity(make_density(ket0_proj()), make_density(plus_proj())) ==
            Approx(0.5).margin(1e-12));
    SECTION("symmetry") {
        DensityOperator sigma = random_density(3, rng);
        REQUIRE(fidelity(rho, sigma) == Approx(fidelity(sigma, rho)).margin(1e-10));
    }
    SECTION("dimension mismatch") {
        REQUIRE_THROWS_AS(fidelity(rho, random_density(2, rng)), DimensionMismatch);
    }
}

TEST_CASE("relative_entropy and holevo", "[quantum]") {
    std::mt19937_64 rng(6);
    DensityOperator rho = random_density(3, rng);
    REQUIRE(relative_entropy(rho, rho) == Approx(0.0).margin(1e-9));

    SECTION("support violation reports infinity") {
        DensityOperator plus = make_density(plus_proj());
        DensityOperator zero = make_density(ket0_proj());
        REQUIRE(std::isinf(relative_entropy(plus, zero)));
        DensityOperator mixed = make_density(0.5 * Mat::Identity(2, 2));
        REQUIRE(relative_entropy(zero, mixed) == Approx(1.0).margin(1e-10));
    }
    SECTION("orthogonal pure ensemble carries one bit") {
        CQEnsemble ens = make_ensemble(
            {0.5, 0.5}, {make_density(ket0_proj()), make_density(ket1_proj())});
        REQUIRE(holevo(ens) == Approx(1.0).margin(1e-12));
    }
    SECTION("overlapping ensemble loses distinguishability") {
        CQEnsemble ens = make_ensemble(
            {0.5, 0.5}, {make_density(ket0_proj()), make_density(plus_proj())});
        double p = 0.5 * (1.0 + 1.0 / std::sqrt(2.0));
        double expected = -p * std::log2(p) - (1 - p) * std::log2(1 - p);
        REQUIRE(holevo(ens) == Approx(expected).margin(1e-12));
        REQUIRE(holevo(ens) == Approx(0.600876).margin(1e-6));
    }
    SECTION("classical-quantum state entropy splits") {
        std::mt19937_64 r2(7);
        CQEnsemble ens =
            make_ensemble({0.3, 0.7}, {random_density(2, r2), random_density(2, r2)});
        Mat cq = Mat::Zero(4, 4);
        cq.block(0, 0, 2, 2) = 0.3 * ens.members[0].mat;
        cq.block(2, 2, 2, 2) = 0.7 * ens.members[1].mat;
        DensityOperator joint = make_density(cq);
        double split = shannon_entropy((RVec(2) << 0.3, 0.7).finished()) +
                       0.3 * von_neumann_entropy(ens.members[0]) +
                       0.7 * von_neumann_entropy(ens.members[1]);
        REQUIRE(von_neumann_entropy(joint) == Approx(split).margin(1e-9));
        // I(A:B) of the cq state equals the Holevo quantity of the ensemble
        REQUIRE(mutual_information(joint, 2, 2) == Approx(holevo(ens)).margin(1e-9));
    }
}

TEST_CASE("apply and adjoint", "[quantum]") {
    std::mt19937_64 rng(8);
    SECTION("identity channel") {
        KrausChannel id = make_channel({Mat::Identity(3, 3)});
        DensityOperator rho = random_density(3, rng);
        REQUIRE((apply(id, rho).mat - rho.mat).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("full dephasing kills coherence") {
        DensityOperator out = apply(dephasing2(), make_density(plus_proj()));
        REQUIRE((out.mat - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("adjoint duality probe") {
        for (int i = 0; i < 10; ++i) {
            KrausChannel ch = random_channel(3, 3, rng);
            KrausChannel dual = adjoint(ch);
            DensityOperator rho = random_density(3, rng);
            Mat g = random_gaussian(3, 3, rng);
            Mat m = g + g.adjoint();
            Cplx lhs = (apply_raw(ch, rho.mat) * m).trace();
            Cplx rhs = (rho.mat * apply_raw(dual, m)).trace();
            REQUIRE(std::abs(lhs - rhs) < 1e-10);
        }
    }
}

TEST_CASE("petz_recovery", "[quantum]") {
    std::mt19937_64 rng(9);
    SECTION("dephasing with maximally mixed reference") {
        DensityOperator sigma = make_density(0.5 * Mat::Identity(2, 2));
        KrausChannel rec = petz_recovery(dephasing2(), sigma);
        REQUIRE((apply_raw(rec, apply_raw(dephasing2(), sigma.mat)) - sigma.mat)
                    .cwiseAbs()
                    .maxCoeff() < 1e-12);
        // recovery of a dephasing channel w.r.t. I/2 is dephasing again
        DensityOperator coherent = make_density(plus_proj());
        Mat recovered = apply_raw(rec, coherent.mat);
        REQUIRE((recovered - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("unitary channels invert exactly") {
        Mat u = random_unitary(3, rng);
        KrausChannel ch = make_channel({u});
        DensityOperator sigma = random_density(3, rng);
        KrausChannel rec = petz_recovery(ch, sigma);
        DensityOperator rho = random_density(3, rng);
        REQUIRE((apply_raw(rec, apply_raw(ch, rho.mat)) - rho.mat)
                    .cwiseAbs()
                    .maxCoeff() < 1e-10);
    }
    SECTION("rank-deficient references stay recoverable on their support") {
        Mat proj = Mat::Zero(2, 2);
        proj(0, 0) = 1;
        DensityOperator sigma = make_density(proj);
        KrausChannel ch = make_channel({random_unitary(2, rng)});
        KrausChannel rec = petz_recovery(ch, sigma);
        REQUIRE(trace_norm(apply_raw(rec, apply_raw(ch, sigma.mat)) - sigma.mat) < 1e-10);
    }
    SECTION("random qutrit channel recovers the reference state") {
        for (int i = 0; i < 20; ++i) {
            KrausChannel ch = random_channel(3, 4, rng);
            DensityOperator sigma = random_density(3, rng);
            KrausChannel rec = petz_recovery(ch, sigma);
            Mat back = apply_raw(rec, apply_raw(ch, sigma.mat));
            REQUIRE(trace_norm(back - sigma.mat) < 1e-9);
        }
    }
}

TEST_CASE("dpi_saturation_check", "[quantum]") {
    std::mt19937_64 rng(10);
    SECTION("unitary channels saturate") {
        KrausChannel ch = make_channel({random_unitary(3, rng)});
        SaturationResult res =
            dpi_saturation_check(random_density(3, rng), random_density(3, rng), ch);
        REQUIRE(res.saturated);
        REQUIRE(res.recovered);
    }
    SECTION("dephasing a coherent state does not") {
        SaturationResult res = dpi_saturation_check(
            make_density(plus_proj()), make_density(0.5 * Mat::Identity(2, 2)),
            dephasing2());
        REQUIRE_FALSE(res.saturated);
        REQUIRE_FALSE(res.recovered);
    }
    SECTION("block-preserving channel on block states saturates") {
        // dephasing on the first 2-dim block, a fixed unitary on the second
        std::mt19937_64 r2(11);
        Mat u = random_unitary(2, r2);
        Mat k1 = Mat::Zero(4, 4), k2 = Mat::Zero(4, 4), k3 = Mat::Zero(4, 4);
        k1(0, 0) = 1;
        k2(1, 1) = 1;
        k3.block(2, 2, 2, 2) = u;
        KrausChannel ch = make_channel({k1, k2, k3});
        auto block_state = [&](double p, double a, const DensityOperator& tail) {
            Mat m = Mat::Zero(4, 4);
            m(0, 0) = p * a;
            m(1, 1) = p * (1 - a);
            m.block(2, 2, 2, 2) = (1 - p) * tail.mat;
            return make_density(m);
        };
        DensityOperator rho = block_state(0.4, 0.7, random_density(2, r2));
        DensityOperator sigma = block_state(0.6, 0.2, random_density(2, r2));
        SaturationResult res = dpi_saturation_check(rho, sigma, ch);
        REQUIRE(res.saturated);
        REQUIRE(res.recovered);
    }
    SECTION("support violation propagates") {
        REQUIRE_THROWS_AS(
            dpi_saturation_check(make_density(plus_proj()), make_density(ket0_proj()),
                                 dephasing2()),
            SupportViolation);
    }
}

TEST_CASE("data processing inequality properties", "[quantum]") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 60; ++i) {
        Index d = 2 + (i % 3);
        KrausChannel ch = random_channel(d, 3, rng);
        DensityOperator rho = random_density(d, rng);
        DensityOperator sigma = random_density(d, rng);
        double before = relative_entropy(rho, sigma);
        double after = relative_entropy(apply(ch, rho), apply(ch, sigma));
        REQUIRE(after <= before + 1e-9);
        REQUIRE(fidelity(apply(ch, rho), apply(ch, sigma)) >=
                fidelity(rho, sigma) - 1e-9);
    }
}

TEST_CASE("cq_mlcm", "[quantum]") {
    SECTION("commuting states with distinct spectra resolve fully") {
        Mat d1 = Mat::Zero(3, 3), d2 = Mat::Zero(3, 3);
        d1.diagonal() << 0.6, 0.3, 0.1;
        d2.diagonal() << 0.2, 0.5, 0.3;
        MLCMResult res = cq_mlcm(
            make_ensemble({0.5, 0.5}, {make_density(d1), make_density(d2)}));
        REQUIRE(res.blocks.all_singletons());
    }
    SECTION("a coherent member couples the block") {
        MLCMResult res = cq_mlcm(make_ensemble(
            {0.5, 0.5}, {make_density(ket0_proj()), make_density(plus_proj())}));
        REQUIRE(res.blocks.block_count() == 1);
    }
    SECTION("mixed block structure") {
        // 3-dim: members fail to commute on {0,1} but leave {2} clean
        Mat a = Mat::Zero(3, 3), b = Mat::Zero(3, 3);
        a.block(0, 0, 2, 2) = 0.8 * plus_proj();
        a(2, 2) = 0.2;
        b.diagonal() << 0.2, 0.6, 0.2;
        MLCMResult res = cq_mlcm(
            make_ensemble({0.5, 0.5}, {make_density(a), make_density(b)}));
        REQUIRE(res.blocks.block_count() == 2);
        std::vector<std::size_t> sizes;
        for (const auto& blk : res.blocks.blocks) sizes.push_back(blk.size());
        std::sort(sizes.begin(), sizes.end());
        REQUIRE(sizes == std::vector<std::size_t>{1, 2});
    }
    SECTION("fully degenerate ensembles are flagged") {
        CQEnsemble ens = make_ensemble(
            {1.0}, {make_density(0.5 * Mat::Identity(2, 2))});
        REQUIRE_THROWS_AS(cq_mlcm(ens), DegenerateGeneric);
    }
    SECTION("blocks are stable under the generic combination's seed") {
        std::mt19937_64 rng(13);
        Mat a = Mat::Zero(4, 4), b = Mat::Zero(4, 4);
        a.block(0, 0, 2, 2) = 0.5 * plus_proj();
        a.block(2, 2, 2, 2) = 0.5 * (Mat(2, 2) << 0.7, 0, 0, 0.3).finished();
        b.block(0, 0, 2, 2) = 0.4 * (Mat(2, 2) << 0.2, 0, 0, 0.8).finished();
        b.block(2, 2, 2, 2) = 0.6 * plus_proj();
        CQEnsemble ens = make_ensemble({0.5, 0.5}, {make_density(a), make_density(b)});
        MLCMResult r1 = cq_mlcm(ens, 0);
        MLCMResult r2 = cq_mlcm(ens, 99);
        REQUIRE(r1.blocks.block_count() == r2.blocks.block_count());
        // compare block subspaces via their projectors
        auto projectors = [](const MLCMResult& r) {
            std::vector<Mat> ps;
            for (const auto& blk : r.blocks.blocks) {
                Mat p = Mat::Zero(r.basis.rows(), r.basis.rows());
                for (Index i : blk) p += r.basis.col(i) * r.basis.col(i).adjoint();
                ps.push_back(p);
            }
            return ps;
        };
        for (const Mat& p : projectors(r1)) {
            double best = 1e9;
            for (const Mat& q : projectors(r2))
                best = std::min(best, (p - q).cwiseAbs().maxCoeff());
            REQUIRE(best < 1e-8);
        }
    }
}
