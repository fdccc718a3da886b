#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "ratchetlab/equivalence.hpp"
#include "ratchetlab/linalg.hpp"

namespace ratchetlab {

struct DensityOperator {
    Mat mat;
    Index dim() const { return mat.rows(); }
};

inline DensityOperator make_density(const Mat& m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("density operator must be square");
    if (hermiticity_error(m) > tol::hermitian)
        throw NotHermitian("operator deviates from Hermitian by " +
                           std::to_string(hermiticity_error(m)));
    HermEig e = hermitian_eig(m);
    if (e.values.minCoeff() < -tol::psd)
        throw NotPositive("operator has eigenvalue " + std::to_string(e.values.minCoeff()));
    double tr = m.trace().real();
    if (std::abs(tr - 1.0) > tol::unit_trace)
        throw NotUnitTrace("operator has trace " + std::to_string(tr));
    return {0.5 * (m + m.adjoint())};
}

inline DensityOperator pure_state(const Vec& psi) {
    Vec v = psi / psi.norm();
    return {v * v.adjoint()};
}

struct KrausChannel {
    std::vector<Mat> ops;
    Index dim_in = 0;
    Index dim_out = 0;
};

inline KrausChannel make_channel(std::vector<Mat> ops) {
    if (ops.empty()) throw ValidationError("channel needs at least one Kraus operator");
    KrausChannel ch;
    ch.dim_in = ops.front().cols();
    ch.dim_out = ops.front().rows();
    ch.ops = std::move(ops);
    Mat acc = Mat::Zero(ch.dim_in, ch.dim_in);
    for (const Mat& k : ch.ops) {
        if (k.cols() != ch.dim_in || k.rows() != ch.dim_out)
            throw DimensionMismatch("Kraus operators have mixed shapes");
        acc += k.adjoint() * k;
    }
    if ((acc - Mat::Identity(ch.dim_in, ch.dim_in)).cwiseAbs().maxCoeff() > tol::completeness)
        throw ValidationError("Kraus operators do not satisfy completeness");
    return ch;
}

inline Mat apply_raw(const KrausChannel& ch, const Mat& rho) {
    Mat out = Mat::Zero(ch.dim_out, ch.dim_out);
    for (const Mat& k : ch.ops) out += k * rho * k.adjoint();
    return out;
}

inline DensityOperator apply(const KrausChannel& ch, const DensityOperator& rho) {
    if (rho.dim() != ch.dim_in) throw DimensionMismatch("state does not fit channel input");
    return {apply_raw(ch, rho.mat)};
}

// Dual (Heisenberg) map: Tr(E(rho) M) = Tr(rho E'(M)). Unital, generally not
// trace preserving, so it is returned without the completeness check.
inline KrausChannel adjoint(const KrausChannel& ch) {
    KrausChannel adj;
    adj.dim_in = ch.dim_out;
    adj.dim_out = ch.dim_in;
    for (const Mat& k : ch.ops) adj.ops.push_back(k.adjoint());
    return adj;
}

struct CQEnsemble {
    std::vector<double> probs;
    std::vector<DensityOperator> members;

    Index dim() const { return members.empty() ? 0 : members.front().dim(); }
    DensityOperator average() const {
        Mat m = Mat::Zero(dim(), dim());
        for (std::size_t i = 0; i < probs.size(); ++i) m += probs[i] * members[i].mat;
        return {m};
    }
};

inline CQEnsemble make_ensemble(std::vector<double> probs,
                                std::vector<DensityOperator> members) {
    if (probs.size() != members.size() || probs.empty())
        throw ValidationError("ensemble needs matching probabilities and members");
    double mass = 0.0;
    for (double p : probs) {
        if (p < -tol::prob_zero) throw NegativeProbability("negative ensemble probability");
        mass += p;
    }
    if (std::abs(mass - 1.0) > tol::unit_trace)
        throw ValidationError("ensemble probabilities sum to " + std::to_string(mass));
    for (const auto& m : members)
        if (m.dim() != members.front().dim())
            throw DimensionMismatch("ensemble members have mixed dimensions");
    return {std::move(probs), std::move(members)};
}

inline double von_neumann_entropy(const DensityOperator& rho) {
    HermEig e = hermitian_eig(rho.mat);
    double h = 0.0;
    for (Index i = 0; i < e.values.size(); ++i)
        if (e.values(i) > tol::eig_clamp) h += detail::plog2p(e.values(i));
    return h;
}

inline double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
    if (rho.dim() != sigma.dim()) throw DimensionMismatch("fidelity needs equal dimensions");
    Mat sqrt_rho = matrix_sqrt_psd(rho.mat);
    HermEig e = hermitian_eig(sqrt_rho * sigma.mat * sqrt_rho);
    double s = 0.0;
    for (Index i = 0; i < e.values.size(); ++i)
        if (e.values(i) > 0) s += std::sqrt(e.values(i));
    return s * s;
}

// D(rho || sigma) in bits; +infinity when supp(rho) leaks outside supp(sigma).
inline double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma) {
    if (rho.dim() != sigma.dim())
        throw DimensionMismatch("relative entropy needs equal dimensions");
    HermEig es = hermitian_eig(sigma.mat);
    double leaked = 0.0;
    for (Index j = 0; j < es.values.size(); ++j)
        if (es.values(j) <= tol::eig_clamp) {
            Vec v = es.vectors.col(j);
            leaked += (v.adjoint() * rho.mat * v)(0, 0).real();
        }
    if (leaked > tol::psd) return std::numeric_limits<double>::infinity();

    HermEig er = hermitian_eig(rho.mat);
    double d = 0.0;
    for (Index i = 0; i < er.values.size(); ++i)
        if (er.values(i) > tol::eig_clamp) d += er.values(i) * std::log2(er.values(i));
    for (Index j = 0; j < es.values.size(); ++j)
        if (es.values(j) > tol::eig_clamp) {
            Vec v = es.vectors.col(j);
            double w = (v.adjoint() * rho.mat * v)(0, 0).real();
            if (w > 0) d -= w * std::log2(es.values(j));
        }
    return d;
}

inline double holevo(const CQEnsemble& ens) {
    double h = von_neumann_entropy(ens.average());
    for (std::size_t i = 0; i < ens.probs.size(); ++i)
        h -= ens.probs[i] * von_neumann_entropy(ens.members[i]);
    return h;
}

// I[A:B] of a state on H_A (x) H_B with the declared factorization.
inline double mutual_information(const DensityOperator& rho_ab, Index dim_a, Index dim_b) {
    if (rho_ab.dim() != dim_a * dim_b)
        throw DimensionMismatch("state dimension is not dim_a * dim_b");
    DensityOperator a{partial_trace(rho_ab.mat, dim_a, dim_b, 0)};
    DensityOperator b{partial_trace(rho_ab.mat, dim_a, dim_b, 1)};
    return von_neumann_entropy(a) + von_neumann_entropy(b) - von_neumann_entropy(rho_ab);
}

// Petz recovery channel of E relative to sigma, materialized as Kraus factors
// sigma^{1/2} K' E(sigma)^{-1/2} so it composes like any other channel.
inline KrausChannel petz_recovery(const KrausChannel& ch, const DensityOperator& sigma) {
    if (sigma.dim() != ch.dim_in) throw DimensionMismatch("sigma does not fit channel input");
    Mat out_sigma = apply_raw(ch, sigma.mat);
    Mat q_invsqrt = matrix_invsqrt_psd(out_sigma);
    Mat s_sqrt = matrix_sqrt_psd(sigma.mat);

    KrausChannel rec;
    rec.dim_in = ch.dim_out;
    rec.dim_out = ch.dim_in;
    for (const Mat& k : ch.ops) rec.ops.push_back(s_sqrt * k.adjoint() * q_invsqrt);

    // Completeness must hold on the support of E(sigma).
    Mat acc = Mat::Zero(rec.dim_in, rec.dim_in);
    for (const Mat& m : rec.ops) acc += m.adjoint() * m;
    if ((acc - support_projector(out_sigma)).cwiseAbs().maxCoeff() > tol::completeness)
        throw SingularOutput("Petz recovery fails completeness on the support of E(sigma)");
    return rec;
}

// DPI saturation and Petz recoverability are equivalent; both are computed
// and must agree.
struct SaturationResult {
    bool saturated = false;
    bool recovered = false;
};

inline SaturationResult dpi_saturation_check(const DensityOperator& rho,
                                             const DensityOperator& sigma,
                                             const KrausChannel& ch) {
    double before = relative_entropy(rho, sigma);
    if (std::isinf(before))
        throw SupportViolation("rho is not absolutely continuous w.r.t. sigma");
    DensityOperator rho_out = apply(ch, rho);
    DensityOperator sigma_out = apply(ch, sigma);
    double after = relative_entropy(rho_out, sigma_out);

    SaturationResult res;
    res.saturated = std::abs(before - after) <= tol::dpi_saturate;
    KrausChannel rec = petz_recovery(ch, sigma);
    res.recovered = trace_norm(apply_raw(rec, rho_out.mat) - rho.mat) <= tol::dpi_saturate;
    if (res.saturated != res.recovered)
        throw VerificationError("DPI saturation and Petz recoverability disagree");
    return res;
}

// Maximal local commuting measurement for a classical-quantum ensemble: the
// finest orthogonal block decomposition leaving every member block-diagonal.
// Blocks are read off as connected components of the off-diagonal coupling
// graph in the eigenbasis of a generic positive combination.
struct MLCMResult {
    Mat basis;        // columns: eigenbasis of the generic combination
    Partition blocks; // over basis indices
    double min_gap = 0.0;
    int attempts = 1;
};

inline MLCMResult cq_mlcm(const CQEnsemble& ens, std::uint64_t seed = 0) {
    const Index d = ens.dim();
    MLCMResult res;
    double last_gap = 0.0;
    for (int attempt = 0; attempt < tol::mlcm_retries; ++attempt) {
        std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + attempt + 1);
        std::uniform_real_distribution<double> unif(0.5, 1.5);
        Mat combo = Mat::Zero(d, d);
        for (const auto& m : ens.members) combo += unif(rng) * m.mat;
        combo /= combo.trace().real();
        HermEig e = hermitian_eig(combo);

        last_gap = std::numeric_limits<double>::infinity();
        for (Index i = 0; i + 1 < d; ++i)
            last_gap = std::min(last_gap, e.values(i + 1) - e.values(i));
        if (d > 1 && last_gap < tol::mlcm_gap) continue;

        std::vector<Index> comp(d, -1);
        Index next = 0;
        auto coupled = [&](Index i, Index j) {
            for (const auto& m : ens.members) {
                Cplx v = (e.vectors.col(i).adjoint() * m.mat * e.vectors.col(j))(0, 0);
                if (std::abs(v) > tol::support_edge) return true;
            }
            return false;
        };
        for (Index i = 0; i < d; ++i) {
            if (comp[i] >= 0) continue;
            comp[i] = next;
            std::vector<Index> stack{i};
            while (!stack.empty()) {
                Index u = stack.back();
                stack.pop_back();
                for (Index v = 0; v < d; ++v)
                    if (comp[v] < 0 && coupled(u, v)) {
                        comp[v] = next;
                        stack.push_back(v);
                    }
            }
            ++next;
        }
        res.basis = e.vectors;
        res.blocks = Partition::from_block_of(std::move(comp)).canonical();
        res.min_gap = last_gap;
        res.attempts = attempt + 1;
        return res;
    }
    throw DegenerateGeneric(last_gap);
}

}  // namespace ratchetlab
