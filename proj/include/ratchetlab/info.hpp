#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "ratchetlab/equivalence.hpp"
#include "ratchetlab/machine.hpp"

namespace ratchetlab {

// Shannon entropy in bits, 0 log 0 = 0.
inline double shannon_entropy(const RVec& p) {
    double h = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        if (p(i) < -tol::prob_zero)
            throw NegativeProbability("negative probability " + std::to_string(p(i)));
        h += detail::plog2p(p(i));
    }
    return h;
}

// Entropy of a joint table (all entries as one distribution).
inline double shannon_entropy(const RMat& joint) {
    double h = 0.0;
    for (Index i = 0; i < joint.rows(); ++i)
        for (Index j = 0; j < joint.cols(); ++j) {
            if (joint(i, j) < -tol::prob_zero)
                throw NegativeProbability("negative joint probability");
            h += detail::plog2p(joint(i, j));
        }
    return h;
}

inline double conditional_entropy(const RMat& joint) {  // H(rows | cols)
    return shannon_entropy(joint) - shannon_entropy(RVec(joint.colwise().sum()));
}

inline double mutual_information(const RMat& joint) {
    return shannon_entropy(RVec(joint.rowwise().sum())) +
           shannon_entropy(RVec(joint.colwise().sum())) - shannon_entropy(joint);
}

// I(A : B | C) from a dense three-index table p(a, b, c).
inline double conditional_mutual_information(const std::vector<double>& p, Index na,
                                             Index nb, Index nc) {
    auto h = [&](auto&& project) {
        std::vector<double> q;
        project(q);
        double out = 0.0;
        for (double v : q) out += detail::plog2p(v);
        return out;
    };
    double h_ac = h([&](std::vector<double>& q) {
        q.assign(na * nc, 0.0);
        for (Index a = 0; a < na; ++a)
            for (Index b = 0; b < nb; ++b)
                for (Index c = 0; c < nc; ++c) q[a * nc + c] += p[(a * nb + b) * nc + c];
    });
    double h_bc = h([&](std::vector<double>& q) {
        q.assign(nb * nc, 0.0);
        for (Index a = 0; a < na; ++a)
            for (Index b = 0; b < nb; ++b)
                for (Index c = 0; c < nc; ++c) q[b * nc + c] += p[(a * nb + b) * nc + c];
    });
    double h_c = h([&](std::vector<double>& q) {
        q.assign(nc, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) q[i % nc] += p[i];
    });
    double h_abc = h([&](std::vector<double>& q) { q = p; });
    return h_ac + h_bc - h_abc - h_c;
}

// Kolmogorov-Sinai entropy rate. Unifilar machines get the exact closed form
// sum_s pi(s) H[Pr(x|s)]; otherwise the block-entropy difference
// H(t) - H(t-1) at the largest t affordable under the enumeration cap.
struct EntropyRate {
    double bits_per_symbol = 0.0;
    bool closed_form = false;
    int block_t = 0;        // 0 for the closed form
    double block_h = 0.0;   // H(block_t)
    double block_h_prev = 0.0;
};

inline RVec word_distribution(const Machine& m, int t,
                              std::uint64_t cap = tol::enumeration_cap()) {
    return joint_word_state(m, t, cap).word_marginal();
}

inline EntropyRate entropy_rate(const Machine& m,
                                std::uint64_t cap = tol::enumeration_cap()) {
    require_valid(m);
    EntropyRate r;
    if (is_unifilar(m)) {
        StationaryDist pi = stationary_distribution(m);
        RMat em = emission_table(m);
        for (Index s = 0; s < m.state_count(); ++s)
            r.bits_per_symbol += pi(s) * shannon_entropy(RVec(em.col(s)));
        r.closed_form = true;
        return r;
    }
    int t = 1;
    while (detail::pow_u64(m.symbol_count(), t + 1) * m.state_count() <= cap && t < 18) ++t;
    if (t < 2) throw EnumerationCapExceeded(detail::pow_u64(m.symbol_count(), 2), cap);
    r.block_t = t;
    r.block_h = shannon_entropy(word_distribution(m, t, cap));
    r.block_h_prev = shannon_entropy(word_distribution(m, t - 1, cap));
    r.bits_per_symbol = r.block_h - r.block_h_prev;
    return r;
}

// Per-step locality dissipation trace, in bits (units of k_B T ln 2).
struct DissipationRecord {
    int t = 0;
    double info_state_past = 0.0;  // I(S_t : X_1..X_t)
    double info_next_past = 0.0;   // I(S_{t+1} X_{t+1} : X_1..X_t)
    double delta_s_loc = 0.0;
};

struct DissipationTrace {
    std::vector<DissipationRecord> records;
    double max_delta() const {
        double v = 0.0;
        for (const auto& r : records) v = std::max(v, r.delta_s_loc);
        return v;
    }
};

inline DissipationTrace classical_dissipation(const Machine& m, int t_max,
                                              std::uint64_t cap = tol::enumeration_cap()) {
    require_valid(m);
    const Index n = m.state_count(), k = m.symbol_count();
    detail::check_cap(detail::pow_u64(k, t_max + 1) * n, cap);

    DissipationTrace trace;
    StationaryDist pi = stationary_distribution(m);
    RMat joint(1, n);  // rows: word codes, cols: states; entries Pr(w, s)
    joint.row(0) = pi.transpose();
    for (int t = 1; t <= t_max; ++t) {
        RMat next(joint.rows() * k, n);
        for (Index code = 0; code < joint.rows(); ++code)
            for (Index x = 0; x < k; ++x)
                next.row(code + x * joint.rows()) =
                    (m.transitions[x] * joint.row(code).transpose()).transpose();
        joint = std::move(next);

        DissipationRecord rec;
        rec.t = t;
        rec.info_state_past = mutual_information(joint);
        RMat ext(joint.rows(), k * n);  // Pr(w, (x_{t+1}, s_{t+1}))
        for (Index code = 0; code < joint.rows(); ++code)
            for (Index x = 0; x < k; ++x)
                ext.block(code, x * n, 1, n) =
                    (m.transitions[x] * joint.row(code).transpose()).transpose();
        rec.info_next_past = mutual_information(ext);
        rec.delta_s_loc = rec.info_state_past - rec.info_next_past;
        trace.records.push_back(rec);
    }
    return trace;
}

// Efficiency classifier: the generator dissipates nothing at every step iff its
// retrodictively state-merged generator is co-unifilar.
struct EfficiencyVerdict {
    bool efficient = false;
    Partition retro_partition;
    Machine merged;
    Eigen::MatrixXi predecessor;  // f(block, symbol) when efficient, -1 = no edge
    struct Violation {
        Index block;
        Index symbol;
        std::vector<Index> predecessors;
    };
    std::optional<Violation> witness;
};

inline EfficiencyVerdict classify_efficiency(const Machine& m) {
    EfficiencyVerdict v;
    v.retro_partition = retrodictive_partition(m);
    v.merged = merge(m, v.retro_partition);
    DeterminismResult co = counifilar(v.merged);
    v.efficient = co.holds;
    v.predecessor = co.f;
    if (!co.holds) {
        for (Index to = 0; to < v.merged.state_count() && !v.witness; ++to)
            for (Index x = 0; x < v.merged.symbol_count() && !v.witness; ++x) {
                std::vector<Index> preds;
                for (Index s = 0; s < v.merged.state_count(); ++s)
                    if (v.merged.transitions[x](to, s) > tol::prob_zero) preds.push_back(s);
                if (preds.size() > 1)
                    v.witness = EfficiencyVerdict::Violation{to, x, std::move(preds)};
            }
    }
    return v;
}

// Finite-horizon retrodictor diagnostics. The sufficiency factorization
// I(past : future | S_t) = 0 is checked numerically and conjoined with the
// structural classifier, which is the exact arbiter. The complementary
// chain past-future-S_t only closes in the infinite-future limit (the state
// becomes a function of the future through synchronization), so its
// finite-horizon conditional mutual information is reported as a diagnostic
// rather than asserted; it vanishes identically for machines that
// synchronize within the horizon and is strictly positive for
// non-retrodictors like the Golden Mean generator already at h = 1.
struct RetrodictorCheck {
    bool structural = false;      // classifier verdict
    double max_markov_cmi = 0.0;  // max I(past : future | S_t)
    double max_retro_cmi = 0.0;   // max I(past : S_t | future), diagnostic
    bool verdict() const {
        return structural && max_markov_cmi <= tol::dissipation_zero;
    }
};

inline RetrodictorCheck check_retrodictor(const Machine& m, int horizon,
                                          std::uint64_t cap = tol::enumeration_cap()) {
    require_valid(m);
    RetrodictorCheck out;
    out.structural = classify_efficiency(m).efficient;
    const Index n = m.state_count(), k = m.symbol_count();
    detail::check_cap(detail::pow_u64(k, horizon) * n, cap);

    for (int t = 1; t < horizon; ++t) {
        JointWordState past = joint_word_state(m, t, cap);
        const Index n_past = static_cast<Index>(past.word_count());
        for (int h = 1; t + h <= horizon; ++h) {
            const Index n_fut = static_cast<Index>(detail::pow_u64(k, h));
            // p(w_past, s, w_future) = Pr(w,s) * Pr(v | s)
            std::vector<double> p(std::size_t(n_past) * n * n_fut, 0.0);
            RMat fut = RMat::Zero(n_fut, n);  // Pr(v | s_t = s)
            for (Index s = 0; s < n; ++s) {
                RMat level(1, n);
                level.row(0) = RVec::Unit(n, s).transpose();
                for (int step = 0; step < h; ++step) {
                    RMat nx(level.rows() * k, n);
                    for (Index c = 0; c < level.rows(); ++c)
                        for (Index x = 0; x < k; ++x)
                            nx.row(c + x * level.rows()) =
                                (m.transitions[x] * level.row(c).transpose()).transpose();
                    level = std::move(nx);
                }
                fut.col(s) = level.rowwise().sum();
            }
            for (Index w = 0; w < n_past; ++w)
                for (Index s = 0; s < n; ++s)
                    for (Index v = 0; v < n_fut; ++v)
                        p[(std::size_t(w) * n + s) * n_fut + v] =
                            past.prob(w, s) * fut(v, s);

            // I(past : future | S): reorder so S is the conditioner.
            std::vector<double> q(p.size());
            for (Index w = 0; w < n_past; ++w)
                for (Index s = 0; s < n; ++s)
                    for (Index v = 0; v < n_fut; ++v)
                        q[(std::size_t(w) * n_fut + v) * n + s] =
                            p[(std::size_t(w) * n + s) * n_fut + v];
            out.max_markov_cmi = std::max(
                out.max_markov_cmi, conditional_mutual_information(q, n_past, n_fut, n));
            out.max_retro_cmi = std::max(
                out.max_retro_cmi, conditional_mutual_information(p, n_past, n, n_fut));
        }
    }
    return out;
}

inline bool is_retrodictor(const Machine& m, int horizon,
                           std::uint64_t cap = tol::enumeration_cap()) {
    return check_retrodictor(m, horizon, cap).verdict();
}

// Local-reversibility check: a channel X -> Z preserves I(.:Y) iff every transition with
// positive probability connects x to a z with identical posterior over Y.
// Structural and numeric routes must agree.
inline bool classical_local_reversibility_check(const RMat& joint, const RMat& channel) {
    const Index nx = joint.rows(), ny = joint.cols(), nz = channel.rows();
    if (channel.cols() != nx) throw DimensionMismatch("channel columns must match joint rows");
    for (Index x = 0; x < nx; ++x) {
        for (Index y = 0; y < ny; ++y)
            if (joint(x, y) < -tol::prob_zero)
                throw NegativeProbability("negative joint probability");
        if (std::abs(channel.col(x).sum() - 1.0) > tol::channel_column)
            throw ValidationError("channel column " + std::to_string(x) + " not stochastic");
    }

    RVec px = joint.rowwise().sum();
    RMat joint_zy = RMat::Zero(nz, ny);
    for (Index z = 0; z < nz; ++z)
        for (Index x = 0; x < nx; ++x) joint_zy.row(z) += channel(z, x) * joint.row(x);
    RVec pz = joint_zy.rowwise().sum();

    bool structural = true;
    for (Index x = 0; x < nx && structural; ++x) {
        if (px(x) <= tol::prob_zero) continue;
        RVec post_x = joint.row(x).transpose() / px(x);
        for (Index z = 0; z < nz && structural; ++z) {
            if (channel(z, x) <= tol::prob_zero || pz(z) <= tol::prob_zero) continue;
            RVec post_z = joint_zy.row(z).transpose() / pz(z);
            if ((post_x - post_z).cwiseAbs().maxCoeff() > tol::equiv_compare)
                structural = false;
        }
    }
    bool numeric =
        std::abs(mutual_information(joint) - mutual_information(joint_zy)) <= tol::mi_equal;
    if (structural != numeric)
        throw VerificationError("structural and numeric reversibility verdicts disagree");
    return structural;
}

}  // namespace ratchetlab
