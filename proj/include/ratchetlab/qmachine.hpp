#pragma once

#include <cmath>
#include <mutex>
#include <thread>
#include <vector>

#include "ratchetlab/equivalence.hpp"
#include "ratchetlab/info.hpp"
#include "ratchetlab/quantum.hpp"

namespace ratchetlab {

// Encoding phases phi(x, s), radians. All-zero is the canonical choice.
struct PhaseTable {
    RMat phi;  // symbols x states

    static PhaseTable zeros(Index n_symbols, Index n_states) {
        return {RMat::Zero(n_symbols, n_states)};
    }
};

struct OverlapMatrix {
    Mat omega;
    double residual = 0.0;
    std::uint64_t iterations = 0;
};

namespace detail {
inline Mat overlap_map(const Machine& m, const Eigen::MatrixXi& f, const RMat& emit,
                       const PhaseTable& phases, const Mat& omega) {
    const Index n = m.state_count(), k = m.symbol_count();
    Mat next = Mat::Zero(n, n);
    for (Index r = 0; r < n; ++r)
        for (Index s = 0; s < n; ++s)
            for (Index x = 0; x < k; ++x) {
                double pr = emit(x, r), ps = emit(x, s);
                if (pr <= tol::prob_zero || ps <= tol::prob_zero) continue;
                Cplx phase = std::exp(Cplx(0, phases.phi(x, s) - phases.phi(x, r)));
                next(r, s) += phase * std::sqrt(pr * ps) * omega(f(r, x), f(s, x));
            }
    return next;
}
}  // namespace detail

// Fixed point of the overlap self-consistency map, iterated from the
// identity. The solution is what determines the encoding geometry.
inline OverlapMatrix solve_overlaps(const Machine& m, const PhaseTable& phases) {
    require_valid(m);
    DeterminismResult uni = unifilar(m);
    if (!uni.holds) throw PreconditionError("overlap equation needs a unifilar machine");
    if (phases.phi.rows() != m.symbol_count() || phases.phi.cols() != m.state_count())
        throw DimensionMismatch("phase table shape does not match machine");
    RMat emit = emission_table(m);

    OverlapMatrix out;
    out.omega = Mat::Identity(m.state_count(), m.state_count());
    for (out.iterations = 0; out.iterations < tol::overlap_iter_cap; ++out.iterations) {
        Mat next = detail::overlap_map(m, uni.f, emit, phases, out.omega);
        double diff = (next - out.omega).cwiseAbs().maxCoeff();
        out.omega = std::move(next);
        if (diff < tol::overlap_step) break;
    }
    out.residual =
        (detail::overlap_map(m, uni.f, emit, phases, out.omega) - out.omega)
            .cwiseAbs()
            .maxCoeff();
    if (out.residual > tol::overlap_residual)
        throw NonConvergence("overlap fixed point did not converge", out.residual);
    return out;
}

enum class QKind { forward, reverse };

// Quantum implementation of a generator: encoding states as columns, Kraus
// operators per symbol, and the stationary state of the induced channel.
struct QMachine {
    Machine source;
    PhaseTable phases;
    QKind kind = QKind::forward;
    Mat encodings;            // dim x n_states, column s = |psi_s>
    std::vector<Mat> kraus;   // per symbol, dim x dim
    Mat rho_pi;
    RVec lambda;              // spectrum of rho_pi, descending
    StationaryDist pi;
    Mat omega;                // forward: own overlaps; reverse: of the time-reversed machine
    // spectrum values within two decades of the dimension cutoff; a nonempty
    // list flags that the compressed dimension is numerically delicate
    std::vector<double> borderline_spectrum;

    Index dim() const { return rho_pi.rows(); }
    Index rank() const {
        Index r = 0;
        for (Index i = 0; i < lambda.size(); ++i)
            if (lambda(i) > tol::singular_cut) ++r;
        return r;
    }
};

inline double max_qword_discrepancy(const QMachine& qm, int max_len, std::uint64_t cap);

// Re-checks every QMachine invariant: completeness, stationarity, the
// defining Kraus action for the kind, and process equality at desk length.
// Builders run this before returning; deserialized machines run it on load.
inline void verify_qmachine(const QMachine& qm) {
    require_valid(qm.source);
    const Index d = qm.dim();
    if (static_cast<Index>(qm.kraus.size()) != qm.source.symbol_count())
        throw VerificationError("q-machine needs one Kraus operator per symbol");

    Mat acc = Mat::Zero(d, d);
    for (const Mat& k : qm.kraus) acc += k.adjoint() * k;
    if ((acc - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > tol::completeness)
        throw VerificationError("q-machine Kraus family is not complete");

    Mat evolved = Mat::Zero(d, d);
    for (const Mat& k : qm.kraus) evolved += k * qm.rho_pi * k.adjoint();
    if ((evolved - qm.rho_pi).cwiseAbs().maxCoeff() > tol::rho_invariance)
        throw VerificationError("stationary state is not invariant under the channel");
    if (hermiticity_error(qm.rho_pi) > tol::hermitian ||
        std::abs(qm.rho_pi.trace().real() - 1.0) > tol::unit_trace)
        throw VerificationError("stationary state is not a density operator");

    RMat emit = emission_table(qm.source);
    if (qm.kind == QKind::forward) {
        DeterminismResult uni = unifilar(qm.source);
        if (!uni.holds) throw VerificationError("forward q-machine source must be unifilar");
        for (Index x = 0; x < qm.source.symbol_count(); ++x)
            for (Index s = 0; s < qm.source.state_count(); ++s) {
                Vec lhs = qm.kraus[x] * qm.encodings.col(s);
                Vec rhs = Vec::Zero(d);
                if (emit(x, s) > tol::prob_zero)
                    rhs = std::exp(Cplx(0, qm.phases.phi(x, s))) *
                          std::sqrt(qm.source.transitions[x](uni.f(s, x), s)) *
                          qm.encodings.col(uni.f(s, x));
                if ((lhs - rhs).cwiseAbs().maxCoeff() > tol::qdyn)
                    throw VerificationError("Kraus action deviates from the defining relation");
            }
    } else {
        DeterminismResult co = counifilar(qm.source);
        if (!co.holds)
            throw VerificationError("reverse q-machine source must be co-unifilar");
        const Index n = qm.source.state_count();
        if ((qm.encodings - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > tol::qdyn)
            throw VerificationError("reverse q-machine encoding must be orthonormal");
        for (Index x = 0; x < qm.source.symbol_count(); ++x) {
            Mat expected = Mat::Zero(n, n);
            for (Index to = 0; to < n; ++to)
                if (co.f(to, x) >= 0)
                    expected(to, co.f(to, x)) =
                        std::exp(Cplx(0, qm.phases.phi(x, to))) *
                        std::sqrt(qm.source.transitions[x](to, co.f(to, x)));
            if ((qm.kraus[x] - expected).cwiseAbs().maxCoeff() > tol::qdyn)
                throw VerificationError("reverse Kraus operators deviate from the explicit form");
        }
    }
    if (max_qword_discrepancy(qm, 6, tol::enumeration_cap()) > tol::word_match)
        throw VerificationError("q-machine does not reproduce the source process");
}

// Build the q-machine of a forward epsilon-machine: solve the overlaps,
// factor the pi-weighted Gram matrix, and read encodings and Kraus operators
// off the factorization. Singular values above the cutoff set the dimension.
inline QMachine build_qmachine(const Machine& m, const PhaseTable& phases) {
    require_valid(m);
    DeterminismResult uni = unifilar(m);
    if (!uni.holds) throw NotEpsilonMachine("machine is not unifilar");
    if (!predictive_partition(m).all_singletons())
        throw NotEpsilonMachine("machine states are not predictively distinct");

    QMachine qm;
    qm.source = m;
    qm.phases = phases;
    qm.kind = QKind::forward;
    qm.pi = stationary_distribution(m);
    qm.omega = solve_overlaps(m, phases).omega;

    const Index n = m.state_count(), k = m.symbol_count();
    Mat gram = qm.pi.cwiseSqrt().asDiagonal() * qm.omega *
               qm.pi.cwiseSqrt().asDiagonal();
    HermEig eig = hermitian_eig(gram);
    if (eig.values.minCoeff() < -tol::psd)
        throw VerificationError("pi-weighted Gram matrix is not PSD");

    std::vector<Index> kept;
    for (Index i = n - 1; i >= 0; --i) {  // descending
        if (eig.values(i) > tol::singular_cut) kept.push_back(i);
        if (std::abs(eig.values(i)) > tol::singular_cut / 100 &&
            std::abs(eig.values(i)) < tol::singular_cut * 100)
            qm.borderline_spectrum.push_back(eig.values(i));
    }
    const Index d = static_cast<Index>(kept.size());
    qm.lambda = RVec(d);
    Mat u(n, d);
    for (Index a = 0; a < d; ++a) {
        qm.lambda(a) = eig.values(kept[a]);
        u.col(a) = eig.vectors.col(kept[a]);
    }

    qm.encodings = Mat(d, n);
    for (Index s = 0; s < n; ++s)
        for (Index a = 0; a < d; ++a)
            qm.encodings(a, s) = std::sqrt(qm.lambda(a) / qm.pi(s)) * std::conj(u(s, a));

    qm.kraus.assign(k, Mat::Zero(d, d));
    RMat emit = emission_table(m);
    for (Index x = 0; x < k; ++x)
        for (Index s = 0; s < n; ++s) {
            if (emit(x, s) <= tol::prob_zero) continue;
            Index sp = uni.f(s, x);
            double t = m.transitions[x](sp, s);
            Cplx phase = std::exp(Cplx(0, phases.phi(x, s)));
            for (Index a = 0; a < d; ++a)
                for (Index b = 0; b < d; ++b)
                    qm.kraus[x](b, a) += phase * std::conj(u(sp, b)) * u(s, a) *
                                         std::sqrt(qm.lambda(b) * qm.pi(s) * t /
                                                   (qm.lambda(a) * qm.pi(sp)));
        }
    qm.rho_pi = qm.lambda.asDiagonal();
    verify_qmachine(qm);
    return qm;
}

// Reverse q-machine of a reverse epsilon-machine: orthogonal encodings,
// explicit Kraus form over the co-unifilar predecessor function, and a
// stationary state carrying the time-reversed machine's overlap geometry.
inline QMachine build_reverse_qmachine(const Machine& m, const PhaseTable& phases) {
    require_valid(m);
    DeterminismResult co = counifilar(m);
    if (!co.holds) throw NotReverseEpsilonMachine("machine is not co-unifilar");
    if (!retrodictive_partition(m).all_singletons())
        throw NotReverseEpsilonMachine("machine states are not retrodictively distinct");

    QMachine qm;
    qm.source = m;
    qm.phases = phases;
    qm.kind = QKind::reverse;
    qm.pi = stationary_distribution(m);

    const Index n = m.state_count(), k = m.symbol_count();
    Machine reversed = time_reverse(m);
    PhaseTable negated{-phases.phi};
    qm.omega = solve_overlaps(reversed, negated).omega;

    qm.encodings = Mat::Identity(n, n);
    qm.kraus.assign(k, Mat::Zero(n, n));
    for (Index x = 0; x < k; ++x)
        for (Index to = 0; to < n; ++to) {
            if (co.f(to, x) < 0) continue;
            Index from = co.f(to, x);
            qm.kraus[x](to, from) = std::exp(Cplx(0, phases.phi(x, to))) *
                                    std::sqrt(m.transitions[x](to, from));
        }
    qm.rho_pi = qm.pi.cwiseSqrt().asDiagonal() * qm.omega *
                qm.pi.cwiseSqrt().asDiagonal();

    HermEig eig = hermitian_eig(qm.rho_pi);
    if (eig.values.minCoeff() < -tol::psd)
        throw VerificationError("reverse stationary state is not PSD");
    qm.lambda = eig.values.reverse();
    for (Index i = 0; i < qm.lambda.size(); ++i)
        if (std::abs(qm.lambda(i)) > tol::singular_cut / 100 &&
            std::abs(qm.lambda(i)) < tol::singular_cut * 100)
            qm.borderline_spectrum.push_back(qm.lambda(i));
    verify_qmachine(qm);
    return qm;
}

inline double qword_probability(const QMachine& qm, const Word& w) {
    detail::check_word(qm.source, w);
    Mat rho = qm.rho_pi;
    for (Index x : w) rho = qm.kraus[x] * rho * qm.kraus[x].adjoint();
    return rho.trace().real();
}

// Largest |quantum - classical| word probability over words up to max_len,
// comparing against the q-machine's own source machine.
inline double max_qword_discrepancy(const QMachine& qm, int max_len,
                                    std::uint64_t cap = tol::enumeration_cap()) {
    std::uint64_t nodes = 0;
    for (int t = 1; t <= max_len; ++t)
        nodes += detail::pow_u64(qm.source.symbol_count(), t);
    detail::check_cap(nodes, cap);
    double worst = 0.0;
    RVec v0 = stationary_distribution(qm.source);
    auto dfs = [&](auto&& self, const RVec& v, const Mat& rho, int depth) -> void {
        if (depth > 0) worst = std::max(worst, std::abs(v.sum() - rho.trace().real()));
        if (depth == max_len) return;
        for (Index x = 0; x < qm.source.symbol_count(); ++x)
            self(self, qm.source.transitions[x] * v,
                 Mat(qm.kraus[x] * rho * qm.kraus[x].adjoint()), depth + 1);
    };
    dfs(dfs, v0, qm.rho_pi, 0);
    return worst;
}

namespace detail {

inline double spectrum_entropy_of(const Mat& unnormalized, double norm) {
    HermEig e = hermitian_eig(unnormalized);
    double h = 0.0;
    for (Index i = 0; i < e.values.size(); ++i) {
        double v = e.values(i) / norm;
        if (v > tol::eig_clamp) h += plog2p(v);
    }
    return h;
}

struct DissipationSums {
    std::vector<double> h_rho;    // sum_w p_w H(rho_w), by depth
    std::vector<double> h_sigma;  // sum_w p_w H(sigma_w), by depth
};

// One subtree of the word-indexed enumeration; entries are weighted by the
// word probability so partial sums combine by addition.
inline void dissipation_subtree(const QMachine& qm, const Mat& w, int depth, int t_max,
                                DissipationSums& sums) {
    double p = w.trace().real();
    if (p <= 1e-14) return;
    sums.h_rho[depth] += p * spectrum_entropy_of(w, p);
    std::vector<Mat> children;
    children.reserve(qm.kraus.size());
    double h_sigma = 0.0;
    for (const Mat& k : qm.kraus) {
        children.push_back(k * w * k.adjoint());
        h_sigma += spectrum_entropy_of(children.back(), p);
    }
    sums.h_sigma[depth] += p * h_sigma;
    if (depth < t_max)
        for (const Mat& c : children) dissipation_subtree(qm, c, depth + 1, t_max, sums);
}

}  // namespace detail

// Quantum locality dissipation in Holevo form: the tape registers are
// classical, so I(S_t : A_1..A_t) = H(rho_pi) - sum_w Pr(w) H(rho_w) and the
// post-emission term uses the symbol-indexed block states sigma_w.
inline DissipationTrace quantum_dissipation(const QMachine& qm, int t_max,
                                            std::uint64_t cap = tol::enumeration_cap(),
                                            unsigned threads = 1) {
    detail::check_cap(detail::pow_u64(qm.source.symbol_count(), t_max + 1), cap);
    detail::DissipationSums total{std::vector<double>(t_max + 1, 0.0),
                                  std::vector<double>(t_max + 1, 0.0)};
    if (threads <= 1 || qm.source.symbol_count() < 2 || t_max < 1) {
        detail::dissipation_subtree(qm, qm.rho_pi, 0, t_max, total);
    } else {
        // Depth-0 node by hand, then one task per depth-1 subtree.
        double p0 = qm.rho_pi.trace().real();
        total.h_rho[0] = detail::spectrum_entropy_of(qm.rho_pi, p0);
        std::vector<Mat> roots;
        for (const Mat& k : qm.kraus) {
            roots.push_back(k * qm.rho_pi * k.adjoint());
            total.h_sigma[0] += detail::spectrum_entropy_of(roots.back(), p0);
        }
        std::vector<detail::DissipationSums> partial(
            roots.size(), {std::vector<double>(t_max + 1, 0.0),
                           std::vector<double>(t_max + 1, 0.0)});
        std::vector<std::thread> pool;
        std::size_t next_task = 0;
        std::mutex mu;
        auto worker = [&]() {
            while (true) {
                std::size_t task;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (next_task >= roots.size()) return;
                    task = next_task++;
                }
                detail::dissipation_subtree(qm, roots[task], 1, t_max, partial[task]);
            }
        };
        for (unsigned i = 0; i < std::min<std::size_t>(threads, roots.size()); ++i)
            pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        for (const auto& part : partial)
            for (int t = 0; t <= t_max; ++t) {
                total.h_rho[t] += part.h_rho[t];
                total.h_sigma[t] += part.h_sigma[t];
            }
    }

    DissipationTrace trace;
    for (int t = 1; t <= t_max; ++t) {
        DissipationRecord rec;
        rec.t = t;
        rec.info_state_past = total.h_rho[0] - total.h_rho[t];
        rec.info_next_past = total.h_sigma[0] - total.h_sigma[t];
        rec.delta_s_loc = rec.info_state_past - rec.info_next_past;
        trace.records.push_back(rec);
    }
    return trace;
}

// Maximal commuting partition: overlap-graph components for forward machines,
// stationary-state block components in the encoding basis for reverse ones.
inline Partition mcp(const QMachine& qm) {
    const Mat& coupling = qm.kind == QKind::forward ? qm.omega : qm.rho_pi;
    const Index n = coupling.rows();
    std::vector<Index> comp(n, -1);
    Index next = 0;
    for (Index s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = next;
        std::vector<Index> stack{s};
        while (!stack.empty()) {
            Index u = stack.back();
            stack.pop_back();
            for (Index v = 0; v < n; ++v)
                if (comp[v] < 0 && std::abs(coupling(u, v)) > tol::support_edge) {
                    comp[v] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    return Partition::from_block_of(std::move(comp)).canonical();
}

struct QuantumEfficiencyVerdict {
    bool efficient = false;
    bool mcp_trivially_maximal = false;
    bool merged_deterministic = false;  // co-unifilar (forward) / unifilar (reverse)
    Partition mcp_partition;
    double max_dissipation = 0.0;
    int cross_check_t = 0;
};

namespace detail {
inline QuantumEfficiencyVerdict check_efficiency(const QMachine& qm, bool forward_kind, int cross_t,
                                       std::uint64_t cap) {
    QuantumEfficiencyVerdict v;
    v.mcp_partition = mcp(qm);
    v.mcp_trivially_maximal = v.mcp_partition.all_singletons();
    Machine coarse = merge(qm.source, v.mcp_partition);
    Machine merged = forward_kind ? merge(coarse, retrodictive_partition(coarse))
                                  : merge(coarse, predictive_partition(coarse));
    v.merged_deterministic = forward_kind ? is_counifilar(merged) : is_unifilar(merged);
    v.efficient = v.mcp_trivially_maximal && v.merged_deterministic;

    v.cross_check_t = cross_t;
    v.max_dissipation = quantum_dissipation(qm, cross_t, cap).max_delta();
    bool trace_zero = v.max_dissipation <= tol::dissipation_zero;
    if (trace_zero != v.efficient)
        throw VerificationError("structural efficiency verdict contradicts the dissipation trace");
    return v;
}
}  // namespace detail

inline QuantumEfficiencyVerdict check_forward_efficiency(const QMachine& qm, int cross_t = 4,
                                               std::uint64_t cap = tol::enumeration_cap()) {
    if (qm.kind != QKind::forward)
        throw PreconditionError("forward efficiency checker needs a forward q-machine");
    return detail::check_efficiency(qm, true, cross_t, cap);
}

inline QuantumEfficiencyVerdict check_reverse_efficiency(const QMachine& qm, int cross_t = 4,
                                               std::uint64_t cap = tol::enumeration_cap()) {
    if (qm.kind != QKind::reverse)
        throw PreconditionError("reverse efficiency checker needs a reverse q-machine");
    return detail::check_efficiency(qm, false, cross_t, cap);
}

// Renyi memory spectrum. alpha = 0, 1, 2, inf are handled analytically.
struct MemoryMetrics {
    double log2_size = 0.0;  // log2 |S| for machines, log2 rank(rho_pi) for q-machines
    std::vector<std::pair<double, double>> renyi;  // (alpha, H_alpha) in bits
};

namespace detail {
inline double renyi_entropy(const RVec& spectrum, double alpha) {
    if (alpha < 0) throw InvalidAlpha("Renyi order must be nonnegative");
    if (std::isinf(alpha)) return -std::log2(spectrum.maxCoeff());
    if (alpha == 0.0) {
        Index support = 0;
        for (Index i = 0; i < spectrum.size(); ++i)
            if (spectrum(i) > tol::singular_cut) ++support;
        return std::log2(double(support));
    }
    if (alpha == 1.0) {
        double h = 0.0;
        for (Index i = 0; i < spectrum.size(); ++i) h += plog2p(spectrum(i));
        return h;
    }
    double sum = 0.0;
    for (Index i = 0; i < spectrum.size(); ++i)
        if (spectrum(i) > 0) sum += std::pow(spectrum(i), alpha);
    return std::log2(sum) / (1.0 - alpha);
}

inline std::vector<double> default_alphas() {
    return {0.0, 1.0, 2.0, std::numeric_limits<double>::infinity()};
}
}  // namespace detail

inline MemoryMetrics memory_metrics(const Machine& m,
                                    const std::vector<double>& alphas = detail::default_alphas()) {
    StationaryDist pi = stationary_distribution(m);
    MemoryMetrics out;
    out.log2_size = std::log2(double(m.state_count()));
    for (double a : alphas) out.renyi.emplace_back(a, detail::renyi_entropy(pi, a));
    return out;
}

inline MemoryMetrics memory_metrics(const QMachine& qm,
                                    const std::vector<double>& alphas = detail::default_alphas()) {
    RVec clamped = qm.lambda.cwiseMax(0.0);
    MemoryMetrics out;
    out.log2_size = std::log2(double(qm.rank()));
    for (double a : alphas) out.renyi.emplace_back(a, detail::renyi_entropy(clamped, a));
    return out;
}

// Weight of words whose memory state stays far from the most likely encoding,
// per threshold 1 - alpha^t. The exponential envelope (alpha, K) is fitted
// for reporting, never asserted.
struct SyncStats {
    double alpha = 0.9;
    std::vector<double> low_fidelity_mass;  // index t-1 for t = 1..t_max
    double fit_alpha = 0.0;
    double fit_log2_k = 0.0;
    bool fit_valid = false;
};

inline SyncStats synchronization_stats(const QMachine& qm, int t_max, double alpha = 0.9,
                                       std::uint64_t samples = 0, std::uint64_t seed = 0,
                                       std::uint64_t cap = tol::enumeration_cap()) {
    if (qm.kind != QKind::forward)
        throw PreconditionError("synchronization statistics need a forward q-machine");
    SyncStats stats;
    stats.alpha = alpha;
    stats.low_fidelity_mass.assign(t_max, 0.0);

    auto fidelity_to_best = [&](const RVec& belief, const Mat& w, double p) {
        Index best;
        belief.maxCoeff(&best);
        Vec psi = qm.encodings.col(best);
        return (psi.adjoint() * w * psi)(0, 0).real() / p;
    };

    if (samples == 0) {
        detail::check_cap(detail::pow_u64(qm.source.symbol_count(), t_max), cap);
        RVec v0 = stationary_distribution(qm.source);
        auto dfs = [&](auto&& self, const RVec& v, const Mat& w, int depth) -> void {
            double p = v.sum();
            if (p <= 1e-14) return;
            if (depth > 0) {
                double f = fidelity_to_best(v, w, p);
                if (f < 1.0 - std::pow(alpha, depth))
                    stats.low_fidelity_mass[depth - 1] += p;
            }
            if (depth == t_max) return;
            for (Index x = 0; x < qm.source.symbol_count(); ++x)
                self(self, qm.source.transitions[x] * v,
                     Mat(qm.kraus[x] * w * qm.kraus[x].adjoint()), depth + 1);
        };
        dfs(dfs, v0, qm.rho_pi, 0);
    } else {
        std::mt19937_64 rng(seed);
        StationaryDist pi = stationary_distribution(qm.source);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        auto draw = [&](const RVec& weights) {
            double r = unif(rng) * weights.sum();
            for (Index i = 0; i < weights.size(); ++i) {
                r -= weights(i);
                if (r <= 0) return i;
            }
            return weights.size() - 1;
        };
        const Index n = qm.source.state_count(), k = qm.source.symbol_count();
        for (std::uint64_t i = 0; i < samples; ++i) {
            // Walk the chain to sample a word; filter from pi for s-hat.
            Index s = draw(pi);
            Mat w = qm.rho_pi;
            RVec belief = pi;
            for (int t = 1; t <= t_max; ++t) {
                RVec joint(k * n);
                for (Index x = 0; x < k; ++x)
                    joint.segment(x * n, n) = qm.source.transitions[x].col(s);
                Index pick_idx = draw(joint);
                Index x = pick_idx / n;
                s = pick_idx % n;
                belief = qm.source.transitions[x] * belief;
                w = qm.kraus[x] * w * qm.kraus[x].adjoint();
                double f = fidelity_to_best(belief, w, w.trace().real());
                if (f < 1.0 - std::pow(alpha, t))
                    stats.low_fidelity_mass[t - 1] += 1.0 / double(samples);
            }
        }
    }

    // Least-squares fit of log2(mass) = log2 K + t log2 alpha.
    std::vector<std::pair<double, double>> pts;
    for (int t = 1; t <= t_max; ++t)
        if (stats.low_fidelity_mass[t - 1] > 0)
            pts.emplace_back(double(t), std::log2(stats.low_fidelity_mass[t - 1]));
    if (pts.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto [x, y] : pts) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        double n = double(pts.size());
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        stats.fit_alpha = std::pow(2.0, slope);
        stats.fit_log2_k = (sy - slope * sx) / n;
        stats.fit_valid = true;
    }
    return stats;
}

}  // namespace ratchetlab
