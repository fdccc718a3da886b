#pragma once

#include <array>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "ratchetlab/machine.hpp"

namespace ratchetlab {

// Disjoint blocks covering the machine's states.
struct Partition {
    std::vector<std::vector<Index>> blocks;
    std::vector<Index> block_of;

    // Accepts any labeling; block ids are compacted so no block is empty.
    static Partition from_block_of(std::vector<Index> assignment) {
        Partition p;
        p.block_of = std::move(assignment);
        std::map<Index, Index> relabel;
        for (Index& b : p.block_of) {
            if (b < 0) throw ValidationError("negative block index");
            auto [it, fresh] = relabel.try_emplace(b, static_cast<Index>(relabel.size()));
            b = it->second;
        }
        p.blocks.assign(relabel.size(), {});
        for (Index s = 0; s < static_cast<Index>(p.block_of.size()); ++s)
            p.blocks[p.block_of[s]].push_back(s);
        return p;
    }

    static Partition singletons(Index n) {
        std::vector<Index> a(n);
        std::iota(a.begin(), a.end(), Index(0));
        return from_block_of(std::move(a));
    }

    // Renumber blocks by smallest member so equal partitions compare equal.
    Partition canonical() const {
        std::vector<Index> order(blocks.size());
        std::iota(order.begin(), order.end(), Index(0));
        std::sort(order.begin(), order.end(), [&](Index a, Index b) {
            return *std::min_element(blocks[a].begin(), blocks[a].end()) <
                   *std::min_element(blocks[b].begin(), blocks[b].end());
        });
        std::vector<Index> relabel(blocks.size());
        for (Index i = 0; i < static_cast<Index>(order.size()); ++i) relabel[order[i]] = i;
        std::vector<Index> assignment(block_of.size());
        for (Index s = 0; s < static_cast<Index>(block_of.size()); ++s)
            assignment[s] = relabel[block_of[s]];
        return from_block_of(std::move(assignment));
    }

    bool all_singletons() const {
        return std::all_of(blocks.begin(), blocks.end(),
                           [](const auto& b) { return b.size() == 1; });
    }
    Index block_count() const { return static_cast<Index>(blocks.size()); }
};

inline bool same_partition(const Partition& a, const Partition& b) {
    if (a.block_of.size() != b.block_of.size()) return false;
    return a.canonical().block_of == b.canonical().block_of;
}

// Conditional probability table Pr(s | p) from source states p (columns) to
// target states s (rows), with estimator diagnostics.
struct StateChannel {
    RMat table;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    double max_disagreement = 0.0;
    double unsynchronized_mass = 0.0;
};

namespace detail {

// Smallest T-closed subspace containing the seed, as an orthonormal basis.
// step(x, v) applies one transition; closure stabilizes within |S| vectors,
// so agreement of the induced functionals on this basis certifies agreement
// on words of every length.
template <typename Step>
inline RMat span_basis(RVec seed, Index n_symbols, Step step) {
    const Index n = seed.size();
    RMat basis(n, 0);
    std::vector<RVec> worklist;
    auto add = [&](const RVec& v) {
        RVec r = v;
        if (basis.cols() > 0) r -= basis * (basis.transpose() * v);
        double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
        if (r.norm() > tol::span_rank * scale) {
            basis.conservativeResize(n, basis.cols() + 1);
            basis.col(basis.cols() - 1) = r / r.norm();
            worklist.push_back(basis.col(basis.cols() - 1));
        }
    };
    add(seed);
    while (!worklist.empty() && basis.cols() < n) {
        RVec v = worklist.back();
        worklist.pop_back();
        for (Index x = 0; x < n_symbols; ++x) add(step(x, v));
    }
    return basis;
}

// Group states whose functionals agree on every basis direction. Tolerance
// may break transitivity, so take connected components of the agreement graph.
inline Partition group_by_functionals(const RMat& values) {
    const Index n = values.cols();
    std::vector<Index> comp(n, -1);
    Index next = 0;
    for (Index s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = next;
        std::vector<Index> stack{s};
        while (!stack.empty()) {
            Index u = stack.back();
            stack.pop_back();
            for (Index v = 0; v < n; ++v) {
                if (comp[v] >= 0) continue;
                double diff = (values.col(u) - values.col(v)).cwiseAbs().maxCoeff();
                double scale = std::max(
                    1.0, std::max(values.col(u).cwiseAbs().maxCoeff(),
                                  values.col(v).cwiseAbs().maxCoeff()));
                if (diff <= tol::equiv_compare * scale) {
                    comp[v] = next;
                    stack.push_back(v);
                }
            }
        }
        ++next;
    }
    return Partition::from_block_of(std::move(comp)).canonical();
}

}  // namespace detail

// States are retrodictively equivalent when their conditional past-word
// distributions Pr(x_1..x_t | s_t) agree for every word. Those distributions
// are the functionals u -> u(s)/pi(s) over the span of forward-filter vectors
// T^(x_t)..T^(x_1) pi, so span stabilization decides equivalence exactly.
inline Partition retrodictive_partition(const Machine& m) {
    require_valid(m);
    StationaryDist pi = stationary_distribution(m);
    RMat basis = detail::span_basis(
        pi, m.symbol_count(), [&](Index x, const RVec& v) { return m.transitions[x] * v; });
    RMat values(basis.cols(), m.state_count());
    for (Index s = 0; s < m.state_count(); ++s)
        values.col(s) = basis.row(s).transpose() / pi(s);
    return detail::group_by_functionals(values);
}

// Predictive counterpart: conditional future-word distributions, functionals
// over the span of 1^T T^(x_l)..T^(x_1).
inline Partition predictive_partition(const Machine& m) {
    require_valid(m);
    RVec ones = RVec::Ones(m.state_count());
    RMat basis = detail::span_basis(
        ones, m.symbol_count(),
        [&](Index x, const RVec& v) { return m.transitions[x].transpose() * v; });
    RMat values(basis.cols(), m.state_count());
    for (Index s = 0; s < m.state_count(); ++s) values.col(s) = basis.row(s).transpose();
    return detail::group_by_functionals(values);
}

// Merged generator over partition blocks, pi-weighted within source blocks.
inline Machine merge(const Machine& m, const Partition& p) {
    require_valid(m);
    if (static_cast<Index>(p.block_of.size()) != m.state_count())
        throw ValidationError("partition does not cover the machine's states");
    StationaryDist pi = stationary_distribution(m);
    const Index nb = p.block_count();
    RVec block_pi = RVec::Zero(nb);
    for (Index s = 0; s < m.state_count(); ++s) block_pi(p.block_of[s]) += pi(s);

    Machine merged;
    merged.alphabet = m.alphabet;
    for (const auto& block : p.blocks) {
        std::string name;
        for (Index s : block) {
            if (!name.empty()) name += "+";
            name += m.states[s];
        }
        merged.states.push_back(name);
    }
    merged.transitions.assign(m.symbol_count(), RMat::Zero(nb, nb));
    for (Index x = 0; x < m.symbol_count(); ++x)
        for (Index to = 0; to < m.state_count(); ++to)
            for (Index from = 0; from < m.state_count(); ++from)
                merged.transitions[x](p.block_of[to], p.block_of[from]) +=
                    m.transitions[x](to, from) * pi(from) / block_pi(p.block_of[from]);
    return merged;
}

// |max diff of word probabilities| over all words up to max_len, by a paired
// depth-first filter on both machines.
inline double max_word_discrepancy(const Machine& a, const Machine& b, int max_len,
                                   std::uint64_t cap = tol::enumeration_cap()) {
    if (a.symbol_count() != b.symbol_count())
        throw DimensionMismatch("machines have different alphabets");
    std::uint64_t nodes = 0;
    for (int t = 1; t <= max_len; ++t) nodes += detail::pow_u64(a.symbol_count(), t);
    detail::check_cap(nodes, cap);

    double worst = 0.0;
    RVec va = stationary_distribution(a);
    RVec vb = stationary_distribution(b);
    auto dfs = [&](auto&& self, const RVec& ua, const RVec& ub, int depth) -> void {
        if (depth > 0) worst = std::max(worst, std::abs(ua.sum() - ub.sum()));
        if (depth == max_len) return;
        for (Index x = 0; x < a.symbol_count(); ++x)
            self(self, a.transitions[x] * ua, b.transitions[x] * ub, depth + 1);
    };
    dfs(dfs, va, vb, 0);
    return worst;
}

inline bool same_process(const Machine& a, const Machine& b, int max_len,
                         double tolerance = tol::word_match,
                         std::uint64_t cap = tol::enumeration_cap()) {
    return max_word_discrepancy(a, b, max_len, cap) <= tolerance;
}

// Bounded-length mergeability certificate. Retrodictive partitions are
// guaranteed mergeable; arbitrary partitions only get this finite check.
inline bool is_mergeable(const Machine& m, const Partition& p, int max_len,
                         std::uint64_t cap = tol::enumeration_cap()) {
    return same_process(m, merge(m, p), max_len, tol::word_match, cap);
}

namespace detail {

struct BeliefGraph {
    std::vector<RVec> beliefs;
    // edges[b][x] = {target belief, emission probability}; -1 when Pr(x|b)=0
    std::vector<std::vector<std::pair<Index, double>>> edges;
};

inline BeliefGraph enumerate_beliefs(const Machine& m, std::size_t cap) {
    BeliefGraph g;
    StationaryDist pi = stationary_distribution(m);
    auto find_or_add = [&](const RVec& b) -> Index {
        for (Index i = 0; i < static_cast<Index>(g.beliefs.size()); ++i)
            if ((g.beliefs[i] - b).cwiseAbs().maxCoeff() <= tol::belief_coincide) return i;
        if (g.beliefs.size() >= cap)
            throw BeliefCapExceeded("reachable belief set exceeds cap " +
                                    std::to_string(cap));
        g.beliefs.push_back(b);
        g.edges.emplace_back(m.symbol_count(), std::pair<Index, double>{-1, 0.0});
        return static_cast<Index>(g.beliefs.size()) - 1;
    };
    find_or_add(pi);
    for (Index cur = 0; cur < static_cast<Index>(g.beliefs.size()); ++cur) {
        for (Index x = 0; x < m.symbol_count(); ++x) {
            RVec next = m.transitions[x] * g.beliefs[cur];
            double p = next.sum();
            if (p <= tol::prob_zero) continue;
            g.edges[cur][x] = {find_or_add(next / p), p};
        }
    }
    return g;
}

// Closed strongly connected components (no edges leaving the component).
inline std::vector<std::vector<Index>> closed_sccs(
    const std::vector<std::vector<std::pair<Index, double>>>& edges) {
    const Index n = static_cast<Index>(edges.size());
    std::vector<Index> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<Index> stack;
    Index counter = 0, n_comp = 0;

    auto strongconnect = [&](auto&& self, Index v) -> void {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = 1;
        for (auto [w, p] : edges[v]) {
            if (w < 0) continue;
            if (index[w] < 0) {
                self(self, w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            while (true) {
                Index w = stack.back();
                stack.pop_back();
                on_stack[w] = 0;
                comp[w] = n_comp;
                if (w == v) break;
            }
            ++n_comp;
        }
    };
    for (Index v = 0; v < n; ++v)
        if (index[v] < 0) strongconnect(strongconnect, v);

    std::vector<std::vector<Index>> members(n_comp);
    for (Index v = 0; v < n; ++v) members[comp[v]].push_back(v);
    std::vector<std::vector<Index>> closed;
    for (Index c = 0; c < n_comp; ++c) {
        bool is_closed = true;
        for (Index v : members[c])
            for (auto [w, p] : edges[v])
                if (w >= 0 && comp[w] != c) is_closed = false;
        if (is_closed) closed.push_back(members[c]);
    }
    return closed;
}

inline Machine rename_states(Machine m, const std::string& prefix) {
    for (Index s = 0; s < m.state_count(); ++s) m.states[s] = prefix + std::to_string(s);
    return m;
}

}  // namespace detail

// Forward epsilon-machine construction. Unifilar inputs are merged by
// predictive equivalence directly, which is exact and always terminates;
// anything else goes through the mixed-state route: enumerate beliefs
// Pr(s_t | past) reachable from pi, keep the recurrent class, then merge
// predictively equivalent beliefs.
inline Machine forward_epsilon_machine(const Machine& m,
                                       std::size_t belief_cap = tol::belief_cap) {
    require_valid(m);
    if (is_unifilar(m)) {
        Machine em =
            detail::rename_states(merge(m, predictive_partition(m)), "e");
        require_valid(em);
        if (!is_unifilar(em) || !predictive_partition(em).all_singletons() ||
            !same_process(em, m, 8))
            throw ConstructionError("predictive merge failed to produce the epsilon-machine");
        return em;
    }
    detail::BeliefGraph g = detail::enumerate_beliefs(m, belief_cap);
    auto closed = detail::closed_sccs(g.edges);
    if (closed.size() != 1)
        throw ConstructionError("mixed-state presentation has " +
                                std::to_string(closed.size()) +
                                " closed belief classes; expected exactly one");
    const auto& members = closed.front();
    std::vector<Index> local(g.beliefs.size(), -1);
    for (Index i = 0; i < static_cast<Index>(members.size()); ++i) local[members[i]] = i;

    Machine belief_machine;
    belief_machine.alphabet = m.alphabet;
    const Index nb = static_cast<Index>(members.size());
    for (Index i = 0; i < nb; ++i) belief_machine.states.push_back("b" + std::to_string(i));
    belief_machine.transitions.assign(m.symbol_count(), RMat::Zero(nb, nb));
    for (Index i = 0; i < nb; ++i)
        for (Index x = 0; x < m.symbol_count(); ++x) {
            auto [target, p] = g.edges[members[i]][x];
            if (target >= 0) belief_machine.transitions[x](local[target], i) = p;
        }

    Machine em = detail::rename_states(
        merge(belief_machine, predictive_partition(belief_machine)), "e");
    require_valid(em);
    if (!is_unifilar(em))
        throw ConstructionError("epsilon-machine construction produced a non-unifilar machine");
    if (!predictive_partition(em).all_singletons())
        throw ConstructionError("epsilon-machine states are not predictively distinct");
    if (!same_process(em, m, 8))
        throw ConstructionError("epsilon-machine does not reproduce the process");
    return em;
}

// Reverse epsilon-machine: time-reverse, take the forward epsilon-machine of
// the reverse process, and reverse back.
inline Machine reverse_epsilon_machine(const Machine& m,
                                       std::size_t belief_cap = tol::belief_cap) {
    Machine rem = detail::rename_states(
        time_reverse(forward_epsilon_machine(time_reverse(m), belief_cap)), "r");
    require_valid(rem);
    if (!is_counifilar(rem))
        throw ConstructionError("reverse epsilon-machine is not co-unifilar");
    if (!retrodictive_partition(rem).all_singletons())
        throw ConstructionError("reverse epsilon-machine states are not retrodictively distinct");
    if (!same_process(rem, m, 8))
        throw ConstructionError("reverse epsilon-machine does not reproduce the process");
    return rem;
}

// Estimate Pr(s | p): for words that synchronize the forward machine to a
// state p, average the reverse machine's belief, weighted by word probability.
// Unsynchronized mass and the within-group spread are reported, not dropped.
inline StateChannel forward_state_channel(const Machine& fwd, const Machine& rev,
                                          int horizon,
                                          std::uint64_t cap = tol::enumeration_cap()) {
    require_valid(fwd);
    require_valid(rev);
    if (!same_process(fwd, rev, std::min(horizon, 8)))
        throw PreconditionError("machines do not generate the same process");
    detail::check_cap(detail::pow_u64(fwd.symbol_count(), horizon), cap);

    const Index nf = fwd.state_count(), nr = rev.state_count();
    RMat acc = RMat::Zero(nr, nf);
    RVec group_mass = RVec::Zero(nf);
    std::vector<std::vector<std::pair<double, RVec>>> samples(nf);
    double unsync = 0.0;

    RVec vf0 = stationary_distribution(fwd);
    RVec vr0 = stationary_distribution(rev);
    auto dfs = [&](auto&& self, const RVec& vf, const RVec& vr, int depth) -> void {
        double p = vf.sum();
        if (p <= tol::prob_zero) return;
        if (depth == horizon) {
            RVec bf = vf / p;
            Index best;
            double mass = bf.maxCoeff(&best);
            if (mass >= 1.0 - tol::synchronized) {
                acc.col(best) += vr;
                group_mass(best) += p;
                samples[best].emplace_back(p, vr / p);
            } else {
                unsync += p;
            }
            return;
        }
        for (Index x = 0; x < fwd.symbol_count(); ++x)
            self(self, fwd.transitions[x] * vf, rev.transitions[x] * vr, depth + 1);
    };
    dfs(dfs, vf0, vr0, 0);

    StateChannel ch;
    ch.table = RMat::Zero(nr, nf);
    ch.row_labels = rev.states;
    ch.col_labels = fwd.states;
    ch.unsynchronized_mass = unsync;
    for (Index p = 0; p < nf; ++p) {
        if (group_mass(p) <= tol::prob_zero)
            throw NotSynchronized("no word of length " + std::to_string(horizon) +
                                  " synchronizes to forward state " + fwd.states[p]);
        ch.table.col(p) = acc.col(p) / group_mass(p);
        for (const auto& [w, belief] : samples[p])
            ch.max_disagreement = std::max(
                ch.max_disagreement, (belief - ch.table.col(p)).cwiseAbs().maxCoeff());
    }
    return ch;
}

// Finest partition of the reverse states closed under Pr_E(s'|s) > 0, where
// Pr_E composes the channel with itself through the forward stationary law.
inline Partition ergodic_partition(const StateChannel& channel, const RVec& fwd_stationary,
                                   const RVec& rev_stationary) {
    const Index nr = channel.table.rows(), nf = channel.table.cols();
    if (fwd_stationary.size() != nf || rev_stationary.size() != nr)
        throw DimensionMismatch("stationary vectors do not match channel dimensions");
    for (Index p = 0; p < nf; ++p)
        if (std::abs(channel.table.col(p).sum() - 1.0) > tol::channel_column)
            throw ValidationError("channel column " + std::to_string(p) + " not normalized");

    RMat e = RMat::Zero(nr, nr);
    for (Index s = 0; s < nr; ++s)
        for (Index sp = 0; sp < nr; ++sp)
            for (Index p = 0; p < nf; ++p)
                e(sp, s) += channel.table(s, p) * channel.table(sp, p) * fwd_stationary(p) /
                            rev_stationary(s);

    std::vector<Index> comp(nr, -1);
    Index next = 0;
    for (Index s = 0; s < nr; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = next;
        std::vector<Index> stack{s};
        while (!stack.empty()) {
            Index u = stack.back();
            stack.pop_back();
            for (Index v = 0; v < nr; ++v)
                if (comp[v] < 0 && (e(u, v) > tol::support_edge || e(v, u) > tol::support_edge)) {
                    comp[v] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    return Partition::from_block_of(std::move(comp)).canonical();
}

}  // namespace ratchetlab
