#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ratchetlab/errors.hpp"
#include "ratchetlab/linalg.hpp"
#include "ratchetlab/tolerances.hpp"

namespace ratchetlab {

// A labeled stochastic transition family over finite states and symbols.
// transitions[x](to, from) = Pr(to, symbol x | from); the family is jointly
// column-stochastic and the total matrix is irreducible for valid machines.
// Machines are immutable values after construction; every operation below is
// a pure function.
struct Machine {
    std::vector<std::string> states;
    std::vector<std::string> alphabet;
    std::vector<RMat> transitions;

    Index state_count() const { return static_cast<Index>(states.size()); }
    Index symbol_count() const { return static_cast<Index>(alphabet.size()); }

    RMat total() const {
        RMat t = RMat::Zero(state_count(), state_count());
        for (const RMat& m : transitions) t += m;
        return t;
    }

    Index state_index(const std::string& name) const {
        auto it = std::find(states.begin(), states.end(), name);
        return it == states.end() ? Index(-1) : Index(it - states.begin());
    }
    Index symbol_index(const std::string& name) const {
        auto it = std::find(alphabet.begin(), alphabet.end(), name);
        return it == alphabet.end() ? Index(-1) : Index(it - alphabet.begin());
    }
};

// Symbol-index sequence x_1 ... x_t.
using Word = std::vector<Index>;

using StationaryDist = RVec;

inline Word make_word(const Machine& m, const std::vector<std::string>& symbols) {
    Word w;
    w.reserve(symbols.size());
    for (const auto& s : symbols) {
        Index i = m.symbol_index(s);
        if (i < 0) throw UnknownSymbol("symbol '" + s + "' not in alphabet");
        w.push_back(i);
    }
    return w;
}

struct ValidationReport {
    std::vector<std::string> violations;
    RVec column_residuals;  // |column mass - 1| per state
    bool irreducible = false;
    bool ok() const { return violations.empty(); }
};

namespace detail {

// Strong connectivity of the support digraph (edge from -> to when some
// symbol carries positive probability).
inline bool strongly_connected(const RMat& total) {
    const Index n = total.rows();
    if (n == 0) return false;
    auto reach = [&](bool transpose) {
        std::vector<char> seen(n, 0);
        std::vector<Index> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            Index u = stack.back();
            stack.pop_back();
            for (Index v = 0; v < n; ++v) {
                double w = transpose ? total(u, v) : total(v, u);
                if (w > tol::prob_zero && !seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    return reach(false) && reach(true);
}

inline void check_word(const Machine& m, const Word& w) {
    for (Index x : w)
        if (x < 0 || x >= m.symbol_count())
            throw UnknownSymbol("symbol index " + std::to_string(x) + " out of range");
}

inline void check_cap(std::uint64_t required, std::uint64_t cap) {
    if (required > cap) throw EnumerationCapExceeded(required, cap);
}

// words of length t as integers: code = sum x_i * n_symbols^(i-1), x_1 least
// significant.
inline Word decode_word(std::uint64_t code, int t, Index n_symbols) {
    Word w(t);
    for (int i = 0; i < t; ++i) {
        w[i] = static_cast<Index>(code % n_symbols);
        code /= n_symbols;
    }
    return w;
}

inline std::uint64_t pow_u64(std::uint64_t base, int exp) {
    std::uint64_t r = 1;
    while (exp-- > 0) r *= base;
    return r;
}

}  // namespace detail

inline ValidationReport validate(const Machine& m) {
    ValidationReport rep;
    const Index n = m.state_count();
    const Index k = m.symbol_count();
    rep.column_residuals = RVec::Zero(std::max<Index>(n, 1));
    if (n == 0) rep.violations.push_back("machine has no states");
    if (k == 0) rep.violations.push_back("machine has no symbols");
    if (static_cast<Index>(m.transitions.size()) != k)
        rep.violations.push_back("transition matrix count does not match alphabet");
    if (!rep.violations.empty()) return rep;

    for (Index x = 0; x < k; ++x) {
        const RMat& t = m.transitions[x];
        if (t.rows() != n || t.cols() != n) {
            rep.violations.push_back("transition matrix for symbol '" + m.alphabet[x] +
                                     "' has wrong shape");
            return rep;
        }
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) {
                double v = t(i, j);
                if (v < -tol::prob_zero || v > 1 + tol::column_stochastic)
                    rep.violations.push_back("entry Pr(" + m.states[i] + ",'" +
                                             m.alphabet[x] + "'|" + m.states[j] +
                                             ") = " + std::to_string(v) +
                                             " outside [0,1]");
            }
    }
    RMat total = m.total();
    for (Index j = 0; j < n; ++j) {
        double mass = total.col(j).sum();
        rep.column_residuals(j) = std::abs(mass - 1.0);
        if (rep.column_residuals(j) > tol::column_stochastic)
            rep.violations.push_back("column " + m.states[j] + " not stochastic (mass " +
                                     std::to_string(mass) + ")");
    }
    rep.irreducible = detail::strongly_connected(total);
    if (!rep.irreducible) rep.violations.push_back("not irreducible");
    return rep;
}

inline void require_valid(const Machine& m) {
    ValidationReport rep = validate(m);
    if (!rep.ok()) throw ValidationError("invalid machine: " + rep.violations.front());
}

// Unique fixed point of the total matrix. Power iteration on the lazy map
// (T + I)/2, which shares the fixed point and converges for periodic chains.
inline StationaryDist stationary_distribution(const Machine& m) {
    require_valid(m);
    const Index n = m.state_count();
    RMat total = m.total();
    RVec v = RVec::Constant(n, 1.0 / double(n));
    double residual = (total * v - v).cwiseAbs().maxCoeff();
    double best = residual;
    int stalled = 0;
    for (std::uint64_t it = 0; it < tol::stationary_iter_cap; ++it) {
        v = 0.5 * (total * v + v);
        v /= v.sum();
        residual = (total * v - v).cwiseAbs().maxCoeff();
        if (residual < best) {
            best = residual;
            stalled = 0;
        } else if (residual <= tol::stationary_target && ++stalled > 50) {
            break;  // target met and no further progress
        }
        if (residual <= 1e-16) break;
    }
    if (residual > tol::stationary_accept)
        throw NonConvergence("stationary distribution did not converge", residual);
    if (v.minCoeff() <= 0)
        throw NonConvergence("stationary distribution has nonpositive mass", v.minCoeff());
    return v;
}

inline double word_probability(const Machine& m, const Word& w,
                               const StationaryDist& pi) {
    detail::check_word(m, w);
    RVec v = pi;
    for (Index x : w) v = m.transitions[x] * v;
    return v.sum();
}

inline double word_probability(const Machine& m, const Word& w) {
    return word_probability(m, w, stationary_distribution(m));
}

// Exact joint table Pr(x_1..x_t, s_t) by forward filtering over all words.
// Row per word code, column per state.
struct JointWordState {
    int t = 0;
    Index n_symbols = 0;
    Index n_states = 0;
    RMat table;  // (n_symbols^t) x n_states

    std::uint64_t word_count() const { return static_cast<std::uint64_t>(table.rows()); }
    double prob(std::uint64_t word_code, Index s) const {
        return table(static_cast<Index>(word_code), s);
    }
    RVec word_marginal() const { return table.rowwise().sum(); }
    RVec state_marginal() const { return table.colwise().sum(); }
    Word word(std::uint64_t code) const { return detail::decode_word(code, t, n_symbols); }
};

inline JointWordState joint_word_state(const Machine& m, int t,
                                       std::uint64_t cap = tol::enumeration_cap()) {
    require_valid(m);
    const Index n = m.state_count();
    const Index k = m.symbol_count();
    std::uint64_t n_words = detail::pow_u64(k, t);
    detail::check_cap(n_words * n, cap);

    JointWordState js;
    js.t = t;
    js.n_symbols = k;
    js.n_states = n;
    RVec pi = stationary_distribution(m);
    RMat cur(1, n);
    cur.row(0) = pi.transpose();
    for (int level = 0; level < t; ++level) {
        RMat next(cur.rows() * k, n);
        for (Index code = 0; code < cur.rows(); ++code)
            for (Index x = 0; x < k; ++x)
                next.row(code + x * cur.rows()) =
                    (m.transitions[x] * cur.row(code).transpose()).transpose();
        cur = std::move(next);
    }
    js.table = std::move(cur);
    return js;
}

// Reverse every edge, reweighting by pi(target)/pi(source); the result is
// column-stochastic and generates the reversed process.
inline Machine time_reverse(const Machine& m) {
    StationaryDist pi = stationary_distribution(m);
    Machine rev;
    rev.states = m.states;
    rev.alphabet = m.alphabet;
    rev.transitions.resize(m.transitions.size());
    const Index n = m.state_count();
    for (Index x = 0; x < m.symbol_count(); ++x) {
        RMat r = RMat::Zero(n, n);
        for (Index to = 0; to < n; ++to)
            for (Index from = 0; from < n; ++from)
                r(from, to) = pi(from) * m.transitions[x](to, from) / pi(to);
        rev.transitions[x] = r;
    }
    // Exact column mass is (T pi)(v) / pi(v); divide out the solver residual.
    RVec mass = RVec::Zero(n);
    for (const RMat& r : rev.transitions) mass += r.colwise().sum().transpose();
    for (RMat& r : rev.transitions) r *= mass.cwiseInverse().asDiagonal();
    return rev;
}

// Unifilarity/co-unifilarity verdicts carry the transition function when the
// predicate holds: f(s, x) = unique successor (unifilar) or f(s', x) = unique
// predecessor (co-unifilar); -1 where no edge exists.
struct DeterminismResult {
    bool holds = false;
    Eigen::MatrixXi f;  // states x symbols
};

inline DeterminismResult unifilar(const Machine& m) {
    const Index n = m.state_count(), k = m.symbol_count();
    DeterminismResult r{true, Eigen::MatrixXi::Constant(n, k, -1)};
    for (Index s = 0; s < n; ++s)
        for (Index x = 0; x < k; ++x)
            for (Index to = 0; to < n; ++to)
                if (m.transitions[x](to, s) > tol::prob_zero) {
                    if (r.f(s, x) >= 0) r.holds = false;
                    else r.f(s, x) = static_cast<int>(to);
                }
    return r;
}

inline DeterminismResult counifilar(const Machine& m) {
    const Index n = m.state_count(), k = m.symbol_count();
    DeterminismResult r{true, Eigen::MatrixXi::Constant(n, k, -1)};
    for (Index to = 0; to < n; ++to)
        for (Index x = 0; x < k; ++x)
            for (Index s = 0; s < n; ++s)
                if (m.transitions[x](to, s) > tol::prob_zero) {
                    if (r.f(to, x) >= 0) r.holds = false;
                    else r.f(to, x) = static_cast<int>(s);
                }
    return r;
}

inline bool is_unifilar(const Machine& m) { return unifilar(m).holds; }
inline bool is_counifilar(const Machine& m) { return counifilar(m).holds; }

// Emission distribution Pr(x | s) as a (symbols x states) table.
inline RMat emission_table(const Machine& m) {
    RMat e(m.symbol_count(), m.state_count());
    for (Index x = 0; x < m.symbol_count(); ++x)
        e.row(x) = m.transitions[x].colwise().sum();
    return e;
}

}  // namespace ratchetlab
