#pragma once

#include <random>

#include "ratchetlab/machine.hpp"
#include "ratchetlab/quantum.hpp"

// Seeded generators for property tests and the petz-check command. Everything
// randomized in the artifact flows through an explicit engine so runs are
// reproducible from a --seed flag.

namespace ratchetlab {

inline Mat random_gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = Cplx(g(rng), g(rng));
    return m;
}

inline Mat random_unitary(Index dim, std::mt19937_64& rng) {
    Eigen::HouseholderQR<Mat> qr(random_gaussian(dim, dim, rng));
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < dim; ++i) {
        Cplx d = r(i, i);
        q.col(i) *= std::abs(d) > 0 ? d / std::abs(d) : Cplx(1, 0);
    }
    return q;
}

inline DensityOperator random_density(Index dim, std::mt19937_64& rng) {
    Mat g = random_gaussian(dim, dim, rng);
    Mat rho = g * g.adjoint();
    return {rho / rho.trace().real()};
}

inline KrausChannel random_channel(Index dim, int n_kraus, std::mt19937_64& rng) {
    std::vector<Mat> raw;
    Mat acc = Mat::Zero(dim, dim);
    for (int i = 0; i < n_kraus; ++i) {
        raw.push_back(random_gaussian(dim, dim, rng));
        acc += raw.back().adjoint() * raw.back();
    }
    Mat norm = matrix_invsqrt_psd(acc);
    for (Mat& k : raw) k = k * norm;
    return make_channel(std::move(raw));
}

inline Machine random_machine(Index n_states, Index n_symbols, std::mt19937_64& rng) {
    std::exponential_distribution<double> exp_draw(1.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
        Machine m;
        for (Index s = 0; s < n_states; ++s) m.states.push_back("s" + std::to_string(s));
        for (Index x = 0; x < n_symbols; ++x) m.alphabet.push_back(std::to_string(x));
        m.transitions.assign(n_symbols, RMat::Zero(n_states, n_states));
        for (Index from = 0; from < n_states; ++from) {
            double mass = 0.0;
            for (Index x = 0; x < n_symbols; ++x)
                for (Index to = 0; to < n_states; ++to) {
                    double w = exp_draw(rng);
                    m.transitions[x](to, from) = w;
                    mass += w;
                }
            for (Index x = 0; x < n_symbols; ++x) m.transitions[x].col(from) /= mass;
        }
        if (validate(m).ok()) return m;
    }
    throw ConstructionError("failed to draw a valid random machine");
}

// Random unifilar machine: each (state, symbol) pair gets one successor and
// each state a random emission distribution.
inline Machine random_unifilar_machine(Index n_states, Index n_symbols,
                                       std::mt19937_64& rng) {
    std::uniform_int_distribution<Index> pick(0, n_states - 1);
    std::exponential_distribution<double> exp_draw(1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Machine m;
        for (Index s = 0; s < n_states; ++s) m.states.push_back("s" + std::to_string(s));
        for (Index x = 0; x < n_symbols; ++x) m.alphabet.push_back(std::to_string(x));
        m.transitions.assign(n_symbols, RMat::Zero(n_states, n_states));
        for (Index from = 0; from < n_states; ++from) {
            RVec emission(n_symbols);
            for (Index x = 0; x < n_symbols; ++x) emission(x) = exp_draw(rng);
            emission /= emission.sum();
            for (Index x = 0; x < n_symbols; ++x)
                m.transitions[x](pick(rng), from) = emission(x);
        }
        if (validate(m).ok()) return m;
    }
    throw ConstructionError("failed to draw a valid unifilar machine");
}

// Random co-unifilar machine: each (next state, symbol) pair is assigned one
// predecessor, then each column's surviving edges get random weights.
inline Machine random_counifilar_machine(Index n_states, Index n_symbols,
                                         std::mt19937_64& rng) {
    std::uniform_int_distribution<Index> pick(0, n_states - 1);
    std::exponential_distribution<double> exp_draw(1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Machine m;
        for (Index s = 0; s < n_states; ++s) m.states.push_back("s" + std::to_string(s));
        for (Index x = 0; x < n_symbols; ++x) m.alphabet.push_back(std::to_string(x));
        m.transitions.assign(n_symbols, RMat::Zero(n_states, n_states));
        std::vector<double> column_mass(n_states, 0.0);
        for (Index to = 0; to < n_states; ++to)
            for (Index x = 0; x < n_symbols; ++x) {
                Index from = pick(rng);
                double w = exp_draw(rng);
                m.transitions[x](to, from) = w;
                column_mass[from] += w;
            }
        bool full = std::all_of(column_mass.begin(), column_mass.end(),
                                [](double v) { return v > 0; });
        if (!full) continue;
        for (Index x = 0; x < n_symbols; ++x)
            for (Index from = 0; from < n_states; ++from)
                if (column_mass[from] > 0) m.transitions[x].col(from) /= column_mass[from];
        if (validate(m).ok()) return m;
    }
    throw ConstructionError("failed to draw a valid co-unifilar machine");
}

}  // namespace ratchetlab
