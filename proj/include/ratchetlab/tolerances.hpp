#pragma once

#include <cstdint>
#include <cstdlib>

// Single tolerance policy for the whole library. Every module pulls its
// thresholds from here; nothing hard-codes a magic epsilon elsewhere.

namespace ratchetlab::tol {

// Machine algebra
inline constexpr double column_stochastic = 1e-12;  // per-column mass deviation
inline constexpr double prob_zero         = 1e-12;  // strict ">0" cutoff
inline constexpr double stationary_target = 1e-12;  // power-iteration residual goal
inline constexpr double stationary_accept = 1e-10;  // residual required to accept
inline constexpr double word_match        = 1e-9;   // process-equality comparisons
inline constexpr double joint_mass        = 1e-10;  // joint-table total mass

// Equivalence / partitions
inline constexpr double span_rank        = 1e-10;   // basis growth cutoff (relative)
inline constexpr double equiv_compare    = 1e-9;    // functional equality of states
inline constexpr double belief_coincide  = 1e-9;    // mixed-state coincidence (L-inf)
inline constexpr double support_edge     = 1e-9;    // ">0 only when" support graphs
inline constexpr double channel_column   = 1e-10;   // state-channel column mass
inline constexpr double synchronized     = 1e-6;    // forward belief mass for sync

// Information measures
inline constexpr double dissipation_zero = 1e-9;    // "vanishing" dissipation
inline constexpr double dpi_slack        = 1e-10;   // allowed negative DPI noise
inline constexpr double mi_equal         = 1e-10;   // mutual-information equality

// Quantum kernel
inline constexpr double hermitian     = 1e-10;
inline constexpr double psd           = 1e-10;      // eigenvalues >= -psd
inline constexpr double unit_trace    = 1e-10;
inline constexpr double completeness  = 1e-10;      // sum K'K = I deviation
inline constexpr double eig_clamp     = 1e-12;      // eigenvalue -> 0 in matrix funcs
inline constexpr double dpi_saturate  = 1e-8;
inline constexpr double petz_recover  = 1e-9;
inline constexpr double mlcm_gap      = 1e-9;       // generic-combination spectral gap
inline constexpr double adjoint_probe = 1e-10;

// q-machines
inline constexpr double overlap_step     = 1e-14;   // fixed-point successive diff
inline constexpr double overlap_residual = 1e-12;
inline constexpr double singular_cut     = 1e-10;   // kept singular values -> dim d
inline constexpr double qdyn             = 1e-10;   // Kraus action on encodings
inline constexpr double rho_invariance   = 1e-10;

// Iteration / enumeration limits
inline constexpr std::uint64_t stationary_iter_cap = 1000000;
inline constexpr std::uint64_t overlap_iter_cap    = 100000;
inline constexpr std::uint64_t default_enum_cap    = std::uint64_t(1) << 20;
inline constexpr std::size_t   belief_cap          = 256;
inline constexpr int           mlcm_retries        = 5;

// Enumeration cap, overridable through the environment (RATCHETLAB_CAP).
inline std::uint64_t enumeration_cap() {
    if (const char* env = std::getenv("RATCHETLAB_CAP")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return v;
    }
    return default_enum_cap;
}

}  // namespace ratchetlab::tol
