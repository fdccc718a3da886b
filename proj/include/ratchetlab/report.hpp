#pragma once

#include <cstdio>
#include <string>

#include "ratchetlab/json_io.hpp"

namespace ratchetlab::io {

inline constexpr const char* tool_version = "0.1.0";

// Physical display scale for dissipation entries: k_B T ln 2 joules per bit.
inline constexpr double boltzmann_joule_per_kelvin = 1.380649e-23;
inline double joules_per_bit(double temperature_kelvin) {
    return boltzmann_joule_per_kelvin * temperature_kelvin * std::log(2.0);
}

inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

struct AnalysisOptions {
    int t_max = 6;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::uint64_t cap = tol::enumeration_cap();
    std::string input_name;
    std::string input_bytes;  // hashed into provenance
};

namespace detail_report {
inline json num(double value, double tolerance) {
    return {{"value", value}, {"tolerance", tolerance}};
}
}  // namespace detail_report

inline json verdict_to_json(const QuantumEfficiencyVerdict& v, const Machine& source) {
    using detail_report::num;
    return {{"efficient", v.efficient},
            {"mcp_trivially_maximal", v.mcp_trivially_maximal},
            {"merged_deterministic", v.merged_deterministic},
            {"mcp", partition_to_json(v.mcp_partition, source.states)},
            {"max_dissipation", num(v.max_dissipation, tol::dissipation_zero)},
            {"cross_check_t", v.cross_check_t}};
}

inline json memory_to_json(const MemoryMetrics& mm) {
    using detail_report::num;
    json renyi = json::array();
    for (auto [alpha, h] : mm.renyi)
        renyi.push_back({{"alpha", std::isinf(alpha) ? json("inf") : json(alpha)},
                         {"bits", num(h, tol::dissipation_zero)}});
    return {{"log2_size", mm.log2_size}, {"renyi", renyi}};
}

// Full pipeline report for one machine: validation, structure, classical
// verdicts, and the quantum constructions derived from the process.
inline json build_analysis_report(const Machine& m, const AnalysisOptions& opt) {
    using detail_report::num;
    json j;
    j["machine"] = {{"name", opt.input_name},
                    {"states", m.states},
                    {"alphabet", m.alphabet},
                    {"state_count", m.state_count()},
                    {"symbol_count", m.symbol_count()}};

    ValidationReport rep = validate(m);
    j["validation"] = {{"ok", rep.ok()},
                       {"violations", rep.violations},
                       {"irreducible", rep.irreducible},
                       {"max_column_residual",
                        num(rep.column_residuals.maxCoeff(), tol::column_stochastic)}};
    if (!rep.ok()) return j;  // nothing else is defined for invalid machines

    j["predicates"] = {{"unifilar", is_unifilar(m)}, {"counifilar", is_counifilar(m)}};
    j["partitions"] = {
        {"retrodictive", partition_to_json(retrodictive_partition(m), m.states)},
        {"predictive", partition_to_json(predictive_partition(m), m.states)}};

    EntropyRate rate = entropy_rate(m, opt.cap);
    j["entropy_rate"] = {{"bits_per_symbol", num(rate.bits_per_symbol, 1e-6)},
                         {"method", rate.closed_form ? "unifilar-closed-form"
                                                     : "block-difference"},
                         {"block_t", rate.block_t}};

    EfficiencyVerdict cls = classify_efficiency(m);
    DissipationTrace ct = classical_dissipation(m, opt.t_max, opt.cap);
    json classical = {{"efficient", cls.efficient},
                      {"merged_states", cls.merged.states},
                      {"max_delta_s_loc", num(ct.max_delta(), tol::dissipation_zero)},
                      {"trace", trace_to_json(ct, tol::dissipation_zero)},
                      {"is_retrodictor", is_retrodictor(m, std::min(opt.t_max, 6), opt.cap)}};
    if (cls.witness) {
        classical["witness"] = {
            {"block", cls.merged.states[cls.witness->block]},
            {"symbol", cls.merged.alphabet[cls.witness->symbol]},
            {"predecessors", [&] {
                 json preds = json::array();
                 for (Index s : cls.witness->predecessors)
                     preds.push_back(cls.merged.states[s]);
                 return preds;
             }()}};
    }
    j["classical"] = classical;
    j["memory"] = {{"classical", memory_to_json(memory_metrics(m))}};

    auto quantum_section = [&](bool forward) -> json {
        try {
            Machine em = forward ? forward_epsilon_machine(m) : reverse_epsilon_machine(m);
            PhaseTable phases = PhaseTable::zeros(em.symbol_count(), em.state_count());
            QMachine qm = forward ? build_qmachine(em, phases)
                                  : build_reverse_qmachine(em, phases);
            QuantumEfficiencyVerdict v = forward
                                   ? check_forward_efficiency(qm, opt.t_max, opt.cap)
                                   : check_reverse_efficiency(qm, opt.t_max, opt.cap);
            DissipationTrace qt = quantum_dissipation(qm, opt.t_max, opt.cap, opt.threads);
            double h_pi = shannon_entropy(stationary_distribution(em));
            double h_rho = von_neumann_entropy(DensityOperator{qm.rho_pi});
            return {{"applicable", true},
                    {"machine_states", em.states},
                    {"dimension", qm.dim()},
                    {"rank", qm.rank()},
                    {"state_entropy_bits", num(h_pi, tol::dissipation_zero)},
                    {"stationary_entropy_bits", num(h_rho, tol::dissipation_zero)},
                    {"compression_bits", num(h_pi - h_rho, 1e-6)},
                    {"verdict", verdict_to_json(v, em)},
                    {"trace", trace_to_json(qt, tol::dissipation_zero)},
                    {"memory", memory_to_json(memory_metrics(qm))}};
        } catch (const Error& e) {
            return {{"applicable", false}, {"reason", e.what()}};
        }
    };
    j["forward_quantum"] = quantum_section(true);
    j["reverse_quantum"] = quantum_section(false);

    j["provenance"] = {
        {"tool", "ratchetlab"},
        {"version", tool_version},
        {"input_hash", fnv1a_hex(opt.input_bytes)},
        {"seed", opt.seed},
        {"t_max", opt.t_max},
        {"enumeration_cap", opt.cap},
        {"tolerances",
         {{"column_stochastic", tol::column_stochastic},
          {"stationary_accept", tol::stationary_accept},
          {"word_match", tol::word_match},
          {"dissipation_zero", tol::dissipation_zero},
          {"overlap_residual", tol::overlap_residual},
          {"support_edge", tol::support_edge},
          {"completeness", tol::completeness}}}};
    return j;
}

}  // namespace ratchetlab::io
