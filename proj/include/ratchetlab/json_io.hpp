#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ratchetlab/qmachine.hpp"

namespace ratchetlab::io {

using nlohmann::json;

// -------- machine files --------
// {"states": [...], "alphabet": [...],
//  "transitions": [{"from": s, "symbol": x, "to": s2, "prob": p}, ...]}
// Unlisted triples are zero; duplicate triples are an error.

inline Machine machine_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("machine file must be a JSON object");
    for (const char* key : {"states", "alphabet", "transitions"})
        if (!j.contains(key))
            throw ParseError(std::string("machine file missing field '") + key + "'");

    Machine m;
    for (const auto& s : j.at("states")) {
        if (!s.is_string()) throw ParseError("states must be strings");
        m.states.push_back(s.get<std::string>());
    }
    for (const auto& x : j.at("alphabet")) {
        if (!x.is_string()) throw ParseError("alphabet entries must be strings");
        m.alphabet.push_back(x.get<std::string>());
    }
    if (m.states.empty() || m.alphabet.empty())
        throw ParseError("states and alphabet must be nonempty");
    m.transitions.assign(m.symbol_count(), RMat::Zero(m.state_count(), m.state_count()));

    std::set<std::tuple<Index, Index, Index>> seen;
    std::size_t entry = 0;
    for (const auto& t : j.at("transitions")) {
        ++entry;
        auto context = [&](const std::string& what) {
            return ParseError("transitions[" + std::to_string(entry - 1) + "]: " + what);
        };
        for (const char* key : {"from", "symbol", "to", "prob"})
            if (!t.contains(key)) throw context(std::string("missing field '") + key + "'");
        Index from = m.state_index(t.at("from").get<std::string>());
        Index to = m.state_index(t.at("to").get<std::string>());
        Index sym = m.symbol_index(t.at("symbol").get<std::string>());
        if (from < 0) throw context("unknown state '" + t.at("from").get<std::string>() + "'");
        if (to < 0) throw context("unknown state '" + t.at("to").get<std::string>() + "'");
        if (sym < 0) throw context("unknown symbol '" + t.at("symbol").get<std::string>() + "'");
        if (!t.at("prob").is_number()) throw context("prob must be a number");
        if (!seen.insert({from, sym, to}).second)
            throw context("duplicate triple (" + t.at("from").get<std::string>() + ", '" +
                          t.at("symbol").get<std::string>() + "', " +
                          t.at("to").get<std::string>() + ")");
        m.transitions[sym](to, from) = t.at("prob").get<double>();
    }
    return m;
}

inline json machine_to_json(const Machine& m) {
    json j;
    j["states"] = m.states;
    j["alphabet"] = m.alphabet;
    json trans = json::array();
    for (Index x = 0; x < m.symbol_count(); ++x)
        for (Index from = 0; from < m.state_count(); ++from)
            for (Index to = 0; to < m.state_count(); ++to)
                if (m.transitions[x](to, from) != 0.0)
                    trans.push_back({{"from", m.states[from]},
                                     {"symbol", m.alphabet[x]},
                                     {"to", m.states[to]},
                                     {"prob", m.transitions[x](to, from)}});
    j["transitions"] = trans;
    return j;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("parse error in '" + path + "': " + e.what());
    }
}

inline Machine load_machine(const std::string& path) {
    return machine_from_json(load_json_file(path));
}

inline void save_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

// -------- partitions and channels --------

inline json partition_to_json(const Partition& p, const std::vector<std::string>& names) {
    json blocks = json::array();
    for (const auto& block : p.blocks) {
        json b = json::array();
        for (Index s : block) b.push_back(names[s]);
        blocks.push_back(b);
    }
    return {{"blocks", blocks}};
}

inline json channel_to_json(const StateChannel& ch) {
    json rows = json::array();
    for (Index r = 0; r < ch.table.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < ch.table.cols(); ++c) row.push_back(ch.table(r, c));
        rows.push_back(row);
    }
    return {{"rows", ch.row_labels},
            {"cols", ch.col_labels},
            {"table", rows},
            {"max_disagreement", ch.max_disagreement},
            {"unsynchronized_mass", ch.unsynchronized_mass}};
}

// -------- complex matrices: nested arrays of [re, im] --------

inline json complex_matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c)
            row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

inline Mat complex_matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ParseError("matrix must be a nonempty array");
    Index rows = static_cast<Index>(j.size());
    Index cols = static_cast<Index>(j.at(0).size());
    Mat m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        if (static_cast<Index>(j.at(r).size()) != cols)
            throw ParseError("matrix rows have mixed lengths");
        for (Index c = 0; c < cols; ++c) {
            const json& cell = j.at(r).at(c);
            if (!cell.is_array() || cell.size() != 2)
                throw ParseError("matrix entries must be [re, im] pairs");
            m(r, c) = Cplx(cell.at(0).get<double>(), cell.at(1).get<double>());
        }
    }
    return m;
}

// -------- phase tables --------
// {"phases": [{"symbol": x, "state": s, "value": radians}, ...]}

inline PhaseTable phase_table_from_json(const json& j, const Machine& m) {
    PhaseTable p = PhaseTable::zeros(m.symbol_count(), m.state_count());
    if (!j.contains("phases")) throw ParseError("phase file missing field 'phases'");
    for (const auto& e : j.at("phases")) {
        Index x = m.symbol_index(e.at("symbol").get<std::string>());
        Index s = m.state_index(e.at("state").get<std::string>());
        if (x < 0 || s < 0) throw ParseError("phase entry names unknown state or symbol");
        p.phi(x, s) = e.at("value").get<double>();
    }
    return p;
}

inline json phase_table_to_json(const PhaseTable& p, const Machine& m) {
    json entries = json::array();
    for (Index x = 0; x < p.phi.rows(); ++x)
        for (Index s = 0; s < p.phi.cols(); ++s)
            if (p.phi(x, s) != 0.0)
                entries.push_back({{"symbol", m.alphabet[x]},
                                   {"state", m.states[s]},
                                   {"value", p.phi(x, s)}});
    return {{"phases", entries}};
}

// -------- q-machines --------

inline json qmachine_to_json(const QMachine& qm) {
    json j;
    j["kind"] = qm.kind == QKind::forward ? "forward" : "reverse";
    j["source"] = machine_to_json(qm.source);
    j["phases"] = phase_table_to_json(qm.phases, qm.source);
    j["encodings"] = complex_matrix_to_json(qm.encodings);
    json kraus = json::array();
    for (const Mat& k : qm.kraus) kraus.push_back(complex_matrix_to_json(k));
    j["kraus"] = kraus;
    j["rho_pi"] = complex_matrix_to_json(qm.rho_pi);
    j["omega"] = complex_matrix_to_json(qm.omega);
    j["borderline_spectrum"] = qm.borderline_spectrum;
    return j;
}

inline QMachine qmachine_from_json(const json& j) {
    QMachine qm;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "forward") qm.kind = QKind::forward;
    else if (kind == "reverse") qm.kind = QKind::reverse;
    else throw ParseError("q-machine kind must be 'forward' or 'reverse'");
    qm.source = machine_from_json(j.at("source"));
    require_valid(qm.source);
    qm.phases = phase_table_from_json(j.at("phases"), qm.source);
    qm.encodings = complex_matrix_from_json(j.at("encodings"));
    for (const auto& k : j.at("kraus")) qm.kraus.push_back(complex_matrix_from_json(k));
    qm.rho_pi = complex_matrix_from_json(j.at("rho_pi"));
    qm.omega = complex_matrix_from_json(j.at("omega"));
    if (j.contains("borderline_spectrum"))
        qm.borderline_spectrum = j.at("borderline_spectrum").get<std::vector<double>>();
    qm.pi = stationary_distribution(qm.source);
    qm.lambda = hermitian_eig(qm.rho_pi).values.reverse();
    verify_qmachine(qm);
    return qm;
}

// -------- dissipation traces --------

inline json trace_to_json(const DissipationTrace& tr, double tolerance) {
    json records = json::array();
    for (const auto& r : tr.records)
        records.push_back({{"t", r.t},
                           {"info_state_past_bits", r.info_state_past},
                           {"info_next_past_bits", r.info_next_past},
                           {"delta_s_loc", {{"value", r.delta_s_loc},
                                            {"tolerance", tolerance},
                                            {"unit", "bits"}}}});
    return records;
}

inline std::string trace_to_csv(const DissipationTrace& tr) {
    std::ostringstream out;
    out << "t,info_state_past_bits,info_next_past_bits,delta_s_loc_bits\n";
    out.precision(17);
    for (const auto& r : tr.records)
        out << r.t << "," << r.info_state_past << "," << r.info_next_past << ","
            << r.delta_s_loc << "\n";
    return out.str();
}

}  // namespace ratchetlab::io
