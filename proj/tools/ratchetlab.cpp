// ratchetlab command-line tool: analyze stochastic generators, build their
// quantum implementations, and run the supporting transformations.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ratchetlab/json_io.hpp"
#include "ratchetlab/random.hpp"
#include "ratchetlab/report.hpp"

using namespace ratchetlab;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_internal = 1;
constexpr int exit_invalid_input = 2;
constexpr int exit_precondition = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        io::save_json(j, out_path);
        std::cerr << "wrote " << out_path << "\n";
    }
}

void emit_text(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) throw Error("cannot write '" + out_path + "'");
        out << text;
        std::cerr << "wrote " << out_path << "\n";
    }
}

Machine load_and_validate(const std::string& path) {
    Machine m = io::load_machine(path);
    ValidationReport rep = validate(m);
    if (!rep.ok()) {
        std::string what = "invalid machine '" + path + "':";
        for (const auto& v : rep.violations) what += "\n  - " + v;
        throw ValidationError(what);
    }
    return m;
}

std::string render_text_report(const json& j, double temperature) {
    std::ostringstream out;
    out.precision(9);
    out << "machine: " << j["machine"]["name"].get<std::string>() << "  (states "
        << j["machine"]["state_count"] << ", symbols " << j["machine"]["symbol_count"]
        << ")\n";
    out << "valid: " << (j["validation"]["ok"].get<bool>() ? "yes" : "no") << "\n";
    if (!j["validation"]["ok"].get<bool>()) {
        for (const auto& v : j["validation"]["violations"])
            out << "  violation: " << v.get<std::string>() << "\n";
        return out.str();
    }
    out << "unifilar: " << (j["predicates"]["unifilar"].get<bool>() ? "yes" : "no")
        << ", co-unifilar: "
        << (j["predicates"]["counifilar"].get<bool>() ? "yes" : "no") << "\n";
    out << "entropy rate: "
        << j["entropy_rate"]["bits_per_symbol"]["value"].get<double>()
        << " bits/symbol (" << j["entropy_rate"]["method"].get<std::string>() << ")\n";

    auto scale_note = [&](double bits) {
        std::ostringstream s;
        s << bits << " bits";
        if (temperature > 0)
            s << " = " << bits * io::joules_per_bit(temperature) << " J at " << temperature
              << " K";
        return s.str();
    };
    const json& cls = j["classical"];
    out << "classical verdict: "
        << (cls["efficient"].get<bool>() ? "efficient" : "inefficient")
        << ", max dissipation "
        << scale_note(cls["max_delta_s_loc"]["value"].get<double>()) << "\n";
    if (cls.contains("witness"))
        out << "  witness: block " << cls["witness"]["block"].get<std::string>()
            << " on symbol '" << cls["witness"]["symbol"].get<std::string>()
            << "' has " << cls["witness"]["predecessors"].size() << " predecessors\n";
    for (const char* key : {"forward_quantum", "reverse_quantum"}) {
        const json& q = j[key];
        out << key << ": ";
        if (!q["applicable"].get<bool>()) {
            out << "not applicable (" << q["reason"].get<std::string>() << ")\n";
            continue;
        }
        out << (q["verdict"]["efficient"].get<bool>() ? "efficient" : "inefficient")
            << ", dim " << q["dimension"] << ", compression "
            << q["compression_bits"]["value"].get<double>() << " bits, max dissipation "
            << scale_note(q["verdict"]["max_dissipation"]["value"].get<double>()) << "\n";
    }
    return out.str();
}

struct CommonFlags {
    int t_max = 6;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string format = "text";
    double temperature = 0.0;
    std::string out;
};

int run(int argc, char** argv) {
    CLI::App app{"ratchetlab: thermodynamics of classical and quantum generators"};
    app.require_subcommand(1);
    CommonFlags flags;

    std::string path, phases_path, mode;
    bool reverse_kind = false;
    int max_len = 8;
    std::uint64_t count = 200;
    Index dim_min = 2, dim_max = 4;

    auto add_common = [&](CLI::App* cmd, bool with_tmax = true) {
        if (with_tmax) cmd->add_option("--t-max", flags.t_max, "trace horizon");
        cmd->add_option("--seed", flags.seed, "seed for randomized subroutines");
        cmd->add_option("--threads", flags.threads, "worker threads for enumerations");
        cmd->add_option("--format", flags.format, "text or json")
            ->check(CLI::IsMember({"text", "json"}));
        cmd->add_option("--temperature", flags.temperature,
                        "temperature in kelvin for joule conversion");
        cmd->add_option("-o,--out", flags.out, "output file (default stdout)");
    };

    std::string trace_csv;
    CLI::App* analyze = app.add_subcommand("analyze", "full report for a machine file");
    analyze->add_option("path", path, "machine JSON file")->required();
    analyze->add_option("--trace-csv", trace_csv,
                        "also write the classical dissipation trace as CSV");
    add_common(analyze);

    std::string qtrace_csv;
    CLI::App* qmachine = app.add_subcommand("qmachine", "build a (reverse) q-machine");
    qmachine->add_option("path", path, "machine JSON file")->required();
    qmachine->add_flag("--reverse", reverse_kind, "build the reverse q-machine");
    qmachine->add_option("--phases", phases_path, "phase table JSON file");
    qmachine->add_option("--trace-csv", qtrace_csv,
                         "also write the quantum dissipation trace as CSV");
    add_common(qmachine);

    CLI::App* merge_cmd = app.add_subcommand("merge", "state-merge a machine");
    merge_cmd->add_option("path", path, "machine JSON file")->required();
    merge_cmd->add_option("--mode", mode, "retrodictive or predictive")
        ->required()
        ->check(CLI::IsMember({"retrodictive", "predictive"}));
    add_common(merge_cmd, false);

    CLI::App* reverse_cmd = app.add_subcommand("reverse", "time-reverse a machine");
    reverse_cmd->add_option("path", path, "machine JSON file")->required();
    add_common(reverse_cmd, false);

    CLI::App* words = app.add_subcommand("words", "word distribution as CSV");
    words->add_option("path", path, "machine JSON file")->required();
    words->add_option("--max-len", max_len, "maximum word length")->required();
    add_common(words, false);

    CLI::App* em = app.add_subcommand("em", "construct an epsilon-machine");
    em->add_option("path", path, "machine JSON file")->required();
    em->add_option("--mode", mode, "forward or reverse")
        ->required()
        ->check(CLI::IsMember({"forward", "reverse"}));
    add_common(em, false);

    CLI::App* petz = app.add_subcommand(
        "petz-check", "data-processing/Petz-recovery self-test on random triples");
    petz->add_option("--count", count, "number of random triples");
    petz->add_option("--dim-min", dim_min, "smallest dimension");
    petz->add_option("--dim-max", dim_max, "largest dimension");
    add_common(petz, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);  // prints help or the usage error
        return rc == 0 ? exit_ok : exit_invalid_input;
    }

    if (analyze->parsed()) {
        io::AnalysisOptions opt;
        opt.t_max = flags.t_max;
        opt.seed = flags.seed;
        opt.threads = flags.threads;
        opt.input_name = path;
        opt.input_bytes = read_file(path);
        json parsed;
        try {
            parsed = json::parse(opt.input_bytes);
        } catch (const json::parse_error& e) {
            throw ParseError("parse error in '" + path + "': " + e.what());
        }
        Machine m = io::machine_from_json(parsed);
        ValidationReport rep = validate(m);
        json report = io::build_analysis_report(m, opt);
        if (flags.format == "json") emit(report, flags.out);
        else emit_text(render_text_report(report, flags.temperature), flags.out);
        if (!trace_csv.empty() && rep.ok())
            emit_text(io::trace_to_csv(classical_dissipation(m, flags.t_max, opt.cap)),
                      trace_csv);
        return rep.ok() ? exit_ok : exit_invalid_input;
    }

    if (qmachine->parsed()) {
        Machine m = load_and_validate(path);
        PhaseTable phases = PhaseTable::zeros(m.symbol_count(), m.state_count());
        if (!phases_path.empty())
            phases = io::phase_table_from_json(io::load_json_file(phases_path), m);
        QMachine qm = reverse_kind ? build_reverse_qmachine(m, phases)
                                   : build_qmachine(m, phases);
        QuantumEfficiencyVerdict v = reverse_kind ? check_reverse_efficiency(qm, flags.t_max)
                                        : check_forward_efficiency(qm, flags.t_max);
        double h_pi = shannon_entropy(stationary_distribution(m));
        double h_rho = von_neumann_entropy(DensityOperator{qm.rho_pi});
        json artifact = io::qmachine_to_json(qm);
        artifact["verdict"] = io::verdict_to_json(v, m);
        artifact["compression_bits"] = h_pi - h_rho;
        if (flags.format == "json" || !flags.out.empty()) {
            emit(artifact, flags.out);
        }
        if (flags.format == "text") {
            std::ostringstream out;
            out.precision(9);
            out << (reverse_kind ? "reverse q-machine" : "q-machine") << ": dim "
                << qm.dim() << ", compression " << (h_pi - h_rho) << " bits, "
                << (v.efficient ? "efficient" : "inefficient") << " (max dissipation "
                << v.max_dissipation << " bits at t <= " << v.cross_check_t << ")\n";
            std::cout << out.str();
        }
        if (!qtrace_csv.empty())
            emit_text(io::trace_to_csv(quantum_dissipation(qm, flags.t_max,
                                                           tol::enumeration_cap(),
                                                           flags.threads)),
                      qtrace_csv);
        return exit_ok;
    }

    if (merge_cmd->parsed()) {
        Machine m = load_and_validate(path);
        Partition p =
            mode == "retrodictive" ? retrodictive_partition(m) : predictive_partition(m);
        emit(io::machine_to_json(merge(m, p)), flags.out);
        return exit_ok;
    }

    if (reverse_cmd->parsed()) {
        Machine m = load_and_validate(path);
        emit(io::machine_to_json(time_reverse(m)), flags.out);
        return exit_ok;
    }

    if (words->parsed()) {
        Machine m = load_and_validate(path);
        StationaryDist pi = stationary_distribution(m);
        std::ostringstream out;
        out << "word,length,probability\n";
        out.precision(17);
        for (int t = 1; t <= max_len; ++t) {
            std::uint64_t n_words = detail::pow_u64(m.symbol_count(), t);
            if (n_words > tol::enumeration_cap())
                throw EnumerationCapExceeded(n_words, tol::enumeration_cap());
            for (std::uint64_t code = 0; code < n_words; ++code) {
                Word w = detail::decode_word(code, t, m.symbol_count());
                double p = word_probability(m, w, pi);
                if (p <= tol::prob_zero) continue;
                std::string text;
                for (Index x : w) text += m.alphabet[x];
                out << text << "," << t << "," << p << "\n";
            }
        }
        emit_text(out.str(), flags.out);
        return exit_ok;
    }

    if (em->parsed()) {
        Machine m = load_and_validate(path);
        Machine out = mode == "forward" ? forward_epsilon_machine(m)
                                        : reverse_epsilon_machine(m);
        emit(io::machine_to_json(out), flags.out);
        return exit_ok;
    }

    if (petz->parsed()) {
        std::mt19937_64 rng(flags.seed);
        std::uniform_int_distribution<Index> dims(dim_min, dim_max);
        double worst_dpi = 0.0, worst_fid = 0.0, worst_recover = 0.0;
        std::uint64_t saturated = 0;
        for (std::uint64_t i = 0; i < count; ++i) {
            Index d = dims(rng);
            KrausChannel ch = random_channel(d, 3, rng);
            DensityOperator rho = random_density(d, rng);
            DensityOperator sigma = random_density(d, rng);
            double before = relative_entropy(rho, sigma);
            double after = relative_entropy(apply(ch, rho), apply(ch, sigma));
            worst_dpi = std::max(worst_dpi, after - before);
            worst_fid = std::max(worst_fid, fidelity(rho, sigma) -
                                                fidelity(apply(ch, rho), apply(ch, sigma)));
            KrausChannel rec = petz_recovery(ch, sigma);
            worst_recover = std::max(
                worst_recover,
                trace_norm(apply_raw(rec, apply_raw(ch, sigma.mat)) - sigma.mat));
            if (dpi_saturation_check(rho, sigma, ch).saturated) ++saturated;
        }
        json result = {{"count", count},
                       {"seed", flags.seed},
                       {"max_dpi_violation", worst_dpi},
                       {"max_fidelity_violation", worst_fid},
                       {"max_recovery_error", worst_recover},
                       {"saturated_count", saturated},
                       {"pass", worst_dpi <= 1e-9 && worst_fid <= 1e-9 &&
                                    worst_recover <= 1e-9}};
        if (flags.format == "json") emit(result, flags.out);
        else
            emit_text("petz-check: " + std::string(result["pass"].get<bool>() ? "pass" : "FAIL") +
                          " (dpi " + std::to_string(worst_dpi) + ", fidelity " +
                          std::to_string(worst_fid) + ", recovery " +
                          std::to_string(worst_recover) + ")\n",
                      flags.out);
        return result["pass"].get<bool>() ? exit_ok : exit_internal;
    }
    return exit_internal;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_invalid_input;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_precondition;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_internal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
}
