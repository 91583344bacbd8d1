// tglab: scenario runner for the transformation-group measure laboratory.
//   run            evaluate the equivalence battery for a scenario and k
//   list-scenarios print the builtin scenarios
//   validate       audit a scenario file (schema, action axioms, facts)
//   dump-scenario  print a builtin scenario as JSON
// Exit codes for run: 0 consistent, 2 refuted hypothesis, 3 contradiction/fault.

#include "tglab/harness.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

tglab::Scenario resolve_scenario(const std::string& ref) {
    namespace fs = std::filesystem;
    if (fs::exists(ref)) {
        std::ifstream in(ref, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read " + ref);
        std::ostringstream text;
        text << in.rdbuf();
        return tglab::load_scenario_json(text.str());
    }
    return tglab::builtin_scenario(ref);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transformation-group measure laboratory"};
    app.require_subcommand(1);

    std::string scenario_ref;
    int k = 1;
    tglab::RunConfig cfg;
    std::string format = "both";

    auto* run = app.add_subcommand("run", "run the equivalence battery");
    run->add_option("scenario", scenario_ref,
                    "builtin scenario name or path to a scenario JSON file")
        ->required();
    run->add_option("--k", k, "convergence multiplicity hypothesis under test")
        ->required();
    run->add_option("--step", cfg.step, "quadrature step override");
    run->add_option("--windows", cfg.window_radii,
                    "window exhaustion radii override (nested increasing)");
    run->add_option("--index-last", cfg.index_last, "last sequence index override");
    run->add_option("--fell-tol", cfg.fell_tol, "Fell certification tolerance");
    run->add_option("--fell-index-last", cfg.fell_index_last,
                    "last index for stabilizer certification");
    run->add_option("--epsilon", cfg.epsilon, "kernel-sum bound budget");
    run->add_option("--ratio-tol", cfg.ratio_tol, "ratio threshold margin");
    run->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
    run->add_option("--format", format, "csv | json | both")->capture_default_str();

    auto* list = app.add_subcommand("list-scenarios", "print the builtin scenarios");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "audit a scenario file");
    validate->add_option("scenario", validate_path, "path or builtin name")->required();

    std::string dump_name;
    auto* dump = app.add_subcommand("dump-scenario", "print a builtin scenario as JSON");
    dump->add_option("name", dump_name, "builtin scenario name")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& name : tglab::builtin_scenario_names()) {
                const auto sc = tglab::builtin_scenario(name);
                std::cout << name << "  [" << sc.action->name() << " on "
                          << sc.action->space_name() << ", indices " << sc.index_first
                          << ".." << sc.index_last << "]\n";
            }
            return 0;
        }
        if (dump->parsed()) {
            std::cout << tglab::scenario_to_json(tglab::builtin_scenario(dump_name));
            return 0;
        }
        if (validate->parsed()) {
            const auto sc = resolve_scenario(validate_path);
            const auto v = tglab::validate_scenario(sc);
            std::cout << "scenario: " << sc.name << "\n";
            std::cout << "identity defect:    " << v.max_identity_defect << "\n";
            std::cout << "additivity defect:  " << v.max_additivity_defect << "\n";
            std::cout << "stabilizer motion:  " << v.max_stabilizer_motion << "\n";
            std::cout << "declared facts:     " << sc.declared_facts.size() << "\n";
            for (const auto& f : sc.declared_facts)
                std::cout << "  - " << f.fact << ": " << f.justification << "\n";
            if (!v.ok) {
                for (const auto& e : v.errors) std::cerr << "error: " << e << "\n";
                return 3;
            }
            std::cout << "valid\n";
            return 0;
        }
        // run
        if (format == "csv") {
            cfg.emit_json = false;
        } else if (format == "json") {
            cfg.emit_csv = false;
        } else if (format != "both") {
            std::cerr << "error: unknown format '" << format << "'\n";
            return 3;
        }
        const auto sc = resolve_scenario(scenario_ref);
        const auto report = tglab::run_equivalence(sc, k, cfg);
        const auto paths = tglab::emit_report(report, cfg);
        std::cout << "scenario " << report.scenario << ", k = " << report.k << "\n";
        for (const auto& [name, result] : report.conditions)
            std::cout << "  " << name << ": " << tglab::to_string(result.status) << "\n";
        std::cout << "consistency: " << report.consistency << "\n";
        for (const auto& p : paths) std::cout << "wrote " << p << "\n";
        return report.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
