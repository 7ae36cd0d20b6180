#include "dcflex/engine.hpp"
#include "dcflex/errors.hpp"
#include "dcflex/report.hpp"
#include "dcflex/scenario.hpp"
#include "dcflex/scenario_json.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;    // unreadable file or malformed scenario
constexpr int kExitInvalid = 2;  // validation failures / unknown keys
constexpr int kExitCollapse = 3; // bus collapsed during the run

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << content;
    return out.good();
}

void print_violations(const std::vector<dcflex::Violation>& violations) {
    for (const dcflex::Violation& v : violations) {
        std::cerr << v.path << ": " << v.message << "\n";
    }
}

int cmd_run(const std::string& scenario_path, std::optional<int> case_n,
            std::string trace_path, std::string summary_path,
            const std::string& gnuplot_path, std::optional<double> dt,
            std::optional<double> t_end, std::optional<std::uint64_t> seed,
            bool quiet) {
    dcflex::ScenarioSpec spec;
    std::vector<dcflex::Violation> violations;
    try {
        if (case_n) {
            if (*case_n < 1 || *case_n > 3) {
                std::cerr << "unknown case " << *case_n << " (expected 1, 2 or 3)\n";
                return kExitInvalid;
            }
            spec = dcflex::builtin_case(*case_n);
        } else {
            spec = dcflex::load_scenario_file(scenario_path, violations);
        }
    } catch (const dcflex::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitParse;
    }

    if (dt) spec.dt_s = *dt;
    if (t_end) spec.t_end_s = *t_end;
    if (seed) spec.seed = *seed;

    for (const dcflex::Violation& v : dcflex::validate_scenario(spec)) {
        violations.push_back(v);
    }
    if (!violations.empty()) {
        print_violations(violations);
        return kExitInvalid;
    }

    if (trace_path.empty()) trace_path = spec.name + ".trace.csv";
    if (summary_path.empty()) summary_path = spec.name + ".summary.json";
    if (trace_path == summary_path ||
        (!gnuplot_path.empty() &&
         (gnuplot_path == trace_path || gnuplot_path == summary_path))) {
        std::cerr << "output paths must be distinct\n";
        return kExitInvalid;
    }

    const dcflex::RunResult result = dcflex::run(spec);

    if (!write_file(trace_path, dcflex::trace_to_csv(result.trace))) {
        std::cerr << "cannot write trace file \"" << trace_path << "\"\n";
        return kExitParse;
    }
    if (!write_file(summary_path, dcflex::summary_to_json(result.summary))) {
        std::cerr << "cannot write summary file \"" << summary_path << "\"\n";
        return kExitParse;
    }
    if (!gnuplot_path.empty() &&
        !write_file(gnuplot_path, dcflex::trace_to_gnuplot(result.trace))) {
        std::cerr << "cannot write gnuplot file \"" << gnuplot_path << "\"\n";
        return kExitParse;
    }

    if (!quiet) std::cout << dcflex::render_report(spec, result.summary);
    return result.summary.collapsed ? kExitCollapse : kExitOk;
}

int cmd_validate(const std::string& scenario_path) {
    std::vector<dcflex::Violation> violations;
    dcflex::ScenarioSpec spec;
    try {
        spec = dcflex::load_scenario_file(scenario_path, violations);
    } catch (const dcflex::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitParse;
    }
    for (const dcflex::Violation& v : dcflex::validate_scenario(spec)) {
        violations.push_back(v);
    }
    if (!violations.empty()) {
        print_violations(violations);
        return kExitInvalid;
    }
    return kExitOk;
}

int cmd_cases() {
    const char* expected[] = {
        "bus returns to [748, 752] V; grid converter supplies the full 15 kW "
        "step, battery settles near 0 kW",
        "bus returns to [748, 752] V; battery raises its output by 15 kW in a "
        "single dispatch",
        "bus returns to [748, 752] V; battery and EV split the step, about "
        "7.5 kW each"};

    for (int n = 1; n <= 3; ++n) {
        const dcflex::ScenarioSpec spec = dcflex::builtin_case(n);
        std::cout << spec.name << "\n";
        for (const dcflex::NodeSpec& node : spec.nodes) {
            std::cout << "  " << node.id << "  " << dcflex::node_kind_name(node.kind)
                      << "  " << node.p_rated_kw << " kW  k=" << node.k_v_per_kw
                      << " V/kW";
            if (node.soc_pct) std::cout << "  SOC " << *node.soc_pct;
            std::cout << "  [" << dcflex::node_mode_name(node.initial_mode) << "]\n";
        }
        for (const dcflex::EventSpec& e : spec.events) {
            std::cout << "  event: t=" << e.t_s << " s  " << e.target << " "
                      << dcflex::event_action_name(e.action);
            if (e.action == dcflex::EventAction::set_power) {
                std::cout << " " << e.p_kw << " kW";
            }
            std::cout << "\n";
        }
        std::cout << "  expected: " << expected[n - 1] << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dcflex - droop-controlled DC microgrid bus simulator"};
    app.require_subcommand(1);

    // run
    std::string scenario_path;
    std::optional<int> case_n;
    std::string trace_path, summary_path, gnuplot_path;
    std::optional<double> dt, t_end;
    std::optional<std::uint64_t> seed;
    bool quiet = false;

    CLI::App* run = app.add_subcommand("run", "Simulate a scenario");
    CLI::Option* file_opt =
        run->add_option("scenario", scenario_path, "Scenario JSON file");
    CLI::Option* case_opt =
        run->add_option("--case", case_n, "Built-in case number (1..3)");
    file_opt->excludes(case_opt);
    run->add_option("--trace", trace_path, "Trace CSV output path");
    run->add_option("--summary", summary_path, "Summary JSON output path");
    run->add_option("--gnuplot", gnuplot_path, "Gnuplot columns output path");
    run->add_option("--dt", dt, "Override step size (s)");
    run->add_option("--t-end", t_end, "Override end time (s)");
    run->add_option("--seed", seed, "Override channel seed");
    run->add_flag("--quiet", quiet, "Suppress the run report");

    // validate
    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate", "Check a scenario file");
    validate->add_option("scenario", validate_path, "Scenario JSON file")->required();

    // cases
    CLI::App* cases = app.add_subcommand("cases", "List the built-in cases");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        if (scenario_path.empty() && !case_n) {
            std::cerr << "run: give a scenario file or --case N\n";
            return kExitParse;
        }
        return cmd_run(scenario_path, case_n, trace_path, summary_path,
                       gnuplot_path, dt, t_end, seed, quiet);
    }
    if (validate->parsed()) return cmd_validate(validate_path);
    if (cases->parsed()) return cmd_cases();
    return kExitParse;
}
