#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cavsim/network.hpp"
#include "cavsim/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRuntime = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cavsim::ScenarioParseError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Apply dotted-key overrides ("routing.gamma_w=0") onto the scenario JSON.
void apply_overrides(json& j, const std::vector<std::string>& sets) {
    for (const std::string& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw cavsim::ScenarioParseError("--set expects key=value, got: " + kv);
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);

        json* cursor = &j;
        std::size_t start = 0;
        std::vector<std::string> parts;
        while (true) {
            const auto dot = key.find('.', start);
            parts.push_back(key.substr(start, dot - start));
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            if (!cursor->contains(parts[i])) (*cursor)[parts[i]] = json::object();
            cursor = &(*cursor)[parts[i]];
        }
        if (!cursor->contains(parts.back()))
            throw cavsim::ScenarioParseError("--set references unknown config key: " + key);
        try {
            (*cursor)[parts.back()] = json::parse(value);
        } catch (const json::parse_error&) {
            (*cursor)[parts.back()] = value; // plain string value
        }
    }
}

cavsim::Scenario load_with_overrides(const std::string& path,
                                     const std::vector<std::string>& sets,
                                     std::optional<std::uint64_t> seed) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw cavsim::ScenarioParseError(std::string("scenario parse error in ") + path +
                                         ": " + e.what());
    }
    apply_overrides(j, sets);
    if (seed) j["sim"]["seed"] = *seed;
    return cavsim::parse_scenario(j.dump());
}

void write_outputs(const fs::path& dir, const cavsim::SimOutputs& out,
                   bool dump_trajectories) {
    fs::create_directories(dir);
    std::ofstream(dir / "metrics.json") << cavsim::metrics_to_json(out.metrics);
    std::ofstream(dir / "edges.csv") << out.edges_csv;
    std::ofstream(dir / "events.csv") << out.events_csv;
    if (dump_trajectories) std::ofstream(dir / "trajectories.csv") << out.trajectories_csv;
}

double improvement_pct(double baseline, double proposed) {
    if (baseline == 0.0) return 0.0;
    return (baseline - proposed) / baseline * 100.0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CAV network simulation: predictive re-routing with signal-free "
                 "intersection coordination"};
    app.require_subcommand(1);

    std::string scenario_path, scenario_b_path, controller = "proposed", out_dir;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    bool dump_trajectories = false;
    bool audit = false;

    auto add_common = [&](CLI::App* cmd, bool need_controller) {
        cmd->add_option("--scenario", scenario_path, "Scenario file")->required();
        cmd->add_option("--set", sets, "Config override key=value (dotted keys)");
        cmd->add_option("--seed", seed, "RNG seed override");
        cmd->add_option("-o,--out", out_dir, "Output directory");
        cmd->add_flag("--dump-trajectories", dump_trajectories,
                      "Write sampled control-zone trajectories");
        cmd->add_flag("--audit", audit, "Enable the runtime safety audit");
        if (need_controller)
            cmd->add_option("--controller", controller, "baseline or proposed")
                ->check(CLI::IsMember({"baseline", "proposed"}));
    };

    CLI::App* cmd_run = app.add_subcommand("run", "Run one controller on a scenario");
    add_common(cmd_run, true);

    CLI::App* cmd_compare =
        app.add_subcommand("compare", "Run baseline and proposed, print the comparison");
    add_common(cmd_compare, false);
    cmd_compare->add_option("--scenario-b", scenario_b_path,
                            "Must describe the same scenario as --scenario");

    CLI::App* cmd_validate = app.add_subcommand("validate", "Validate a scenario file");
    cmd_validate->add_option("--scenario", scenario_path, "Scenario file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_validate->parsed()) {
            try {
                cavsim::load_scenario(scenario_path);
            } catch (const cavsim::ScenarioValidationError& e) {
                for (const std::string& p : e.problems) std::cerr << p << "\n";
                return kExitValidation;
            }
            std::cout << "scenario OK: " << scenario_path << "\n";
            return 0;
        }

        if (cmd_run->parsed()) {
            const auto scenario = load_with_overrides(scenario_path, sets, seed);
            const auto kind = controller == "baseline" ? cavsim::ControllerKind::Baseline
                                                       : cavsim::ControllerKind::Proposed;
            std::cout << "run scenario_hash=" << cavsim::scenario_hash(scenario)
                      << " controller=" << controller << " seed=" << scenario.sim.seed
                      << "\n";
            const auto out =
                cavsim::run_with_outputs(scenario, kind, scenario.sim, audit,
                                         dump_trajectories);
            if (!out_dir.empty()) write_outputs(out_dir, out, dump_trajectories);
            std::cout << "ttt=" << out.metrics.ttt << " total_delay=" << out.metrics.total_delay
                      << " energy=" << out.metrics.total_energy
                      << " completed=" << out.metrics.completed
                      << " incomplete=" << out.metrics.incomplete << "\n";
            return 0;
        }

        if (cmd_compare->parsed()) {
            const auto scenario = load_with_overrides(scenario_path, sets, seed);
            if (!scenario_b_path.empty()) {
                const auto scenario_b = load_with_overrides(scenario_b_path, sets, seed);
                if (cavsim::scenario_hash(scenario) != cavsim::scenario_hash(scenario_b)) {
                    std::cerr << "compare: scenarios do not match ("
                              << cavsim::scenario_hash(scenario) << " vs "
                              << cavsim::scenario_hash(scenario_b) << ")\n";
                    return kExitValidation;
                }
            }
            std::cout << "compare scenario_hash=" << cavsim::scenario_hash(scenario)
                      << " seed=" << scenario.sim.seed << "\n";
            const auto base = cavsim::run_with_outputs(
                scenario, cavsim::ControllerKind::Baseline, scenario.sim, audit,
                dump_trajectories);
            const auto prop = cavsim::run_with_outputs(
                scenario, cavsim::ControllerKind::Proposed, scenario.sim, audit,
                dump_trajectories);
            if (!out_dir.empty()) {
                write_outputs(fs::path(out_dir) / "baseline", base, dump_trajectories);
                write_outputs(fs::path(out_dir) / "proposed", prop, dump_trajectories);
            }
            const auto& mb = base.metrics;
            const auto& mp = prop.metrics;
            std::printf("%-22s %14s %14s %12s\n", "metric", "baseline", "proposed",
                        "improvement");
            std::printf("%-22s %14.3f %14.3f %11.1f%%\n", "total_travel_time", mb.ttt,
                        mp.ttt, improvement_pct(mb.ttt, mp.ttt));
            std::printf("%-22s %14.3f %14.3f %11.1f%%\n", "total_delay", mb.total_delay,
                        mp.total_delay, improvement_pct(mb.total_delay, mp.total_delay));
            std::printf("%-22s %14.3f %14.3f %11.1f%%\n", "energy_proxy", mb.total_energy,
                        mp.total_energy, improvement_pct(mb.total_energy, mp.total_energy));
            std::printf("%-22s %14.3f %14.3f %11.1f%%\n", "time_above_critical",
                        mb.time_above_critical, mp.time_above_critical,
                        improvement_pct(mb.time_above_critical, mp.time_above_critical));
            return 0;
        }
    } catch (const cavsim::ScenarioValidationError& e) {
        for (const std::string& p : e.problems) std::cerr << p << "\n";
        return kExitValidation;
    } catch (const cavsim::ScenarioParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitParse;
    } catch (const cavsim::SafetyAuditError& e) {
        std::cerr << "safety audit failure: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
