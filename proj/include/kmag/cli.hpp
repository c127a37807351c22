#pragma once

// Command-line entry points shared by the kmag tool and the tests.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kmag/config.hpp"
#include "kmag/scenarios.hpp"

namespace kmag::cli {

namespace fs = std::filesystem;

enum ExitCode : int { Ok = 0, Failed = 1, Usage = 2 };

struct RunRequest {
    std::string scenario;
    std::optional<fs::path> config;
    std::optional<fs::path> out;
    std::vector<std::string> sets;
    std::optional<int> cutoff;
    std::optional<double> step;
    bool from_device = false;
};

/// Output directory: --out, else output.dir, else $KMAG_OUTPUT_ROOT/<scenario>,
/// else ./runs/<scenario>.
inline fs::path output_dir(const RunRequest& req, const RunConfig& cfg) {
    if (req.out) return *req.out;
    if (const auto dir = cfg.string("output.dir"); !dir.empty()) return dir;
    if (const char* root = std::getenv("KMAG_OUTPUT_ROOT"); root && *root) return fs::path(root) / cfg.scenario;
    return fs::path("runs") / cfg.scenario;
}

inline RunConfig config_for(const RunRequest& req) {
    ConfigSources src;
    src.scenario = req.scenario;
    if (req.config) src.file = load_config_file(*req.config);
    for (const auto& s : req.sets) src.overrides.push_back(parse_assignment(s));
    if (req.cutoff) src.overrides.emplace_back("fock.cutoff", *req.cutoff);
    if (req.step) src.overrides.emplace_back("integrator.step", *req.step);
    if (req.from_device) src.overrides.emplace_back("from_device", true);
    return parse_config(src);
}

inline void print_summary(std::ostream& os, const scenarios::ScenarioReport& rep, const fs::path& dir) {
    os << rep.scenario << ": " << rep.description << "\n";
    for (const auto& c : rep.checks)
        os << "  " << (c.pass ? "PASS" : "FAIL") << " " << c.provenance << " " << c.name << ": observed "
           << io::format_number(c.observed) << ", expected " << c.expected << "\n";
    for (const auto& g : rep.gates) {
        if (!g.applicable)
            os << "  n/a  gate " << g.name << "\n";
        else
            os << "  " << (g.pass ? "PASS" : "FAIL") << " gate " << g.name << ": " << io::format_number(g.observed)
               << " <= " << io::format_number(g.tolerance) << "\n";
    }
    for (const auto& a : rep.advisories) os << "  note: " << a << "\n";
    os << (rep.passed() ? "passed" : "FAILED") << "; outputs in " << dir.string() << "\n";
}

inline int run(const RunRequest& req, std::ostream& os = std::cout, std::ostream& err = std::cerr) {
    try {
        const auto cfg = config_for(req);
        if (cfg.scenario.empty()) throw ConfigError("scenario", "no scenario given");
        if (!scenarios::find_scenario(cfg.scenario)) throw ConfigError("scenario", "unknown scenario '" + cfg.scenario + "'");
        const auto dir = output_dir(req, cfg);
        const auto outcome = scenarios::run_scenario(cfg, dir);
        print_summary(os, outcome.report, dir);
        if (outcome.instability) {
            err << "error: " << outcome.error << "\n";
            err << "stability margin: " << io::format_number(*outcome.margin) << "\n";
            return Failed;
        }
        return outcome.report.passed() ? Ok : Failed;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return Usage;
    } catch (const StepSizeError& e) {
        err << "error: " << e.what() << "\n";
        return Usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return Failed;
    }
}

inline int list_scenarios(std::ostream& os = std::cout) {
    for (const auto& s : scenarios::registry()) {
        os << s.id << "\t" << s.description << " (" << s.anchor << ")";
        if (s.supports_device) os << " [--from-device]";
        os << "\n";
    }
    return Ok;
}

inline int validate(const fs::path& path, std::ostream& os = std::cout, std::ostream& err = std::cerr) {
    try {
        const auto cfg = parse_config(load_config_file(path));
        if (!cfg.scenario.empty() && !scenarios::find_scenario(cfg.scenario))
            throw ConfigError("scenario", "unknown scenario '" + cfg.scenario + "'");
        os << path.string() << ": valid\n";
        return Ok;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return Usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return Usage;
    }
}

}  // namespace kmag::cli
