#pragma once

// Run configuration: a flat map of dotted keys with typed defaults.
//
// Sources are layered defaults < config file < command-line flags. Files are
// JSON objects; nested objects are flattened to dotted keys on load, so
// {"dissipation": {"kappa_m": 1e6}} and {"dissipation.kappa_m": 1e6} are the
// same file. Frequencies are ordinary frequencies in Hz unless the
// conventions.* switches say otherwise; rates are in 1/s; lengths in m.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kmag/constants.hpp"
#include "kmag/io.hpp"

namespace kmag {

using json = io::json;

class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, const std::string& message)
        : std::invalid_argument(key.empty() ? message : "configuration key '" + key + "': " + message),
          key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

enum class ParamType { Number, Integer, String, Bool, NumberList, IntegerList };

inline const char* to_string(ParamType t) {
    switch (t) {
        case ParamType::Number: return "number";
        case ParamType::Integer: return "integer";
        case ParamType::String: return "string";
        case ParamType::Bool: return "boolean";
        case ParamType::NumberList: return "number list";
        case ParamType::IntegerList: return "integer list";
    }
    return "?";
}

struct ParamSpec {
    std::string key;
    ParamType type;
    json default_value;
    std::string description;
    std::string unit;
    std::vector<std::string> choices;                           // String only
    std::function<std::optional<std::string>(const json&)> check;  // returns a message on failure
};

namespace rules {

inline auto positive() {
    return [](const json& v) -> std::optional<std::string> {
        if (!(v.get<double>() > 0.0)) return "must be positive";
        return std::nullopt;
    };
}
inline auto non_negative() {
    return [](const json& v) -> std::optional<std::string> {
        if (!(v.get<double>() >= 0.0)) return "must be non-negative";
        return std::nullopt;
    };
}
inline auto at_least(double lo) {
    return [lo](const json& v) -> std::optional<std::string> {
        if (!(v.get<double>() >= lo)) return "must be >= " + io::format_number(lo);
        return std::nullopt;
    };
}
inline auto in_range(double lo, double hi) {
    return [lo, hi](const json& v) -> std::optional<std::string> {
        const double x = v.get<double>();
        if (!(x > lo && x <= hi)) return "must lie in (" + io::format_number(lo) + ", " + io::format_number(hi) + "]";
        return std::nullopt;
    };
}
inline auto non_zero() {
    return [](const json& v) -> std::optional<std::string> {
        if (v.get<double>() == 0.0) return "must be non-zero";
        return std::nullopt;
    };
}
inline auto cutoff() {
    return [](const json& v) -> std::optional<std::string> {
        const auto n = v.get<long long>();
        if (n != 0 && n < 2) return "must be 0 (scenario default) or >= 2";
        if (n > 200) return "must be <= 200";
        return std::nullopt;
    };
}
inline auto list_each(std::function<std::optional<std::string>(const json&)> each, bool non_empty = true) {
    return [each = std::move(each), non_empty](const json& v) -> std::optional<std::string> {
        if (non_empty && v.empty()) return "must not be empty";
        for (const auto& x : v)
            if (auto m = each(x)) return "every entry " + *m;
        return std::nullopt;
    };
}

}  // namespace rules

/// Every recognised key. Order here is the order of params.json.
inline const std::vector<ParamSpec>& parameter_registry() {
    using namespace rules;
    static const std::vector<ParamSpec> reg = [] {
        std::vector<ParamSpec> r;
        const auto add = [&r](std::string key, ParamType type, json def, std::string desc, std::string unit = "",
                              std::function<std::optional<std::string>(const json&)> check = {},
                              std::vector<std::string> choices = {}) {
            r.push_back({std::move(key), type, std::move(def), std::move(desc), std::move(unit), std::move(choices),
                         std::move(check)});
        };
        const auto N = ParamType::Number;
        const auto I = ParamType::Integer;
        const auto S = ParamType::String;

        add("output.dir", S, "", "output directory; empty means <output root>/<scenario>");
        add("parallel.threads", I, 0, "worker threads for independent runs; 0 uses the hardware count", "", non_negative());

        add("integrator.step", N, 0.0, "fixed RK4 step; 0 picks courant / rate bound", "s", non_negative());
        add("integrator.courant", N, 0.05, "target step * rate bound for automatic steps", "", in_range(0.0, 0.1));
        add("fock.cutoff", I, 0, "magnon Fock cutoff; 0 uses the scenario default", "", cutoff());

        add("conventions.detuning_sign", S, "paper", "sign of the 2 K N shift in the linearized magnon detuning", "", {},
            {"paper", "rederived"});
        add("conventions.frequency_unit", S, "hz",
            "how quoted coherent frequencies are read: hz multiplies by 2 pi, angular takes them as rad/s", "", {},
            {"hz", "angular"});
        add("conventions.rate_unit", S, "angular",
            "how decay rates are read: angular takes them as 1/s, hz multiplies by 2 pi", "", {}, {"hz", "angular"});

        add("from_device", ParamType::Bool, false,
            "derive G and Delta_s from device, drive and material parameters (rabi, battery)");
        add("device.radius", N, 50e-9, "sphere radius", "m", positive());
        add("device.distance", N, 6e-9, "spin distance from the sphere surface", "m", non_negative());
        add("device.bias_field", N, 0.3, "static bias field B0", "T", non_negative());
        add("device.kerr_calibration", S, "anchored", "Kerr coefficient calibration", "", {}, {"anchored", "formula"});
        add("device.coupling_calibration", S, "anchored", "bare coupling calibration", "", {}, {"anchored", "formula"});

        add("material.saturation_magnetization", N, 1.4e5, "saturation magnetization M", "A/m", positive());
        add("material.anisotropy_constant", N, 610.0, "first-order cubic anisotropy constant (signed by axis)", "J/m^3");
        add("material.spin_density", N, 2.1e28, "spin density", "1/m^3", positive());
        add("material.g_factor", N, 2.00231930436, "electron g-factor of the spin", "", positive());
        add("material.gyromagnetic_ratio", N, 1.76085963023e11, "gyromagnetic ratio", "rad/(s T)", non_zero());
        add("material.spin", N, 2.5, "spin of the magnetic ion", "", positive());

        add("drive.detuning", N, 10e6, "magnon-drive detuning (omega_m - omega_d) / 2 pi", "Hz");
        add("drive.amplitude", N, 5e8, "drive amplitude Omega_d / 2 pi", "Hz", non_negative());
        add("drive.root", I, -1, "steady-state root index; -1 picks the lowest stable root", "", at_least(-1));

        add("frame.coupling", N, 4e6, "squeezed-frame coupling G", "Hz", positive());
        add("frame.detuning_ratio", N, 10.0, "Delta_q = Delta_s = ratio * G", "", positive());

        add("rabi.periods", N, 3.0, "run length in units of pi / G", "", positive());
        add("rabi.points", I, 601, "output grid points", "", at_least(2));

        add("battery.excitations", ParamType::IntegerList, json::array({1, 5}), "initial magnon Fock numbers m", "",
            list_each(at_least(1)));
        add("battery.periods", N, 1.0, "run length in units of pi / G", "", positive());
        add("battery.points", I, 2001, "output grid points", "", at_least(2));

        add("transfer.coupling_eff", N, 70e3, "effective spin-spin coupling G_eff", "Hz", positive());
        add("transfer.dispersive_ratio", N, 10.0, "Delta_- / G", "", positive());
        add("transfer.spin_detuning_ratio", N, 10.0, "Delta_q / G", "", positive());
        add("transfer.periods", N, 2.0, "run length in units of pi / (2 G_eff)", "", positive());
        add("transfer.points", I, 201, "output grid points", "", at_least(2));

        add("dissipation.kappa_m", N, 1e6, "magnon decay rate", "1/s", non_negative());
        add("dissipation.gamma_q", N, 1e3, "spin relaxation rate", "1/s", non_negative());

        add("iswap.periods", N, 2.0, "run length in units of pi / (2 G_eff)", "", positive());
        add("iswap.points", I, 201, "output grid points", "", at_least(2));
        add("iswap.kappa_scale", N, 2.0, "kappa_m multiplier of the robustness run", "", positive());
        add("iswap.gamma_q_sensitivity", N, 1e4, "spin relaxation rate of the sensitivity run", "1/s", non_negative());

        add("dispersive.coupling", N, 0.7e6, "coupling G", "Hz", positive());
        add("dispersive.ratios", ParamType::NumberList, json::array({5.0, 10.0, 20.0}), "Delta_- / G values", "",
            list_each(positive()));
        add("dispersive.spin_detuning_ratio", N, 10.0, "Delta_q / G", "", positive());
        add("dispersive.points", I, 401, "output grid points per transfer period", "", at_least(2));

        add("sweep.radius_min", N, 1e-9, "smallest radius", "m", positive());
        add("sweep.radius_max", N, 5e-6, "largest radius", "m", positive());
        add("sweep.radius_points", I, 61, "log-spaced radius points", "", at_least(2));
        add("sweep.distance_min", N, 6e-9, "smallest distance", "m", positive());
        add("sweep.distance_max", N, 2e-6, "largest distance", "m", positive());
        add("sweep.distance_points", I, 41, "log-spaced distance points", "", at_least(2));
        add("sweep.squeezing", ParamType::NumberList, json::array({0.0, 10.0}), "squeezing parameters r_m", "",
            list_each([](const json& v) -> std::optional<std::string> {
                if (!std::isfinite(v.get<double>()) || std::abs(v.get<double>()) > 50.0) return "must be finite, |r| <= 50";
                return std::nullopt;
            }));
        return r;
    }();
    return reg;
}

inline const ParamSpec* find_param(const std::string& key) {
    for (const auto& p : parameter_registry())
        if (p.key == key) return &p;
    return nullptr;
}

struct RunConfig {
    std::string scenario;
    std::map<std::string, json> values;

    bool operator==(const RunConfig& o) const { return scenario == o.scenario && values == o.values; }

    const json& at(const std::string& key) const {
        const auto it = values.find(key);
        if (it == values.end()) throw ConfigError(key, "not set");
        return it->second;
    }
    double number(const std::string& key) const { return at(key).get<double>(); }
    long long integer(const std::string& key) const { return at(key).get<long long>(); }
    std::string string(const std::string& key) const { return at(key).get<std::string>(); }
    bool flag(const std::string& key) const { return at(key).get<bool>(); }
    std::vector<double> numbers(const std::string& key) const { return at(key).get<std::vector<double>>(); }
    std::vector<long long> integers(const std::string& key) const { return at(key).get<std::vector<long long>>(); }

    double step() const { return number("integrator.step"); }
    int cutoff() const { return static_cast<int>(integer("fock.cutoff")); }

    /// Quoted coherent frequency (Hz by default) to rad/s.
    double frequency(const std::string& key) const {
        const double v = number(key);
        return string("conventions.frequency_unit") == "hz" ? angular_from_hz(v) : v;
    }
    /// Quoted decay rate (1/s by default) to the rate entering the dissipator.
    double rate(double v) const { return string("conventions.rate_unit") == "hz" ? angular_from_hz(v) : v; }
    double rate(const std::string& key) const { return rate(number(key)); }

    /// Flat JSON with the scenario id first, then keys in registry order.
    json to_json() const {
        json j;
        j["scenario"] = scenario;
        for (const auto& p : parameter_registry()) {
            const auto it = values.find(p.key);
            if (it != values.end()) j[p.key] = it->second;
        }
        return j;
    }
};

namespace detail {

inline void flatten(const json& node, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
    for (auto it = node.begin(); it != node.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it->is_object()) flatten(*it, key, out);
        else out.emplace_back(key, *it);
    }
}

inline json coerce(const ParamSpec& p, const json& v) {
    const auto mismatch = [&] {
        return ConfigError(p.key, std::string("expected ") + to_string(p.type) + ", got " + v.type_name() + " " + v.dump());
    };
    const auto integral = [](const json& x) {
        if (x.is_number_integer()) return true;
        if (!x.is_number_float()) return false;
        const double d = x.get<double>();
        return std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15;
    };
    switch (p.type) {
        case ParamType::Number:
            if (!v.is_number()) throw mismatch();
            if (!std::isfinite(v.get<double>())) throw ConfigError(p.key, "must be finite");
            return v.get<double>();
        case ParamType::Integer:
            if (!v.is_number() || !integral(v)) throw mismatch();
            return static_cast<long long>(v.get<double>());
        case ParamType::String:
            if (!v.is_string()) throw mismatch();
            if (!p.choices.empty() &&
                std::find(p.choices.begin(), p.choices.end(), v.get<std::string>()) == p.choices.end()) {
                std::string allowed;
                for (const auto& c : p.choices) allowed += (allowed.empty() ? "" : "|") + c;
                throw ConfigError(p.key, "must be one of " + allowed + ", got '" + v.get<std::string>() + "'");
            }
            return v;
        case ParamType::Bool:
            if (!v.is_boolean()) throw mismatch();
            return v;
        case ParamType::NumberList: {
            if (!v.is_array()) throw mismatch();
            json out = json::array();
            for (const auto& x : v) {
                if (!x.is_number() || !std::isfinite(x.get<double>())) throw mismatch();
                out.push_back(x.get<double>());
            }
            return out;
        }
        case ParamType::IntegerList: {
            if (!v.is_array()) throw mismatch();
            json out = json::array();
            for (const auto& x : v) {
                if (!integral(x)) throw mismatch();
                out.push_back(static_cast<long long>(x.get<double>()));
            }
            return out;
        }
    }
    throw mismatch();
}

}  // namespace detail

/// Every configuration source in precedence order. `file` and `overrides` may
/// both be absent, which yields the defaults.
struct ConfigSources {
    std::string scenario;
    std::optional<json> file;
    std::vector<std::pair<std::string, json>> overrides;
};

/// Parse one `key=value` flag. Values that parse as JSON keep their JSON type;
/// anything else is taken as a string.
inline std::pair<std::string, json> parse_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("", "expected key=value, got '" + text + "'");
    const std::string key = text.substr(0, eq);
    const std::string raw = text.substr(eq + 1);
    json v = json::parse(raw, nullptr, false);
    if (v.is_discarded()) v = raw;
    return {key, v};
}

inline json load_config_file(const std::filesystem::path& path) {
    json j = json::parse(io::read_text(path), nullptr, false);
    if (j.is_discarded()) throw ConfigError("", "'" + path.string() + "' is not valid JSON");
    if (!j.is_object()) throw ConfigError("", "'" + path.string() + "' must hold a JSON object");
    return j;
}

/// Check cross-key invariants after all values are in place.
inline void validate_config(const RunConfig& cfg) {
    for (const auto& p : parameter_registry()) {
        const auto& v = cfg.at(p.key);
        if (p.check)
            if (auto msg = p.check(v)) throw ConfigError(p.key, *msg);
    }
    if (!(cfg.number("sweep.radius_max") > cfg.number("sweep.radius_min")))
        throw ConfigError("sweep.radius_max", "must exceed sweep.radius_min");
    if (!(cfg.number("sweep.distance_max") > cfg.number("sweep.distance_min")))
        throw ConfigError("sweep.distance_max", "must exceed sweep.distance_min");
}

inline RunConfig parse_config(const ConfigSources& src) {
    RunConfig cfg;
    for (const auto& p : parameter_registry()) cfg.values[p.key] = detail::coerce(p, p.default_value);

    std::string file_scenario, flag_scenario;
    const auto apply = [&](const std::string& key, const json& v, std::string& scenario) {
        if (key == "scenario") {
            if (!v.is_string()) throw ConfigError("scenario", "expected string");
            scenario = v.get<std::string>();
            return;
        }
        const ParamSpec* p = find_param(key);
        if (!p) throw ConfigError(key, "unknown key");
        cfg.values[key] = detail::coerce(*p, v);
    };
    if (src.file) {
        if (!src.file->is_object()) throw ConfigError("", "configuration must be a JSON object");
        std::vector<std::pair<std::string, json>> flat;
        detail::flatten(*src.file, "", flat);
        for (const auto& [k, v] : flat) apply(k, v, file_scenario);
    }
    for (const auto& [k, v] : src.overrides) apply(k, v, flag_scenario);
    cfg.scenario = !src.scenario.empty() ? src.scenario : !flag_scenario.empty() ? flag_scenario : file_scenario;
    validate_config(cfg);
    return cfg;
}

inline RunConfig parse_config(const json& file) { return parse_config(ConfigSources{"", file, {}}); }
inline RunConfig default_config(const std::string& scenario = "") { return parse_config(ConfigSources{scenario, {}, {}}); }

/// JSON Schema (draft 2020-12) describing the flat file format.
inline json config_schema() {
    json props = json::object();
    props["scenario"] = {{"type", "string"}, {"description", "scenario id"}};
    for (const auto& p : parameter_registry()) {
        json s;
        switch (p.type) {
            case ParamType::Number: s["type"] = "number"; break;
            case ParamType::Integer: s["type"] = "integer"; break;
            case ParamType::String: s["type"] = "string"; break;
            case ParamType::Bool: s["type"] = "boolean"; break;
            case ParamType::NumberList: s = {{"type", "array"}, {"items", {{"type", "number"}}}}; break;
            case ParamType::IntegerList: s = {{"type", "array"}, {"items", {{"type", "integer"}}}}; break;
        }
        if (!p.choices.empty()) s["enum"] = p.choices;
        s["default"] = p.default_value;
        s["description"] = p.unit.empty() ? p.description : p.description + " [" + p.unit + "]";
        props[p.key] = s;
    }
    return {{"$schema", "https://json-schema.org/draft/2020-12/schema"},
            {"title", "kmag run configuration"},
            {"description", "Flat dotted keys; nested objects are flattened on load."},
            {"type", "object"},
            {"additionalProperties", false},
            {"properties", props}};
}

inline json default_config_json() {
    json j = json::object();
    for (const auto& p : parameter_registry()) j[p.key] = p.default_value;
    return j;
}

}  // namespace kmag
