#include <gtest/gtest.h>

#include <filesystem>

#include "kmag/config.hpp"

using namespace kmag;
using kmag::io::json;

namespace {

std::string error_key(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<no error>";
}

const std::filesystem::path source_dir = KMAG_SOURCE_DIR;

}  // namespace

TEST(Config, EmptyInputGivesValidDefaults) {
    const auto cfg = parse_config(json::object());
    EXPECT_TRUE(cfg.scenario.empty());
    EXPECT_EQ(cfg.values.size(), parameter_registry().size());
    EXPECT_NO_THROW(validate_config(cfg));
    EXPECT_EQ(cfg.number("transfer.coupling_eff"), 70e3);
    EXPECT_EQ(cfg.string("conventions.detuning_sign"), "paper");
}

TEST(Config, FlagOverridesFile) {
    ConfigSources src;
    src.file = json{{"scenario", "rabi"}, {"dissipation", {{"kappa_m", 2e6}}}, {"rabi.points", 11}};
    src.overrides.push_back(parse_assignment("dissipation.kappa_m=3e6"));
    const auto cfg = parse_config(src);
    EXPECT_EQ(cfg.scenario, "rabi");
    EXPECT_EQ(cfg.number("dissipation.kappa_m"), 3e6);
    EXPECT_EQ(cfg.integer("rabi.points"), 11);
}

TEST(Config, ScenarioPrecedence) {
    ConfigSources src;
    src.file = json{{"scenario", "battery"}};
    EXPECT_EQ(parse_config(src).scenario, "battery");
    src.overrides.push_back(parse_assignment("scenario=rabi"));
    EXPECT_EQ(parse_config(src).scenario, "rabi");
    src.scenario = "iswap-fidelity";
    EXPECT_EQ(parse_config(src).scenario, "iswap-fidelity");
}

TEST(Config, NegativeKappaNamesKey) {
    EXPECT_EQ(error_key([] { parse_config(json{{"dissipation.kappa_m", -1.0}}); }), "dissipation.kappa_m");
    ConfigSources src;
    src.overrides.push_back(parse_assignment("dissipation.kappa_m=-5"));
    EXPECT_EQ(error_key([&] { parse_config(src); }), "dissipation.kappa_m");
}

TEST(Config, UnknownKeyRejected) {
    EXPECT_EQ(error_key([] { parse_config(json{{"dissipation", {{"kapa_m", 1.0}}}}); }), "dissipation.kapa_m");
}

TEST(Config, TypeMismatchNamesKey) {
    EXPECT_EQ(error_key([] { parse_config(json{{"rabi.points", "many"}}); }), "rabi.points");
    EXPECT_EQ(error_key([] { parse_config(json{{"rabi.points", 10.5}}); }), "rabi.points");
    EXPECT_EQ(error_key([] { parse_config(json{{"from_device", 1}}); }), "from_device");
    EXPECT_EQ(error_key([] { parse_config(json{{"battery.excitations", json::array({1, "x"})}}); }), "battery.excitations");
    EXPECT_NO_THROW(parse_config(json{{"rabi.points", 11.0}}));
}

TEST(Config, InvariantViolations) {
    EXPECT_EQ(error_key([] { parse_config(json{{"integrator.courant", 0.2}}); }), "integrator.courant");
    EXPECT_EQ(error_key([] { parse_config(json{{"fock.cutoff", 1}}); }), "fock.cutoff");
    EXPECT_EQ(error_key([] { parse_config(json{{"conventions.detuning_sign", "other"}}); }), "conventions.detuning_sign");
    EXPECT_EQ(error_key([] { parse_config(json{{"sweep.radius_max", 1e-10}}); }), "sweep.radius_max");
    EXPECT_EQ(error_key([] { parse_config(json{{"device.radius", 0.0}}); }), "device.radius");
}

TEST(Config, AssignmentParsing) {
    EXPECT_EQ(parse_assignment("a.b=1.5").second, json(1.5));
    EXPECT_EQ(parse_assignment("a.b=formula").second, json("formula"));
    EXPECT_EQ(parse_assignment("a.b=[1,2]").second, json::array({1, 2}));
    EXPECT_THROW(parse_assignment("novalue"), ConfigError);
    EXPECT_THROW(parse_assignment("=3"), ConfigError);
}

TEST(Config, ParamsRoundTrip) {
    ConfigSources src;
    src.scenario = "state-transfer";
    src.overrides = {parse_assignment("dissipation.gamma_q=2e3"), parse_assignment("dispersive.ratios=[4,8]"),
                     parse_assignment("device.kerr_calibration=formula")};
    const auto cfg = parse_config(src);
    const auto text = cfg.to_json().dump(2);
    const auto back = parse_config(json::parse(text));
    EXPECT_EQ(back, cfg);
    EXPECT_EQ(cfg.to_json().begin().key(), "scenario");
}

TEST(Config, UnitConventions) {
    auto cfg = default_config();
    EXPECT_DOUBLE_EQ(cfg.frequency("frame.coupling"), two_pi * 4e6);
    EXPECT_DOUBLE_EQ(cfg.rate("dissipation.kappa_m"), 1e6);
    cfg = parse_config(json{{"conventions.frequency_unit", "angular"}, {"conventions.rate_unit", "hz"}});
    EXPECT_DOUBLE_EQ(cfg.frequency("frame.coupling"), 4e6);
    EXPECT_DOUBLE_EQ(cfg.rate("dissipation.kappa_m"), two_pi * 1e6);
}

TEST(Config, ShippedFilesMatchRegistry) {
    const auto schema = json::parse(io::read_text(source_dir / "config" / "schema.json"));
    const auto defaults = json::parse(io::read_text(source_dir / "config" / "defaults.json"));
    EXPECT_EQ(schema, config_schema());
    EXPECT_EQ(defaults, default_config_json());
    EXPECT_EQ(parse_config(defaults), default_config());
    EXPECT_FALSE(schema["additionalProperties"].get<bool>());
    for (const auto& p : parameter_registry()) EXPECT_TRUE(schema["properties"].contains(p.key)) << p.key;
}

TEST(Config, LoadFileErrors) {
    const auto dir = std::filesystem::temp_directory_path() / "kmag_config_test";
    std::filesystem::create_directories(dir);
    io::write_text(dir / "bad.json", "{ not json");
    io::write_text(dir / "array.json", "[1, 2]");
    EXPECT_THROW(load_config_file(dir / "bad.json"), ConfigError);
    EXPECT_THROW(load_config_file(dir / "array.json"), ConfigError);
    EXPECT_THROW(load_config_file(dir / "missing.json"), std::runtime_error);
    std::filesystem::remove_all(dir);
}
