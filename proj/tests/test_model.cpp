#include <doctest.h>

#include <random>
#include <string>

#include "harvest/config.hpp"
#include "harvest/model.hpp"

using namespace harvest;

TEST_CASE("reference design carries the documented defaults") {
    const SimConfig cfg = reference_design();
    CHECK(cfg.dt == 1e-5);
    CHECK(cfg.duration == 10.0);
    CHECK(cfg.gait.cadence == 1.0);
    CHECK(cfg.circuit.smoothing_cap == 470e-6);
    CHECK(cfg.circuit.load.kind == LoadKind::resistor);
    CHECK(cfg.circuit.load.resistance == 170e3);
    CHECK(cfg.circuit.diode.forward_drop == 0.45);
    CHECK(cfg.design.stroke_limit < cfg.design.end_gap);
    CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("partial config keeps defaults for absent keys") {
    const SimConfig cfg = parse_config("gait.cadence = 1.0\n");
    CHECK(cfg == reference_design());
}

TEST_CASE("empty config equals the reference design") {
    CHECK(parse_config("") == reference_design());
    CHECK(parse_config("# only a comment\n\n") == reference_design());
}

TEST_CASE("invalid values name the key") {
    try {
        (void)parse_config("design.spring_k = -5\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("spring_k") != std::string::npos);
    }
}

TEST_CASE("malformed input is rejected") {
    CHECK_THROWS_AS((void)parse_config("design.spring_k 5\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("design.spring_k = five\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("design.spring_k = 5abc\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("design.nope = 1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("gait.cadence = 1\ngait.cadence = 2\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("gait.shape = square\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("sim.coupling = maybe\n"), ConfigError);
}

TEST_CASE("cross-field constraints") {
    CHECK_THROWS_AS((void)parse_config("design.stroke_limit = 0.01\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("sim.duration = 1e-6\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("gait.duty = 1.5\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("circuit.load = battery\ncircuit.smoothing_cap = 0\n"), ConfigError);
}

TEST_CASE("optimize keys are ignored by the simulation parser") {
    CHECK(parse_config("optimize.objective = dc_steady\n") == reference_design());
}

TEST_CASE("line numbers are tracked") {
    const auto kv = parse_key_values("# header\n\na = 1\n  b=2  \n");
    REQUIRE(kv.size() == 2);
    CHECK(kv[0].key == "a");
    CHECK(kv[0].line == 3);
    CHECK(kv[1].key == "b");
    CHECK(kv[1].value == "2");
    CHECK(kv[1].line == 4);
}

TEST_CASE("missing file error names the path") {
    try {
        (void)load_config("/nonexistent/dir/x.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/dir/x.cfg") != std::string::npos);
    }
}

TEST_CASE("number formatting round-trips") {
    for (double v : {0.0, 1e-5, 0.1, 1.0 / 3.0, 2.086, 170e3, 1e300, -4.9e-324}) {
        CHECK(parse_double(format_double(v), "k") == v);
        CHECK(parse_double(format_shortest(v), "k") == v);
    }
    CHECK(format_shortest(1e-5) == "1e-05");
    CHECK(format_shortest(2000.0) == "2000");
}

TEST_CASE("parameter access by path") {
    SimConfig cfg = reference_design();
    CHECK(is_numeric_parameter("design.spring_k"));
    CHECK_FALSE(is_numeric_parameter("gait.shape"));
    CHECK_FALSE(is_numeric_parameter("design.bogus"));
    set_parameter(cfg, "design.coil_turns", 750.0);
    CHECK(get_parameter(cfg, "design.coil_turns") == 750.0);
    CHECK(cfg.design.coil_turns == 750.0);
    CHECK_THROWS_AS(set_parameter(cfg, "design.bogus", 1.0), ConfigError);
}

TEST_CASE("serialize then parse is the identity on random configs") {
    std::mt19937_64 rng(20260101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        SimConfig cfg = reference_design();
        cfg.dt = 1e-6 + u(rng) * 1e-5;
        cfg.duration = 1.0 + u(rng) * 50.0;
        cfg.record_stride = 1 + static_cast<int>(u(rng) * 500);
        cfg.coupling = u(rng) < 0.5;
        cfg.design.moving_mass = 0.001 + u(rng);
        cfg.design.spring_k = 10.0 + u(rng) * 1e4;
        cfg.design.mech_damping = u(rng);
        cfg.design.stroke_limit = 0.001 + u(rng) * 0.005;
        cfg.design.end_gap = cfg.design.stroke_limit + 0.001 + u(rng) * 0.01;
        cfg.design.coil_turns = 1 + u(rng) * 5000;
        cfg.design.coil_radius = 0.001 + u(rng) * 0.02;
        cfg.design.coil_resistance = 0.1 + u(rng) * 500;
        cfg.design.coil_inductance = u(rng) * 0.01;
        cfg.design.magnet_moment = u(rng) * 5;
        cfg.design.end_magnet_moment = u(rng) * 2;
        cfg.gait.cadence = 0.5 + u(rng) * 2;
        cfg.gait.peak_force = u(rng) * 1000;
        cfg.gait.duty = 0.01 + u(rng) * 0.9;
        cfg.gait.force_fraction = u(rng);
        cfg.gait.shape = u(rng) < 0.5 ? PulseShape::half_sine : PulseShape::trapezoid;
        cfg.circuit.diode.kind = u(rng) < 0.5 ? DiodeKind::shockley : DiodeKind::constant_drop;
        cfg.circuit.diode.forward_drop = u(rng);
        cfg.circuit.diode.saturation_current = 1e-9 + u(rng) * 1e-5;
        cfg.circuit.diode.ideality = 1 + u(rng);
        cfg.circuit.diode.thermal_voltage = 0.02 + u(rng) * 0.01;
        cfg.circuit.smoothing_cap = 1e-6 + u(rng) * 1e-3;
        const double pick = u(rng);
        cfg.circuit.load.kind = pick < 0.4 ? LoadKind::resistor : pick < 0.7 ? LoadKind::battery : LoadKind::open;
        cfg.circuit.load.resistance = 1 + u(rng) * 1e6;
        cfg.circuit.load.battery.nominal_voltage = 1 + u(rng) * 4;
        cfg.circuit.load.battery.internal_resistance = u(rng) * 20;
        cfg.circuit.load.battery.capacity = 1 + u(rng) * 500;
        cfg.circuit.load.battery.initial_charge = u(rng) * cfg.circuit.load.battery.capacity;
        cfg.circuit.cap_initial_voltage = u(rng) * 10;
        REQUIRE_NOTHROW(validate(cfg));
        CHECK(parse_config(serialize_config(cfg)) == cfg);
    }
}

TEST_CASE("every key appears once in the serialized form") {
    const std::string text = serialize_config(reference_design());
    for (const auto& key : config_keys()) {
        const auto first = text.find(key + " =");
        CHECK(first != std::string::npos);
        CHECK(text.find(key + " =", first + 1) == std::string::npos);
    }
}
