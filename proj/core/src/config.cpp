#include "harvest/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace harvest {
namespace {

struct NumericKey {
    const char* key;
    double& (*ref)(SimConfig&);
};

// Order here is the serialization order.
const NumericKey kNumericKeys[] = {
    {"sim.dt", [](SimConfig& c) -> double& { return c.dt; }},
    {"sim.duration", [](SimConfig& c) -> double& { return c.duration; }},
    {"design.moving_mass", [](SimConfig& c) -> double& { return c.design.moving_mass; }},
    {"design.spring_k", [](SimConfig& c) -> double& { return c.design.spring_k; }},
    {"design.mech_damping", [](SimConfig& c) -> double& { return c.design.mech_damping; }},
    {"design.stroke_limit", [](SimConfig& c) -> double& { return c.design.stroke_limit; }},
    {"design.coil_turns", [](SimConfig& c) -> double& { return c.design.coil_turns; }},
    {"design.coil_radius", [](SimConfig& c) -> double& { return c.design.coil_radius; }},
    {"design.coil_resistance", [](SimConfig& c) -> double& { return c.design.coil_resistance; }},
    {"design.coil_inductance", [](SimConfig& c) -> double& { return c.design.coil_inductance; }},
    {"design.magnet_moment", [](SimConfig& c) -> double& { return c.design.magnet_moment; }},
    {"design.end_magnet_moment", [](SimConfig& c) -> double& { return c.design.end_magnet_moment; }},
    {"design.end_gap", [](SimConfig& c) -> double& { return c.design.end_gap; }},
    {"gait.cadence", [](SimConfig& c) -> double& { return c.gait.cadence; }},
    {"gait.peak_force", [](SimConfig& c) -> double& { return c.gait.peak_force; }},
    {"gait.duty", [](SimConfig& c) -> double& { return c.gait.duty; }},
    {"gait.force_fraction", [](SimConfig& c) -> double& { return c.gait.force_fraction; }},
    {"circuit.diode.forward_drop", [](SimConfig& c) -> double& { return c.circuit.diode.forward_drop; }},
    {"circuit.diode.saturation_current",
     [](SimConfig& c) -> double& { return c.circuit.diode.saturation_current; }},
    {"circuit.diode.ideality", [](SimConfig& c) -> double& { return c.circuit.diode.ideality; }},
    {"circuit.diode.thermal_voltage",
     [](SimConfig& c) -> double& { return c.circuit.diode.thermal_voltage; }},
    {"circuit.smoothing_cap", [](SimConfig& c) -> double& { return c.circuit.smoothing_cap; }},
    {"circuit.load_resistance", [](SimConfig& c) -> double& { return c.circuit.load.resistance; }},
    {"circuit.battery.nominal_voltage",
     [](SimConfig& c) -> double& { return c.circuit.load.battery.nominal_voltage; }},
    {"circuit.battery.internal_resistance",
     [](SimConfig& c) -> double& { return c.circuit.load.battery.internal_resistance; }},
    {"circuit.battery.capacity", [](SimConfig& c) -> double& { return c.circuit.load.battery.capacity; }},
    {"circuit.battery.initial_charge",
     [](SimConfig& c) -> double& { return c.circuit.load.battery.initial_charge; }},
    {"circuit.cap_initial_voltage", [](SimConfig& c) -> double& { return c.circuit.cap_initial_voltage; }},
};

const NumericKey* find_numeric(std::string_view key) {
    for (const auto& k : kNumericKeys) {
        if (key == k.key) return &k;
    }
    return nullptr;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    std::string msg(key);
    msg += ": expected ";
    msg += expected;
    msg += ", got '";
    msg += value;
    msg += "'";
    throw ConfigError(msg);
}

bool parse_bool(std::string_view v, std::string_view key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v, "true or false");
}

}  // namespace

std::string_view trim(std::string_view s) noexcept {
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    (void)ec;
    return {buf, ptr};
}

std::string format_shortest(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    (void)ec;
    return {buf, ptr};
}

double parse_double(std::string_view text, std::string_view key) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        bad_value(key, text, "a number");
    }
    return out;
}

std::vector<KeyValue> parse_key_values(std::string_view text) {
    std::vector<KeyValue> out;
    std::set<std::string, std::less<>> seen;
    int line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" +
                              std::string(line) + "'");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (!seen.emplace(key).second) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
        }
        out.push_back({std::string(key), std::string(value), line_no});
    }
    return out;
}

void apply_setting(SimConfig& cfg, std::string_view key, std::string_view value) {
    value = trim(value);
    if (const auto* nk = find_numeric(key)) {
        nk->ref(cfg) = parse_double(value, key);
    } else if (key == "sim.record_stride") {
        const double v = parse_double(value, key);
        if (v != static_cast<double>(static_cast<int>(v))) bad_value(key, value, "an integer");
        cfg.record_stride = static_cast<int>(v);
    } else if (key == "sim.coupling") {
        cfg.coupling = parse_bool(value, key);
    } else if (key == "gait.shape") {
        if (value == "half_sine") cfg.gait.shape = PulseShape::half_sine;
        else if (value == "trapezoid") cfg.gait.shape = PulseShape::trapezoid;
        else bad_value(key, value, "half_sine or trapezoid");
    } else if (key == "circuit.diode.kind") {
        if (value == "constant_drop") cfg.circuit.diode.kind = DiodeKind::constant_drop;
        else if (value == "shockley") cfg.circuit.diode.kind = DiodeKind::shockley;
        else bad_value(key, value, "constant_drop or shockley");
    } else if (key == "circuit.load") {
        if (value == "resistor") cfg.circuit.load.kind = LoadKind::resistor;
        else if (value == "battery") cfg.circuit.load.kind = LoadKind::battery;
        else if (value == "open") cfg.circuit.load.kind = LoadKind::open;
        else bad_value(key, value, "resistor, battery or open");
    } else {
        throw ConfigError("unknown key '" + std::string(key) + "'");
    }
}

SimConfig parse_config(std::string_view text) {
    SimConfig cfg = reference_design();
    for (const auto& kv : parse_key_values(text)) {
        if (kv.key.rfind("optimize.", 0) == 0) continue;
        try {
            apply_setting(cfg, kv.key, kv.value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(kv.line) + ": " + e.what());
        }
    }
    validate(cfg);
    return cfg;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SimConfig load_config(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return parse_config(text);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string serialize_config(const SimConfig& cfg) {
    std::string out;
    auto put = [&out](std::string_view key, std::string_view value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    auto& mut = const_cast<SimConfig&>(cfg);
    for (const auto& k : kNumericKeys) {
        put(k.key, format_shortest(k.ref(mut)));
        if (std::string_view(k.key) == "sim.duration") {
            put("sim.record_stride", std::to_string(cfg.record_stride));
            put("sim.coupling", cfg.coupling ? "true" : "false");
        } else if (std::string_view(k.key) == "gait.force_fraction") {
            put("gait.shape", to_string(cfg.gait.shape));
            put("circuit.diode.kind", to_string(cfg.circuit.diode.kind));
        } else if (std::string_view(k.key) == "circuit.smoothing_cap") {
            put("circuit.load", to_string(cfg.circuit.load.kind));
        }
    }
    return out;
}

bool is_numeric_parameter(std::string_view path) { return find_numeric(path) != nullptr; }

double get_parameter(const SimConfig& cfg, std::string_view path) {
    const auto* nk = find_numeric(path);
    if (nk == nullptr) throw ConfigError("unknown numeric parameter '" + std::string(path) + "'");
    return nk->ref(const_cast<SimConfig&>(cfg));
}

void set_parameter(SimConfig& cfg, std::string_view path, double value) {
    const auto* nk = find_numeric(path);
    if (nk == nullptr) throw ConfigError("unknown numeric parameter '" + std::string(path) + "'");
    nk->ref(cfg) = value;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& kv : parse_key_values(serialize_config(reference_design()))) keys.push_back(kv.key);
    return keys;
}

}  // namespace harvest
