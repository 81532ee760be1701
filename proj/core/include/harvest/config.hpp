#pragma once

// Flat `key = value` config files with dotted keys (design.*, gait.*, circuit.*, sim.*).
//
//   # comment
//   gait.cadence = 1.0
//   circuit.load = resistor
//
// Keys not present keep their reference defaults. Keys under `optimize.` are
// accepted and ignored here; the optimize module reads them from the same file.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "harvest/model.hpp"

namespace harvest {

struct KeyValue {
    std::string key;
    std::string value;
    int line = 0;
};

/// Splits config text into entries. Throws ConfigError on malformed lines and duplicate keys.
[[nodiscard]] std::vector<KeyValue> parse_key_values(std::string_view text);

/// Parses and validates. Unknown keys (outside `optimize.`) are errors.
[[nodiscard]] SimConfig parse_config(std::string_view text);
[[nodiscard]] SimConfig load_config(const std::filesystem::path& path);

/// Reads a whole file; throws ConfigError naming the path when it cannot be opened.
[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

/// Every key, one per line, in a fixed order. parse_config(serialize_config(c)) == c.
[[nodiscard]] std::string serialize_config(const SimConfig& cfg);

/// Applies one textual setting (used by parse_config and the CLI's --set). Does not validate
/// the whole config; call validate() afterwards.
void apply_setting(SimConfig& cfg, std::string_view key, std::string_view value);

/// Numeric parameter access by dotted path, e.g. "design.spring_k".
[[nodiscard]] bool is_numeric_parameter(std::string_view path);
[[nodiscard]] double get_parameter(const SimConfig& cfg, std::string_view path);
void set_parameter(SimConfig& cfg, std::string_view path, double value);

[[nodiscard]] std::vector<std::string> config_keys();

/// Locale-independent, round-trip exact (17 significant digits).
[[nodiscard]] std::string format_double(double value);
/// Shortest text that parses back to the same double.
[[nodiscard]] std::string format_shortest(double value);
/// Strict parse: the whole string must be a number. Throws ConfigError mentioning `key`.
[[nodiscard]] double parse_double(std::string_view text, std::string_view key);

[[nodiscard]] std::string_view trim(std::string_view s) noexcept;

}  // namespace harvest
