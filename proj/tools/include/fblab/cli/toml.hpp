#pragma once

#include <istream>
#include <string>

#include <nlohmann/json.hpp>

namespace fblab::cli {

/// Reads the TOML subset used by experiment configs into JSON: comments,
/// [table] and [a.b] headers, dotted keys, basic strings, integers, floats,
/// booleans, (multi-line) arrays and inline tables. Dates, literal strings
/// and arrays of tables are rejected. Throws ConfigError with the line number.
nlohmann::json parse_toml(std::istream& in);
nlohmann::json parse_toml_string(const std::string& text);
nlohmann::json parse_toml_file(const std::string& path);

}  // namespace fblab::cli
