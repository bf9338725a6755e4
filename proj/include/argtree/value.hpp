#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"

namespace argtree {

/// Scalar payload shared by config entries, typed argument values and state kwargs.
/// std::monostate stands for JSON null and is never a valid argument value.
using Scalar = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

enum class ValueKind { String, Integer, Real, Boolean };

std::string_view kind_name(ValueKind kind);
ValueKind parse_kind(std::string_view text);

bool is_null(const Scalar& v);

/// Compares raw values with JSON number semantics (1 == 1.0).
bool raw_equal(const Scalar& a, const Scalar& b);

/// Plain text form used in listings, search and choice checks ("3", "0.5", "true", "cpu").
std::string to_text(const Scalar& v);

/// JSON literal form ("3", "0.5", "true", "\"cpu\"").
std::string to_json_text(const Scalar& v);

nlohmann::json to_json(const Scalar& v);

/// Throws std::invalid_argument for arrays and objects.
Scalar scalar_from_json(const nlohmann::json& j);
Scalar scalar_from_json(const nlohmann::ordered_json& j);

/// Interprets command-line text: JSON literals (numbers, true/false, quoted strings) keep
/// their JSON type, anything else is taken verbatim as a string.
Scalar parse_cli_value(std::string_view text);

}  // namespace argtree
