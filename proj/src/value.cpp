#include "argtree/value.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace argtree {

std::string_view kind_name(ValueKind kind) {
    switch (kind) {
        case ValueKind::String: return "string";
        case ValueKind::Integer: return "integer";
        case ValueKind::Real: return "real";
        case ValueKind::Boolean: return "boolean";
    }
    return "string";
}

ValueKind parse_kind(std::string_view text) {
    if (text == "string") return ValueKind::String;
    if (text == "integer") return ValueKind::Integer;
    if (text == "real") return ValueKind::Real;
    if (text == "boolean") return ValueKind::Boolean;
    throw std::invalid_argument("unknown value kind '" + std::string(text) + "'");
}

bool is_null(const Scalar& v) { return std::holds_alternative<std::monostate>(v); }

bool raw_equal(const Scalar& a, const Scalar& b) {
    auto as_number = [](const Scalar& v, double& out) {
        if (const auto* i = std::get_if<std::int64_t>(&v)) {
            out = static_cast<double>(*i);
            return true;
        }
        if (const auto* d = std::get_if<double>(&v)) {
            out = *d;
            return true;
        }
        return false;
    };
    double x = 0;
    double y = 0;
    if (as_number(a, x) && as_number(b, y)) {
        if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b))
            return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
        return x == y;
    }
    return a == b;
}

namespace {

std::string real_text(double d) {
    if (!std::isfinite(d)) return std::isnan(d) ? "nan" : (d > 0 ? "inf" : "-inf");
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
    std::string s(buf, end);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

}  // namespace

std::string to_text(const Scalar& v) {
    struct Visitor {
        std::string operator()(std::monostate) const { return "null"; }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(double d) const { return real_text(d); }
        std::string operator()(const std::string& s) const { return s; }
    };
    return std::visit(Visitor{}, v);
}

std::string to_json_text(const Scalar& v) {
    if (std::holds_alternative<double>(v)) return real_text(std::get<double>(v));
    return to_json(v).dump();
}

nlohmann::json to_json(const Scalar& v) {
    struct Visitor {
        nlohmann::json operator()(std::monostate) const { return nullptr; }
        nlohmann::json operator()(bool b) const { return b; }
        nlohmann::json operator()(std::int64_t i) const { return i; }
        nlohmann::json operator()(double d) const { return d; }
        nlohmann::json operator()(const std::string& s) const { return s; }
    };
    return std::visit(Visitor{}, v);
}

namespace {

template <class Json>
Scalar from_json_impl(const Json& j) {
    switch (j.type()) {
        case nlohmann::json::value_t::null: return std::monostate{};
        case nlohmann::json::value_t::boolean: return j.template get<bool>();
        case nlohmann::json::value_t::number_integer: return j.template get<std::int64_t>();
        case nlohmann::json::value_t::number_unsigned: {
            auto u = j.template get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(INT64_MAX)) return static_cast<double>(u);
            return static_cast<std::int64_t>(u);
        }
        case nlohmann::json::value_t::number_float: return j.template get<double>();
        case nlohmann::json::value_t::string: return j.template get<std::string>();
        default: throw std::invalid_argument("not a scalar: " + j.dump());
    }
}

}  // namespace

Scalar scalar_from_json(const nlohmann::json& j) { return from_json_impl(j); }
Scalar scalar_from_json(const nlohmann::ordered_json& j) { return from_json_impl(j); }

Scalar parse_cli_value(std::string_view text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (!j.is_discarded() && (j.is_primitive() && !j.is_null())) return scalar_from_json(j);
    return std::string(text);
}

}  // namespace argtree
