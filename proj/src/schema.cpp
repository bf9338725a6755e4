#include "argtree/schema.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "argtree/errors.hpp"

namespace argtree {

std::string to_text(const TagValue& v) {
    if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    return std::get<std::string>(v);
}

std::string count_range_text(const ChildRequirementSpec& req) {
    std::string max = req.count_max == kUnbounded ? "*" : std::to_string(req.count_max);
    return std::to_string(req.count_min) + ".." + max;
}

const ArgumentSpec* ModuleDescriptor::find_argument(std::string_view arg) const {
    auto it = std::find_if(arguments.begin(), arguments.end(), [&](const ArgumentSpec& a) { return a.name == arg; });
    return it == arguments.end() ? nullptr : &*it;
}

const ChildRequirementSpec* ModuleDescriptor::find_requirement(std::string_view key) const {
    auto it = std::find_if(child_requirements.begin(), child_requirements.end(),
                           [&](const ChildRequirementSpec& r) { return r.key == key; });
    return it == child_requirements.end() ? nullptr : &*it;
}

bool tags_match(const TagMap& tags, const TagMap& filter) {
    for (const auto& [tag, value] : filter) {
        auto it = tags.find(tag);
        if (it == tags.end() || it->second != value) return false;
    }
    return true;
}

namespace {

[[noreturn]] void fail(const ArgumentSpec& spec, const Scalar& raw) {
    throw CoercionError(spec.name, to_json_text(raw), std::string(kind_name(spec.value_kind)));
}

bool parse_int(std::string_view s, std::int64_t& out) {
    s = std::string_view(s.data(), s.size());
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

bool parse_real(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty() && std::isfinite(out);
}

Scalar coerce_kind(const ArgumentSpec& spec, const Scalar& raw) {
    switch (spec.value_kind) {
        case ValueKind::Boolean:
            if (const auto* b = std::get_if<bool>(&raw)) return *b;
            if (const auto* s = std::get_if<std::string>(&raw)) {
                if (*s == "True" || *s == "true") return true;
                if (*s == "False" || *s == "false") return false;
            }
            fail(spec, raw);
        case ValueKind::Integer:
            if (const auto* i = std::get_if<std::int64_t>(&raw)) return *i;
            if (const auto* d = std::get_if<double>(&raw)) {
                if (std::isfinite(*d) && std::trunc(*d) == *d && std::fabs(*d) < 9.2e18)
                    return static_cast<std::int64_t>(*d);
            }
            if (const auto* s = std::get_if<std::string>(&raw)) {
                std::int64_t v = 0;
                if (parse_int(*s, v)) return v;
            }
            fail(spec, raw);
        case ValueKind::Real:
            if (const auto* d = std::get_if<double>(&raw)) {
                if (std::isfinite(*d)) return *d;
            }
            if (const auto* i = std::get_if<std::int64_t>(&raw)) return static_cast<double>(*i);
            if (const auto* s = std::get_if<std::string>(&raw)) {
                double v = 0;
                if (parse_real(*s, v)) return v;
            }
            fail(spec, raw);
        case ValueKind::String:
            if (const auto* s = std::get_if<std::string>(&raw)) return *s;
            if (is_null(raw)) fail(spec, raw);
            return to_text(raw);
    }
    fail(spec, raw);
}

}  // namespace

Scalar coerce_value(const ArgumentSpec& spec, const Scalar& raw) {
    Scalar value = coerce_kind(spec, raw);
    if (!spec.choices.empty()) {
        std::string text = to_text(value);
        if (std::find(spec.choices.begin(), spec.choices.end(), text) == spec.choices.end()) {
            std::string expected = "one of {";
            for (std::size_t i = 0; i < spec.choices.size(); ++i) expected += (i ? ", " : "") + spec.choices[i];
            throw CoercionError(spec.name, to_json_text(raw), expected + "}");
        }
    }
    return value;
}

std::string_view code_name(DescriptorViolationCode code) {
    switch (code) {
        case DescriptorViolationCode::EmptyName: return "EmptyName";
        case DescriptorViolationCode::EmptyKind: return "EmptyKind";
        case DescriptorViolationCode::BadArgumentName: return "BadArgumentName";
        case DescriptorViolationCode::DuplicateArgument: return "DuplicateArgument";
        case DescriptorViolationCode::BadDefault: return "BadDefault";
        case DescriptorViolationCode::DefaultNotInChoices: return "DefaultNotInChoices";
        case DescriptorViolationCode::BadRequirementKey: return "BadRequirementKey";
        case DescriptorViolationCode::DuplicateRequirement: return "DuplicateRequirement";
        case DescriptorViolationCode::BadCountRange: return "BadCountRange";
    }
    return "?";
}

bool is_identifier(std::string_view text) {
    if (text.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(text.front())) || text.front() == '_')) return false;
    return std::all_of(text.begin(), text.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

bool is_requirement_key(std::string_view text) {
    return text.size() > 4 && text.substr(0, 4) == "cls_" && is_identifier(text);
}

bool is_argument_name(std::string_view text) {
    if (text.empty()) return false;
    return std::none_of(text.begin(), text.end(), [](char c) {
        return c == '.' || c == '{' || c == '}' || c == '#' || c == ',' || c == '=' ||
               std::isspace(static_cast<unsigned char>(c));
    });
}

std::vector<DescriptorViolation> validate_descriptor(const ModuleDescriptor& d) {
    using Code = DescriptorViolationCode;
    std::vector<DescriptorViolation> out;
    if (!is_identifier(d.name)) out.push_back({Code::EmptyName, d.name, "module name must be an identifier"});
    if (d.kind.empty()) out.push_back({Code::EmptyKind, d.name, "module kind must not be empty"});

    std::set<std::string> seen_args;
    for (const auto& arg : d.arguments) {
        if (!is_argument_name(arg.name)) {
            out.push_back({Code::BadArgumentName, arg.name, "argument names must not contain . { } # , = or spaces"});
        }
        if (!seen_args.insert(arg.name).second) {
            out.push_back({Code::DuplicateArgument, arg.name, "argument declared more than once"});
        }
        try {
            coerce_value(ArgumentSpec{arg.name, arg.value_kind, arg.default_value, arg.help, {}}, arg.default_value);
            try {
                coerce_value(arg, arg.default_value);
            } catch (const CoercionError&) {
                out.push_back({Code::DefaultNotInChoices, arg.name, "default is not one of the choices"});
            }
        } catch (const CoercionError& e) {
            out.push_back({Code::BadDefault, arg.name, e.what()});
        }
    }

    std::set<std::string> seen_reqs;
    for (const auto& req : d.child_requirements) {
        if (!is_requirement_key(req.key)) {
            out.push_back({Code::BadRequirementKey, req.key, "requirement keys are identifiers starting with cls_"});
        }
        if (!seen_reqs.insert(req.key).second) {
            out.push_back({Code::DuplicateRequirement, req.key, "requirement declared more than once"});
        }
        if (req.count_max == 0 || req.count_min > req.count_max) {
            out.push_back({Code::BadCountRange, req.key, "count range " + count_range_text(req) + " is empty"});
        }
    }
    return out;
}

}  // namespace argtree
