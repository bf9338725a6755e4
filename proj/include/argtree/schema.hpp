#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "argtree/value.hpp"

namespace argtree {

/// Registration metadata value; only booleans and strings are allowed.
using TagValue = std::variant<bool, std::string>;
using TagMap = std::map<std::string, TagValue>;

std::string to_text(const TagValue& v);

/// One hyper-parameter of a module. Defaults are kept raw and coerced on demand.
struct ArgumentSpec {
    std::string name;
    ValueKind value_kind = ValueKind::String;
    Scalar default_value;
    std::string help;
    std::vector<std::string> choices;
};

inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

/// A declaration that a module needs between count_min and count_max children
/// of kind allowed_kind whose tags match tag_filter.
struct ChildRequirementSpec {
    std::string key;
    std::string allowed_kind;
    TagMap tag_filter;
    std::size_t count_min = 1;
    std::size_t count_max = 1;
    std::string help;
};

/// "0..*", "1..1", ...
std::string count_range_text(const ChildRequirementSpec& req);

struct ModuleDescriptor {
    std::string name;
    std::string kind;
    TagMap tags;
    std::vector<ArgumentSpec> arguments;
    std::vector<ChildRequirementSpec> child_requirements;
    std::string source;
    std::string help;

    const ArgumentSpec* find_argument(std::string_view arg) const;
    const ChildRequirementSpec* find_requirement(std::string_view key) const;
};

bool tags_match(const TagMap& tags, const TagMap& filter);

Scalar coerce_value(const ArgumentSpec& spec, const Scalar& raw);

enum class DescriptorViolationCode {
    EmptyName,
    EmptyKind,
    BadArgumentName,
    DuplicateArgument,
    BadDefault,
    DefaultNotInChoices,
    BadRequirementKey,
    DuplicateRequirement,
    BadCountRange,
};

std::string_view code_name(DescriptorViolationCode code);

struct DescriptorViolation {
    DescriptorViolationCode code;
    std::string subject;
    std::string detail;

    bool operator==(const DescriptorViolation& other) const {
        return code == other.code && subject == other.subject;
    }
};

std::vector<DescriptorViolation> validate_descriptor(const ModuleDescriptor& d);

bool is_identifier(std::string_view text);
bool is_requirement_key(std::string_view text);
bool is_argument_name(std::string_view text);

}  // namespace argtree
