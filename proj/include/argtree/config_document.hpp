#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "argtree/schema.hpp"
#include "argtree/value.hpp"

namespace argtree {

/// "cls_trainer"
struct SelectionKey {
    std::string req_key;
    bool operator==(const SelectionKey&) const = default;
};

/// "{cls_trainer}.max_epochs" (index 0, not explicit) or "{cls_callbacks#1}.top_n".
struct WildcardArgKey {
    std::string req_key;
    std::size_t index = 0;
    bool explicit_index = false;
    std::string arg_name;
    bool operator==(const WildcardArgKey&) const = default;
};

/// "SimpleTrainer.max_epochs"
struct ExplicitArgKey {
    std::string class_name;
    std::string arg_name;
    bool operator==(const ExplicitArgKey&) const = default;
};

using KeyForm = std::variant<SelectionKey, WildcardArgKey, ExplicitArgKey>;

/// Throws MalformedKey.
KeyForm parse_key(std::string_view key);
std::optional<KeyForm> try_parse_key(std::string_view key);

std::string selection_key(std::string_view req_key);
std::string wildcard_key(std::string_view req_key, std::size_t index, std::string_view arg);
std::string plain_wildcard_key(std::string_view req_key, std::string_view arg);
std::string explicit_key(std::string_view class_name, std::string_view arg);

using PlaceholderEnv = std::map<std::string, std::string, std::less<>>;

/// path_tmp -> <temp dir>/argtree
PlaceholderEnv default_env();

/// A flat experiment configuration: key -> raw scalar value, in insertion order, plus the
/// set of keys that have been read while building a tree.
class ConfigDocument {
public:
    using Entry = std::pair<std::string, Scalar>;

    /// Inserts or replaces in place. Throws MalformedKey / NonScalarValue.
    void set(std::string key, Scalar value);
    bool erase(std::string_view key);

    const Scalar* find(std::string_view key) const;
    bool contains(std::string_view key) const { return find(key) != nullptr; }

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    void mark_consumed(std::string_view key);
    bool is_consumed(std::string_view key) const;
    const std::set<std::string, std::less<>>& consumed() const { return consumed_; }
    std::vector<std::string> unconsumed_keys() const;
    void reset_consumed() { consumed_.clear(); }

    /// Pretty JSON object, one entry per line, in insertion order.
    std::string to_json_text() const;

    /// Same entries regardless of order or consumed state.
    bool same_entries(const ConfigDocument& other) const;

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t, std::less<>> index_;
    std::set<std::string, std::less<>> consumed_;
};

/// Throws SyntaxError, NonScalarValue, MalformedKey.
ConfigDocument parse_document(std::string_view text);

/// Splits the selection value of `req_key` on commas. Marks the key consumed.
std::vector<std::string> get_used_classes(ConfigDocument& doc, std::string_view req_key);

/// Keys that could supply `arg` for the node (req_key, index, class_name), in precedence order.
std::vector<std::string> applicable_keys(std::string_view req_key, std::size_t index, std::string_view class_name,
                                         std::string_view arg);

/// Resolves one argument value; placeholders in string values are expanded with `env`
/// before coercion. Throws AmbiguousValue, CoercionError, UnknownPlaceholder.
Scalar get_used_value(ConfigDocument& doc, std::string_view req_key, std::size_t index, std::string_view class_name,
                      const ArgumentSpec& arg, const PlaceholderEnv& env = {});

/// Replaces "{name}" tokens; "{cls_...}" tokens are left alone. Throws UnknownPlaceholder.
std::string expand_placeholders(std::string_view raw, const PlaceholderEnv& env);

/// Applies "key=value" pairs in order (later wins). Throws MalformedKey.
ConfigDocument merge_overrides(const ConfigDocument& doc, const std::vector<std::string>& overrides);
ConfigDocument merge_overrides(const ConfigDocument& doc, const std::vector<std::pair<std::string, Scalar>>& overrides);

}  // namespace argtree
