#include "argtree/config_document.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>

#include "argtree/errors.hpp"
#include "argtree/registry.hpp"

namespace argtree {

std::optional<KeyForm> try_parse_key(std::string_view key) {
    if (key.empty()) return std::nullopt;
    if (key.front() == '{') {
        auto close = key.find("}.");
        if (close == std::string_view::npos) return std::nullopt;
        std::string_view inner = key.substr(1, close - 1);
        std::string_view arg = key.substr(close + 2);
        if (!is_argument_name(arg)) return std::nullopt;
        WildcardArgKey form;
        form.arg_name = std::string(arg);
        if (auto hash = inner.find('#'); hash != std::string_view::npos) {
            std::string_view digits = inner.substr(hash + 1);
            inner = inner.substr(0, hash);
            if (digits.empty() || digits.size() > 9 ||
                !std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
                return std::nullopt;
            form.index = std::stoul(std::string(digits));
            form.explicit_index = true;
        }
        if (!is_requirement_key(inner)) return std::nullopt;
        form.req_key = std::string(inner);
        return form;
    }
    if (auto dot = key.find('.'); dot != std::string_view::npos) {
        std::string_view cls = key.substr(0, dot);
        std::string_view arg = key.substr(dot + 1);
        if (!is_identifier(cls) || cls.substr(0, 4) == "cls_" || !is_argument_name(arg)) return std::nullopt;
        return ExplicitArgKey{std::string(cls), std::string(arg)};
    }
    if (is_requirement_key(key)) return SelectionKey{std::string(key)};
    return std::nullopt;
}

KeyForm parse_key(std::string_view key) {
    auto form = try_parse_key(key);
    if (!form) throw MalformedKey(std::string(key));
    return *form;
}

std::string selection_key(std::string_view req_key) { return std::string(req_key); }

std::string wildcard_key(std::string_view req_key, std::size_t index, std::string_view arg) {
    return "{" + std::string(req_key) + "#" + std::to_string(index) + "}." + std::string(arg);
}

std::string plain_wildcard_key(std::string_view req_key, std::string_view arg) {
    return "{" + std::string(req_key) + "}." + std::string(arg);
}

std::string explicit_key(std::string_view class_name, std::string_view arg) {
    return std::string(class_name) + "." + std::string(arg);
}

PlaceholderEnv default_env() {
    std::error_code ec;
    auto tmp = std::filesystem::temp_directory_path(ec);
    if (ec) tmp = "/tmp";
    return {{"path_tmp", (tmp / "argtree").string()}};
}

void ConfigDocument::set(std::string key, Scalar value) {
    parse_key(key);
    if (is_null(value)) throw NonScalarValue(key);
    if (auto it = index_.find(key); it != index_.end()) {
        entries_[it->second].second = std::move(value);
        return;
    }
    index_.emplace(key, entries_.size());
    entries_.emplace_back(std::move(key), std::move(value));
}

bool ConfigDocument::erase(std::string_view key) {
    auto it = index_.find(key);
    if (it == index_.end()) return false;
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(it->second));
    consumed_.erase(std::string(key));
    index_.clear();
    for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].first, i);
    return true;
}

const Scalar* ConfigDocument::find(std::string_view key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &entries_[it->second].second;
}

void ConfigDocument::mark_consumed(std::string_view key) {
    if (contains(key)) consumed_.emplace(key);
}

bool ConfigDocument::is_consumed(std::string_view key) const { return consumed_.find(key) != consumed_.end(); }

std::vector<std::string> ConfigDocument::unconsumed_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : entries_) {
        if (!is_consumed(key)) out.push_back(key);
    }
    return out;
}

std::string ConfigDocument::to_json_text() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [key, value] : entries_) j[key] = to_json(value);
    return j.dump(2) + "\n";
}

bool ConfigDocument::same_entries(const ConfigDocument& other) const {
    if (size() != other.size()) return false;
    for (const auto& [key, value] : entries_) {
        const Scalar* v = other.find(key);
        if (!v || !(*v == value)) return false;
    }
    return true;
}

ConfigDocument parse_document(std::string_view text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SyntaxError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SyntaxError("configuration must be a JSON object");
    ConfigDocument doc;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_primitive() || value.is_null()) throw NonScalarValue(key);
        parse_key(key);
        doc.set(key, scalar_from_json(value));
    }
    return doc;
}

std::vector<std::string> get_used_classes(ConfigDocument& doc, std::string_view req_key) {
    std::vector<std::string> out;
    const Scalar* value = doc.find(req_key);
    if (!value) return out;
    doc.mark_consumed(req_key);
    std::string text = to_text(*value);
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        auto item = trim(std::string_view(text).substr(start, comma - start));
        if (!item.empty()) out.emplace_back(item);
        start = comma + 1;
    }
    return out;
}

std::vector<std::string> applicable_keys(std::string_view req_key, std::size_t index, std::string_view class_name,
                                         std::string_view arg) {
    std::vector<std::string> keys;
    keys.push_back(wildcard_key(req_key, index, arg));
    if (index == 0) keys.push_back(plain_wildcard_key(req_key, arg));
    keys.push_back(explicit_key(class_name, arg));
    return keys;
}

Scalar get_used_value(ConfigDocument& doc, std::string_view req_key, std::size_t index, std::string_view class_name,
                      const ArgumentSpec& arg, const PlaceholderEnv& env) {
    const Scalar* winner = nullptr;
    std::string winner_key;
    for (const auto& key : applicable_keys(req_key, index, class_name, arg.name)) {
        const Scalar* raw = doc.find(key);
        if (!raw) continue;
        doc.mark_consumed(key);
        if (!winner) {
            winner = raw;
            winner_key = key;
        } else if (!raw_equal(*winner, *raw)) {
            throw AmbiguousValue(winner_key, key);
        }
    }
    Scalar raw = winner ? *winner : arg.default_value;
    if (const auto* s = std::get_if<std::string>(&raw)) raw = expand_placeholders(*s, env);
    return coerce_value(arg, raw);
}

std::string expand_placeholders(std::string_view raw, const PlaceholderEnv& env) {
    std::string out;
    out.reserve(raw.size());
    std::size_t pos = 0;
    while (pos < raw.size()) {
        auto open = raw.find('{', pos);
        if (open == std::string_view::npos) break;
        auto close = raw.find('}', open + 1);
        if (close == std::string_view::npos) break;
        std::string_view name = raw.substr(open + 1, close - open - 1);
        out.append(raw.substr(pos, open - pos));
        if (!is_identifier(name) || name.substr(0, 4) == "cls_") {
            out.append(raw.substr(open, 1));
            pos = open + 1;
            continue;
        }
        auto it = env.find(name);
        if (it == env.end()) throw UnknownPlaceholder(std::string(name));
        out.append(it->second);
        pos = close + 1;
    }
    out.append(raw.substr(pos));
    return out;
}

ConfigDocument merge_overrides(const ConfigDocument& doc, const std::vector<std::pair<std::string, Scalar>>& overrides) {
    ConfigDocument out = doc;
    out.reset_consumed();
    for (const auto& [key, value] : overrides) out.set(key, value);
    return out;
}

ConfigDocument merge_overrides(const ConfigDocument& doc, const std::vector<std::string>& overrides) {
    std::vector<std::pair<std::string, Scalar>> pairs;
    for (const auto& text : overrides) {
        auto eq = text.find('=');
        if (eq == std::string::npos) throw MalformedKey(text);
        std::string key(trim(std::string_view(text).substr(0, eq)));
        pairs.emplace_back(key, parse_cli_value(std::string_view(text).substr(eq + 1)));
    }
    return merge_overrides(doc, pairs);
}

}  // namespace argtree
