#include "argtree/registry.hpp"

#include <algorithm>
#include <set>

#include "argtree/errors.hpp"

namespace argtree {

std::string_view trim(std::string_view text) {
    constexpr std::string_view ws = " \t\r\n";
    auto first = text.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    auto last = text.find_last_not_of(ws);
    return text.substr(first, last - first + 1);
}

Registry& Registry::add(ModuleDescriptor d) {
    if (descriptors_.count(d.name) || missing_.count(d.name)) throw DuplicateName(d.name);
    auto violations = validate_descriptor(d);
    if (!violations.empty()) {
        std::string msg = "descriptor '" + d.name + "' is invalid:";
        for (const auto& v : violations) msg += " " + std::string(code_name(v.code)) + "(" + v.subject + ")";
        throw InvalidDescriptor(msg);
    }
    std::string name = d.name;
    descriptors_.emplace(std::move(name), std::move(d));
    return *this;
}

Registry& Registry::add_missing(std::string name, std::string reason, std::string install_hint) {
    if (descriptors_.count(name) || missing_.count(name)) throw DuplicateName(name);
    if (!install_hint.empty()) hints_.emplace(name, std::move(install_hint));
    missing_.emplace(std::move(name), std::move(reason));
    return *this;
}

std::string_view Registry::install_hint(std::string_view name) const {
    auto it = hints_.find(trim(name));
    return it == hints_.end() ? std::string_view{} : std::string_view(it->second);
}

const ModuleDescriptor* Registry::find(std::string_view name) const {
    auto it = descriptors_.find(trim(name));
    return it == descriptors_.end() ? nullptr : &it->second;
}

bool Registry::is_missing(std::string_view name) const { return missing_.find(trim(name)) != missing_.end(); }

const ModuleDescriptor& Registry::lookup(std::string_view name) const {
    auto key = trim(name);
    if (const auto* d = find(key)) return *d;
    if (auto it = missing_.find(key); it != missing_.end()) throw MissingModule(it->first, it->second);
    throw UnknownModule(std::string(key));
}

std::vector<const ModuleDescriptor*> Registry::filter(std::string_view kind, const TagMap& tag_filter) const {
    std::vector<const ModuleDescriptor*> out;
    for (const auto& [name, d] : descriptors_) {
        if ((kind == "*" || d.kind == kind) && tags_match(d.tags, tag_filter)) out.push_back(&d);
    }
    return out;
}

std::vector<std::string> Registry::kinds() const {
    std::set<std::string> kinds;
    for (const auto& [name, d] : descriptors_) kinds.insert(d.kind);
    return {kinds.begin(), kinds.end()};
}

}  // namespace argtree
