#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "argtree/schema.hpp"

namespace argtree {

/// The global register: every available module descriptor by name, plus the names of
/// optional modules that could not be made available and why.
///
/// A registry is populated once and then shared as `const Registry&`; every query is
/// const and safe to call from any number of threads.
class Registry {
public:
    /// Throws DuplicateName or InvalidDescriptor.
    Registry& add(ModuleDescriptor d);

    /// Throws DuplicateName if `name` is already available.
    Registry& add_missing(std::string name, std::string reason, std::string install_hint = "");

    /// How to make a missing module available; empty when unknown.
    std::string_view install_hint(std::string_view name) const;

    /// Surrounding whitespace in `name` is ignored. Throws UnknownModule or MissingModule.
    const ModuleDescriptor& lookup(std::string_view name) const;

    /// nullptr instead of throwing.
    const ModuleDescriptor* find(std::string_view name) const;

    bool is_missing(std::string_view name) const;

    /// Descriptors of `kind` whose tags contain every pair of `tag_filter`, sorted by name.
    /// A kind of "*" matches every kind.
    std::vector<const ModuleDescriptor*> filter(std::string_view kind, const TagMap& tag_filter = {}) const;

    const std::map<std::string, ModuleDescriptor, std::less<>>& descriptors() const { return descriptors_; }
    const std::map<std::string, std::string, std::less<>>& missing() const { return missing_; }

    std::vector<std::string> kinds() const;
    std::size_t size() const { return descriptors_.size(); }

private:
    std::map<std::string, ModuleDescriptor, std::less<>> descriptors_;
    std::map<std::string, std::string, std::less<>> missing_;
    std::map<std::string, std::string, std::less<>> hints_;
};

std::string_view trim(std::string_view text);

}  // namespace argtree
