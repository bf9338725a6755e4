#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "argtree/registry.hpp"
#include "argtree/value.hpp"

namespace argtree {

struct ModuleState;

/// One submodule slot of a state: a single module or a list of modules.
struct SubmoduleValue {
    bool is_list = false;
    std::vector<ModuleState> items;
};

/// Recursive {name, kwargs, submodules} description of a built module.
struct ModuleState {
    std::string name;
    std::map<std::string, Scalar> kwargs;
    std::map<std::string, SubmoduleValue> submodules;
};

bool operator==(const SubmoduleValue& a, const SubmoduleValue& b);
bool operator==(const ModuleState& a, const ModuleState& b);

nlohmann::json state_to_json(const ModuleState& s);
/// Throws SyntaxError on shape errors.
ModuleState state_from_json(const nlohmann::json& j);

/// Sorted keys, no whitespace, shortest round-trip numbers; reals always carry a '.' or exponent.
std::string canonical_serialize(const ModuleState& s);
/// Throws SyntaxError.
ModuleState parse_state(std::string_view text);

/// Candidate indices chosen per multi-candidate node name.
struct SelectionProvider {
    std::map<std::string, std::vector<long long>, std::less<>> selections;
};

/// Submodule slot a buildable kind accepts. `kinds` empty means any registered kind.
struct SlotSpec {
    std::string name;
    std::vector<std::string> kinds;
    bool is_list = false;
};

class BuildableModule;
using ModulePtr = std::unique_ptr<BuildableModule>;

struct BuiltSlot {
    bool is_list = false;
    std::vector<ModulePtr> modules;
};

/// Constructor input: the kwargs that were given (already coerced) and rebuilt submodules.
struct ModuleArgs {
    std::map<std::string, Scalar> kwargs;
    std::map<std::string, BuiltSlot> submodules;
};

/// A constructed module that can describe itself as a ModuleState.
class BuildableModule {
public:
    BuildableModule(const ModuleDescriptor& descriptor, ModuleArgs args);
    virtual ~BuildableModule() = default;

    BuildableModule(const BuildableModule&) = delete;
    BuildableModule& operator=(const BuildableModule&) = delete;

    const ModuleDescriptor& descriptor() const { return descriptor_; }
    const std::string& type_name() const { return descriptor_.name; }

    /// Only the kwargs given at construction; defaults are not materialized.
    const std::map<std::string, Scalar>& kwargs() const { return kwargs_; }

    /// Given kwarg, or the coerced descriptor default.
    Scalar arg(std::string_view name) const;
    std::int64_t arg_int(std::string_view name) const;
    double arg_real(std::string_view name) const;
    bool arg_bool(std::string_view name) const;
    std::string arg_string(std::string_view name) const;

    const std::map<std::string, BuiltSlot>& submodules() const { return submodules_; }
    /// Modules in `slot`, empty when the slot is absent.
    std::vector<BuildableModule*> slot(std::string_view slot) const;
    BuildableModule* first(std::string_view slot) const;

    /// Default: own name and kwargs, submodules exported recursively with the same flags.
    virtual ModuleState state_config(bool finalize, const SelectionProvider& selection) const;

protected:
    ModuleState plain_state(bool finalize, const SelectionProvider& selection) const;

private:
    ModuleDescriptor descriptor_;
    std::map<std::string, Scalar> kwargs_;
    std::map<std::string, BuiltSlot> submodules_;
};

using ModuleMaker = std::function<ModulePtr(const ModuleDescriptor&, ModuleArgs)>;

struct BuilderEntry {
    std::vector<SlotSpec> slots;
    ModuleMaker make;
};

/// Constructors for buildable module names; the registry supplies the descriptors.
class ModuleFactory {
public:
    void add(std::string name, BuilderEntry entry);
    const BuilderEntry* find(std::string_view name) const;
    const std::map<std::string, BuilderEntry, std::less<>>& entries() const { return entries_; }

private:
    std::map<std::string, BuilderEntry, std::less<>> entries_;
};

ModuleState export_state(const BuildableModule& module, bool finalize, const SelectionProvider& selection = {});

/// Depth-first rebuild: submodules first, then the named module.
/// Throws UnknownModule, MissingModule, ConstructionError.
ModulePtr import_state(const Registry& registry, const ModuleFactory& factory, const ModuleState& state);

/// Writes canonical_serialize(s) to `path`.
void save_state_file(const std::string& path, const ModuleState& s);
ModuleState load_state_file(const std::string& path);

}  // namespace argtree
