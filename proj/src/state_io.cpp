#include "argtree/state_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "argtree/errors.hpp"

namespace argtree {

bool operator==(const SubmoduleValue& a, const SubmoduleValue& b) {
    return a.is_list == b.is_list && a.items == b.items;
}

bool operator==(const ModuleState& a, const ModuleState& b) {
    return a.name == b.name && a.kwargs == b.kwargs && a.submodules == b.submodules;
}

nlohmann::json state_to_json(const ModuleState& s) {
    nlohmann::json kwargs = nlohmann::json::object();
    for (const auto& [k, v] : s.kwargs) kwargs[k] = to_json(v);
    nlohmann::json subs = nlohmann::json::object();
    for (const auto& [slot, value] : s.submodules) {
        if (value.is_list) {
            nlohmann::json list = nlohmann::json::array();
            for (const auto& item : value.items) list.push_back(state_to_json(item));
            subs[slot] = std::move(list);
        } else if (!value.items.empty()) {
            subs[slot] = state_to_json(value.items.front());
        }
    }
    return {{"name", s.name}, {"kwargs", std::move(kwargs)}, {"submodules", std::move(subs)}};
}

ModuleState state_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SyntaxError("module state must be a JSON object");
    ModuleState s;
    for (const auto& [key, value] : j.items()) {
        if (key == "name") {
            if (!value.is_string()) throw SyntaxError("module state 'name' must be a string");
            s.name = value.get<std::string>();
        } else if (key == "kwargs") {
            if (!value.is_object()) throw SyntaxError("'kwargs' must be an object");
            for (const auto& [k, v] : value.items()) {
                if (!v.is_primitive()) throw SyntaxError("kwarg '" + k + "' must be a scalar");
                s.kwargs[k] = scalar_from_json(v);
            }
        } else if (key == "submodules") {
            if (!value.is_object()) throw SyntaxError("'submodules' must be an object");
            for (const auto& [slot, v] : value.items()) {
                SubmoduleValue sub;
                if (v.is_array()) {
                    sub.is_list = true;
                    for (const auto& item : v) sub.items.push_back(state_from_json(item));
                } else {
                    sub.items.push_back(state_from_json(v));
                }
                s.submodules.emplace(slot, std::move(sub));
            }
        } else {
            throw SyntaxError("unexpected field '" + key + "' in module state");
        }
    }
    if (s.name.empty()) throw SyntaxError("module state without 'name'");
    return s;
}

std::string canonical_serialize(const ModuleState& s) { return state_to_json(s).dump(); }

ModuleState parse_state(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SyntaxError(std::string("invalid JSON: ") + e.what());
    }
    return state_from_json(j);
}

// ---------------------------------------------------------------------------

BuildableModule::BuildableModule(const ModuleDescriptor& descriptor, ModuleArgs args)
    : descriptor_(descriptor), kwargs_(std::move(args.kwargs)), submodules_(std::move(args.submodules)) {}

Scalar BuildableModule::arg(std::string_view name) const {
    if (auto it = kwargs_.find(std::string(name)); it != kwargs_.end()) return it->second;
    const auto* spec = descriptor_.find_argument(name);
    if (!spec) throw Error("module '" + type_name() + "' has no argument '" + std::string(name) + "'");
    return coerce_value(*spec, spec->default_value);
}

std::int64_t BuildableModule::arg_int(std::string_view name) const { return std::get<std::int64_t>(arg(name)); }
double BuildableModule::arg_real(std::string_view name) const { return std::get<double>(arg(name)); }
bool BuildableModule::arg_bool(std::string_view name) const { return std::get<bool>(arg(name)); }
std::string BuildableModule::arg_string(std::string_view name) const { return std::get<std::string>(arg(name)); }

std::vector<BuildableModule*> BuildableModule::slot(std::string_view name) const {
    std::vector<BuildableModule*> out;
    if (auto it = submodules_.find(std::string(name)); it != submodules_.end()) {
        for (const auto& m : it->second.modules) out.push_back(m.get());
    }
    return out;
}

BuildableModule* BuildableModule::first(std::string_view name) const {
    auto modules = slot(name);
    return modules.empty() ? nullptr : modules.front();
}

ModuleState BuildableModule::plain_state(bool finalize, const SelectionProvider& selection) const {
    ModuleState s;
    s.name = type_name();
    s.kwargs = kwargs_;
    for (const auto& [name, built] : submodules_) {
        if (built.modules.empty()) continue;
        SubmoduleValue value;
        value.is_list = built.is_list;
        for (const auto& m : built.modules) value.items.push_back(m->state_config(finalize, selection));
        s.submodules.emplace(name, std::move(value));
    }
    return s;
}

ModuleState BuildableModule::state_config(bool finalize, const SelectionProvider& selection) const {
    return plain_state(finalize, selection);
}

void ModuleFactory::add(std::string name, BuilderEntry entry) { entries_[std::move(name)] = std::move(entry); }

const BuilderEntry* ModuleFactory::find(std::string_view name) const {
    auto it = entries_.find(name);
    return it == entries_.end() ? nullptr : &it->second;
}

ModuleState export_state(const BuildableModule& module, bool finalize, const SelectionProvider& selection) {
    return module.state_config(finalize, selection);
}

ModulePtr import_state(const Registry& registry, const ModuleFactory& factory, const ModuleState& state) {
    const ModuleDescriptor& d = registry.lookup(state.name);
    const BuilderEntry* entry = factory.find(d.name);
    if (!entry) throw ConstructionError(d.name, "no constructor is registered for this module");

    ModuleArgs args;
    for (const auto& [key, raw] : state.kwargs) {
        const ArgumentSpec* spec = d.find_argument(key);
        if (!spec) throw ConstructionError(d.name, "unexpected keyword argument '" + key + "'");
        try {
            args.kwargs[key] = coerce_value(*spec, raw);
        } catch (const CoercionError& e) {
            throw ConstructionError(d.name, e.what());
        }
    }
    for (const auto& [slot_name, value] : state.submodules) {
        auto spec = std::find_if(entry->slots.begin(), entry->slots.end(),
                                 [&](const SlotSpec& s) { return s.name == slot_name; });
        if (spec == entry->slots.end()) throw ConstructionError(d.name, "unknown submodule slot '" + slot_name + "'");
        if (spec->is_list != value.is_list || (!value.is_list && value.items.size() != 1)) {
            throw ConstructionError(d.name, "submodule slot '" + slot_name + "' expects " +
                                                (spec->is_list ? "a list" : "a single module"));
        }
        BuiltSlot built;
        built.is_list = spec->is_list;
        for (const auto& item : value.items) {
            auto child = import_state(registry, factory, item);
            if (!spec->kinds.empty() &&
                std::find(spec->kinds.begin(), spec->kinds.end(), child->descriptor().kind) == spec->kinds.end()) {
                throw ConstructionError(d.name, "submodule '" + child->type_name() + "' of kind " +
                                                    child->descriptor().kind + " does not fit slot '" + slot_name + "'");
            }
            built.modules.push_back(std::move(child));
        }
        args.submodules.emplace(slot_name, std::move(built));
    }
    for (const auto& spec : entry->slots) {
        if (!args.submodules.count(spec.name)) args.submodules.emplace(spec.name, BuiltSlot{spec.is_list, {}});
    }

    try {
        return entry->make(d, std::move(args));
    } catch (const argtree::Error&) {
        throw;
    } catch (const std::exception& e) {
        throw ConstructionError(d.name, e.what());
    }
}

void save_state_file(const std::string& path, const ModuleState& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << canonical_serialize(s);
}

ModuleState load_state_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_state(ss.str());
}

}  // namespace argtree
