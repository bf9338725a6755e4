#include "network_modules.hpp"

#include "argtree/errors.hpp"

namespace argtree::demo {

namespace {

class NetworkModule : public BuildableModule {
public:
    using BuildableModule::BuildableModule;
};

class SingleLayerCell : public NetworkModule {
public:
    SingleLayerCell(const ModuleDescriptor& d, ModuleArgs args) : NetworkModule(d, std::move(args)) {
        if (!first("op")) throw ConstructionError(type_name(), "a cell needs exactly one 'op' submodule");
    }
};

/// Candidates are summed while training; finalization keeps only the selected ones.
class MixedOp : public NetworkModule {
public:
    MixedOp(const ModuleDescriptor& d, ModuleArgs args) : NetworkModule(d, std::move(args)) {
        if (slot("submodules").empty()) throw ConstructionError(type_name(), "needs at least one candidate");
    }

    ModuleState state_config(bool finalize, const SelectionProvider& selection) const override {
        if (!finalize) return plain_state(finalize, selection);
        const std::string node = arg_string("name");
        auto it = selection.selections.find(node);
        if (it == selection.selections.end() || it->second.empty()) throw MissingSelection(node);
        auto candidates = slot("submodules");
        std::vector<ModuleState> chosen;
        for (long long index : it->second) {
            if (index < 0 || static_cast<std::size_t>(index) >= candidates.size())
                throw IndexOutOfRange(node, index, candidates.size());
            chosen.push_back(candidates[static_cast<std::size_t>(index)]->state_config(finalize, selection));
        }
        if (chosen.size() == 1) return std::move(chosen.front());
        ModuleState sum;
        sum.name = "SumParallelModules";
        sum.submodules["submodules"] = SubmoduleValue{true, std::move(chosen)};
        return sum;
    }
};

class SumParallelModules : public NetworkModule {
public:
    SumParallelModules(const ModuleDescriptor& d, ModuleArgs args) : NetworkModule(d, std::move(args)) {
        if (slot("submodules").empty()) throw ConstructionError(type_name(), "needs at least one submodule");
    }
};

/// Exported as a plain skip connection once the topology is final.
class LinearTransformerLayer : public NetworkModule {
public:
    using NetworkModule::NetworkModule;

    ModuleState state_config(bool finalize, const SelectionProvider& selection) const override {
        if (!finalize) return plain_state(finalize, selection);
        return ModuleState{"SkipLayer", {}, {}};
    }
};

template <class T>
BuilderEntry entry(std::vector<SlotSpec> slots = {}) {
    return {std::move(slots), [](const ModuleDescriptor& d, ModuleArgs args) -> ModulePtr {
                return std::make_unique<T>(d, std::move(args));
            }};
}

}  // namespace

void add_network_builders(ModuleFactory& factory) {
    const std::vector<std::string> ops = {"network_layer", "network_mixed_op"};
    factory.add("SingleLayerCell", entry<SingleLayerCell>({{"op", ops, false}}));
    factory.add("MixedOp", entry<MixedOp>({{"submodules", {"network_layer"}, true}}));
    factory.add("SumParallelModules", entry<SumParallelModules>({{"submodules", ops, true}}));
    factory.add("LinearTransformerLayer", entry<LinearTransformerLayer>());
    factory.add("MobileInvConvLayer", entry<NetworkModule>());
    factory.add("ConvLayer", entry<NetworkModule>());
    factory.add("PoolLayer", entry<NetworkModule>());
    factory.add("SkipLayer", entry<NetworkModule>());
}

}  // namespace argtree::demo
