#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "argtree/registry.hpp"
#include "argtree/state_io.hpp"
#include "argtree/tree_builder.hpp"

namespace argtree::demo {

inline constexpr const char* kExtrasEnvVar = "ARGTREE_ENABLE_EXTRAS";
inline constexpr const char* kExtrasMissingReason = "optional plugin 'extras' not installed";
inline constexpr const char* kExtrasInstallHint = "set ARGTREE_ENABLE_EXTRAS=1 to enable it";

/// Every descriptor of the demo set. The extras plugin contributes AdaBeliefOptimizer.
std::vector<ModuleDescriptor> demo_descriptors(bool with_extras);

/// Registers the demo set; the extras plugin is available iff ARGTREE_ENABLE_EXTRAS=1.
Registry build_demo_registry();
Registry build_demo_registry(bool extras_enabled);

/// Constructors for every demo module, including the extras plugin.
const ModuleFactory& demo_factory();

/// Submodule slots of a tree-built module: one per requirement, a list when count_max > 1.
std::vector<SlotSpec> requirement_slots(const ModuleDescriptor& d);

struct RunReport {
    std::int64_t epochs_run = 0;
    double final_loss = 0.0;
    std::vector<double> losses;
    std::string checkpoint_path;
    std::vector<std::string> checkpoints;
    std::vector<std::string> log_lines;
    std::string structure_overview;
};

struct RunOptions {
    /// Receives each log line as it is produced.
    std::function<void(const std::string&)> on_log;
    /// Write config/log/checkpoints into save_dir.
    bool write_files = true;
    /// Replaces the task's save_dir argument.
    std::optional<std::string> save_dir;
    /// Prefix log lines with a wall-clock time stamp.
    bool timestamps = true;
};

/// Root of an instantiated experiment.
class Task : public BuildableModule {
public:
    using BuildableModule::BuildableModule;
    virtual RunReport run(const RunOptions& options) = 0;
};

/// Depth-first construction, children before parents. Throws InvalidTree when the tree has
/// violations and ConstructionError (with the failing node path) when a module rejects its values.
std::unique_ptr<Task> instantiate(const ArgumentTreeNode& root);

RunReport run(Task& task, const RunOptions& options = {});

/// options.save_dir when set, otherwise the task's save_dir argument.
std::string resolved_save_dir(const Task& task, const RunOptions& options);

/// Instantiates, writes the canonical config to <save_dir>/config.json, then runs.
RunReport run_tree(const ArgumentTreeNode& root, const RunOptions& options = {});

/// Keeps the best `top_n` epochs of one metric.
class CheckpointTracker {
public:
    CheckpointTracker(std::size_t top_n, bool minimize);

    struct Decision {
        bool keep = false;
        std::optional<std::int64_t> evicted_epoch;
    };
    Decision offer(std::int64_t epoch, double value);

    /// Retained epochs, best first.
    std::vector<std::int64_t> retained() const;
    std::optional<std::int64_t> best() const;

private:
    bool better(double a, double b) const { return minimize_ ? a < b : a > b; }

    std::size_t top_n_;
    bool minimize_;
    std::vector<std::pair<double, std::int64_t>> kept_;
};

/// Saved checkpoint: epoch, metrics, method parameters and the exported task state.
struct Checkpoint {
    std::int64_t epoch = 0;
    std::map<std::string, double> metrics;
    std::map<std::string, double> parameters;
    ModuleState state;
};

std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace argtree::demo
