#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "argtree/config_document.hpp"
#include "argtree/errors.hpp"
#include "argtree/registry.hpp"
#include "argtree/schema.hpp"

namespace argtree {

/// One step from a parent node to a child: requirement key and position in its list.
struct PathStep {
    std::string req_key;
    std::size_t index = 0;
    bool operator==(const PathStep&) const = default;
};
using NodePath = std::vector<PathStep>;

std::string path_text(const NodePath& path);

enum class ViolationCode {
    UnknownModule,
    MissingModule,
    CountViolation,
    KindMismatch,
    TagMismatch,
    UnparsedKey,
    DuplicateRequirementKey,
    AmbiguousValue,
    CoercionError,
    UnknownPlaceholder,
};

std::string_view code_name(ViolationCode code);

struct Violation {
    ViolationCode code;
    NodePath path;
    std::string detail;

    bool operator==(const Violation&) const = default;
};

/// "CountViolation [cls_device#0] cls_device requires exactly 1, found 2"
std::string format_violation(const Violation& v);

class BuildError : public Error {
public:
    explicit BuildError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

class ArgumentTreeNode;

/// Children selected for one requirement of a node, in declaration order.
struct ChildSlot {
    std::string req_key;
    std::vector<ArgumentTreeNode> nodes;
};

class ArgumentTreeNode {
public:
    ArgumentTreeNode() = default;
    /// Node with every argument at its (coerced, placeholder-expanded) default and one
    /// empty slot per requirement.
    ArgumentTreeNode(ModuleDescriptor descriptor, std::string req_key, std::size_t index,
                     const PlaceholderEnv& env = {});

    const ModuleDescriptor& descriptor() const { return descriptor_; }
    const std::string& name() const { return descriptor_.name; }
    const std::string& req_key() const { return req_key_; }
    std::size_t index() const { return index_; }
    void set_position(std::string req_key, std::size_t index);

    const std::map<std::string, Scalar>& values() const { return values_; }
    const Scalar& value(std::string_view arg) const;
    void set_value(const std::string& arg, Scalar value);

    const std::vector<ChildSlot>& slots() const { return slots_; }
    std::vector<ChildSlot>& slots() { return slots_; }
    const std::vector<ArgumentTreeNode>& children(std::string_view req_key) const;
    std::vector<ArgumentTreeNode>& children(std::string_view req_key);
    /// Appends and fixes the child's position; the requirement must exist.
    ArgumentTreeNode& add_child(std::string_view req_key, ArgumentTreeNode child);
    /// Re-numbers indices after an erase.
    void remove_child(std::string_view req_key, std::size_t index);

    const ArgumentTreeNode* at(const NodePath& path) const;
    ArgumentTreeNode* at(const NodePath& path);

    std::size_t node_count() const;

private:
    ModuleDescriptor descriptor_;
    std::string req_key_;
    std::size_t index_ = 0;
    std::map<std::string, Scalar> values_;
    std::vector<ChildSlot> slots_;
};

/// Descriptor names, positions, values and child order are equal.
bool structurally_equal(const ArgumentTreeNode& a, const ArgumentTreeNode& b);

struct BuildOptions {
    PlaceholderEnv env = default_env();
    std::string entry_req = "cls_task";
    std::string entry_kind = "task";
};

struct BuildResult {
    std::optional<ArgumentTreeNode> root;
    std::vector<Violation> violations;
};

/// Builds as much of the tree as possible and gathers every violation found.
BuildResult build_tree_lenient(const Registry& registry, ConfigDocument& doc, const BuildOptions& options = {});

/// Throws BuildError carrying every violation.
ArgumentTreeNode build_tree(const Registry& registry, ConfigDocument& doc, const BuildOptions& options = {});

std::vector<Violation> validate_tree(const ArgumentTreeNode& root);

/// Canonical complete, sparse config: selections plus one "{req#i}.arg" entry per value.
/// Throws InvalidTree when validate_tree(root) is not empty.
ConfigDocument generate_config(const ArgumentTreeNode& root);

/// Same emission without the validity check; the root is written at index 0.
ConfigDocument emit_config(const ArgumentTreeNode& root);

std::string docgen(const Registry& registry);

std::string to_dot(const ArgumentTreeNode& root, bool include_violations);

}  // namespace argtree
