#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

#include "argtree/demo/demo_domain.hpp"
#include "argtree/registry.hpp"
#include "argtree/tree_builder.hpp"

namespace argtree::gui {

using Json = nlohmann::ordered_json;

/// Failed API call: HTTP status plus a violation-style code and detail.
class ApiError : public Error {
public:
    ApiError(int status, std::string code, std::string detail);
    int status() const { return status_; }
    const std::string& code() const { return code_; }
    const std::string& detail() const { return detail_; }

private:
    int status_;
    std::string code_;
    std::string detail_;
};

Json path_to_json(const NodePath& path);
/// Throws ApiError(400) unless `j` is an array of [req_key, index] pairs.
NodePath path_from_json(const Json& j);
Json violation_to_json(const Violation& v);
Json node_to_json(const ArgumentTreeNode& node);
Json registry_to_json(const Registry& registry);
Json config_to_json(const ConfigDocument& doc);
/// Throws ApiError(400/422) on non-objects, malformed keys or non-scalar values.
ConfigDocument config_from_json(const Json& j);

struct SearchMatch {
    NodePath node_path;
    std::string field;  // module_name | arg_name | arg_value
    std::string matched_text;
};

/// One editing session: a possibly incomplete tree, its revision and its current violations.
///
/// Mutations are serialized and all-or-nothing: they work on a copy that replaces the tree
/// only when the whole operation succeeded. Reads run concurrently and only ever see
/// committed revisions. Every mutation accepts the revision the client last saw; a stale
/// one is rejected with 409.
class EditorSession {
public:
    explicit EditorSession(const Registry& registry, BuildOptions options = {});

    std::int64_t revision() const;
    std::vector<Violation> violations() const;
    std::optional<ArgumentTreeNode> tree() const;

    Json registry() const;
    Json tree_json() const;

    Json add_child(const NodePath& parent, const std::string& req_key, const std::string& class_name,
                   std::optional<std::int64_t> expected_revision = std::nullopt);
    Json remove_child(const NodePath& path, std::optional<std::int64_t> expected_revision = std::nullopt);
    Json set_arg(const NodePath& path, const std::string& arg, const Scalar& raw,
                 std::optional<std::int64_t> expected_revision = std::nullopt);
    /// Replaces the tree with a bare entry node of `class_name`, or an empty tree.
    Json reset(const std::optional<std::string>& class_name, std::optional<std::int64_t> expected_revision = std::nullopt);
    /// Loads a (partial) flat config, replacing the whole tree or the subtree at `graft`.
    Json load(const ConfigDocument& config, const std::optional<NodePath>& graft,
              std::optional<std::int64_t> expected_revision = std::nullopt);

    Json validate() const;
    std::vector<SearchMatch> search(const std::string& query) const;
    Json search_json(const std::string& query) const;
    /// Flat config of the whole tree, or of the subtree at `scope` renumbered to index 0.
    Json save(const std::optional<NodePath>& scope) const;
    /// Canonical config; 409 while the tree has violations.
    Json generate() const;
    std::string dot() const;

    /// Copy of a runnable tree; 409 while the tree has violations or is empty.
    ArgumentTreeNode runnable_tree() const;

    const BuildOptions& options() const { return options_; }

private:
    template <class Fn>
    Json mutate(std::optional<std::int64_t> expected_revision, Fn&& fn);
    std::vector<Violation> compute_violations(const std::optional<ArgumentTreeNode>& tree) const;
    Json status_json() const;

    const Registry& registry_;
    BuildOptions options_;
    mutable std::shared_mutex mutex_;
    std::optional<ArgumentTreeNode> tree_;
    std::int64_t revision_ = 0;
    std::vector<Violation> violations_;
};

struct ServerOptions {
    BuildOptions build;
    /// Directory with the built frontend; a placeholder page is served when unset.
    std::optional<std::string> assets_dir;
    /// Overrides the task's save_dir for runs started from the editor.
    std::optional<std::string> run_save_dir;
};

/// HTTP front of one EditorSession, all endpoints under /api/v1/.
class GuiServer {
public:
    GuiServer(const Registry& registry, ServerOptions options = {});
    ~GuiServer();

    /// Binds to `port` (0 picks a free port) and returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    bool listen();
    void stop();

    EditorSession& session() { return session_; }

private:
    struct Impl;
    EditorSession session_;
    ServerOptions options_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace argtree::gui
