#include "argtree/gui_server.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>

#include "httplib.h"

namespace argtree::gui {

ApiError::ApiError(int status, std::string code, std::string detail)
    : Error(code + ": " + detail), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}

// ---------------------------------------------------------------------------
// wire format
// ---------------------------------------------------------------------------

namespace {

Json scalar_json(const Scalar& v) {
    struct Visitor {
        Json operator()(std::monostate) const { return nullptr; }
        Json operator()(bool b) const { return b; }
        Json operator()(std::int64_t i) const { return i; }
        Json operator()(double d) const { return d; }
        Json operator()(const std::string& s) const { return s; }
    };
    return std::visit(Visitor{}, v);
}

Json tags_json(const TagMap& tags) {
    Json j = Json::object();
    for (const auto& [k, v] : tags) {
        if (const auto* b = std::get_if<bool>(&v))
            j[k] = *b;
        else
            j[k] = std::get<std::string>(v);
    }
    return j;
}

Json requirement_json(const ChildRequirementSpec& req) {
    return {{"key", req.key},
            {"kind", req.allowed_kind},
            {"tag_filter", tags_json(req.tag_filter)},
            {"min", req.count_min},
            {"max", req.count_max == kUnbounded ? Json(nullptr) : Json(req.count_max)},
            {"help", req.help}};
}

Json descriptor_json(const ModuleDescriptor& d) {
    Json args = Json::array();
    for (const auto& a : d.arguments) {
        args.push_back({{"name", a.name},
                        {"kind", std::string(kind_name(a.value_kind))},
                        {"default", scalar_json(a.default_value)},
                        {"help", a.help},
                        {"choices", a.choices}});
    }
    Json reqs = Json::array();
    for (const auto& r : d.child_requirements) reqs.push_back(requirement_json(r));
    return {{"name", d.name}, {"kind", d.kind},         {"tags", tags_json(d.tags)}, {"help", d.help},
            {"source", d.source}, {"arguments", args}, {"child_requirements", reqs}};
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

void check_revision(std::optional<std::int64_t> expected, std::int64_t current) {
    if (expected && *expected != current) {
        throw ApiError(409, "StaleRevision",
                       "expected revision " + std::to_string(*expected) + " but the session is at " +
                           std::to_string(current));
    }
}

}  // namespace

Json path_to_json(const NodePath& path) {
    Json j = Json::array();
    for (const auto& step : path) j.push_back(Json::array({step.req_key, step.index}));
    return j;
}

NodePath path_from_json(const Json& j) {
    if (j.is_null()) return {};
    if (!j.is_array()) throw ApiError(400, "BadRequest", "path must be an array of [req_key, index] pairs");
    NodePath path;
    for (const auto& step : j) {
        if (!step.is_array() || step.size() != 2 || !step[0].is_string() || !step[1].is_number_unsigned())
            throw ApiError(400, "BadRequest", "path step must be [req_key, index], got " + step.dump());
        path.push_back({step[0].get<std::string>(), step[1].get<std::size_t>()});
    }
    return path;
}

Json violation_to_json(const Violation& v) {
    return {{"code", std::string(code_name(v.code))}, {"path", path_to_json(v.path)}, {"detail", v.detail}};
}

Json node_to_json(const ArgumentTreeNode& node) {
    Json values = Json::object();
    for (const auto& a : node.descriptor().arguments) values[a.name] = scalar_json(node.value(a.name));
    Json reqs = Json::array();
    for (const auto& req : node.descriptor().child_requirements) {
        Json r = requirement_json(req);
        Json kids = Json::array();
        for (const auto& child : node.children(req.key)) kids.push_back(node_to_json(child));
        r["children"] = std::move(kids);
        reqs.push_back(std::move(r));
    }
    return {{"name", node.name()},   {"kind", node.descriptor().kind}, {"req_key", node.req_key()},
            {"index", node.index()}, {"values", values},               {"requirements", reqs}};
}

Json registry_to_json(const Registry& registry) {
    Json modules = Json::array();
    for (const auto& [name, d] : registry.descriptors()) modules.push_back(descriptor_json(d));
    Json missing = Json::object();
    for (const auto& [name, reason] : registry.missing()) missing[name] = reason;
    return {{"modules", modules}, {"missing", missing}};
}

Json config_to_json(const ConfigDocument& doc) {
    Json j = Json::object();
    for (const auto& [key, value] : doc.entries()) j[key] = scalar_json(value);
    return j;
}

ConfigDocument config_from_json(const Json& j) {
    if (!j.is_object()) throw ApiError(400, "BadRequest", "config must be a JSON object");
    ConfigDocument doc;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_primitive() || value.is_null()) throw ApiError(422, "NonScalarValue", key);
        try {
            doc.set(key, scalar_from_json(value));
        } catch (const MalformedKey& e) {
            throw ApiError(422, "MalformedKey", e.key());
        }
    }
    return doc;
}

// ---------------------------------------------------------------------------
// session
// ---------------------------------------------------------------------------

EditorSession::EditorSession(const Registry& registry, BuildOptions options)
    : registry_(registry), options_(std::move(options)) {
    violations_ = compute_violations(tree_);
}

std::vector<Violation> EditorSession::compute_violations(const std::optional<ArgumentTreeNode>& tree) const {
    if (!tree) {
        return {{ViolationCode::CountViolation, {}, options_.entry_req + " requires exactly 1, found 0"}};
    }
    return validate_tree(*tree);
}

std::int64_t EditorSession::revision() const {
    std::shared_lock lock(mutex_);
    return revision_;
}

std::vector<Violation> EditorSession::violations() const {
    std::shared_lock lock(mutex_);
    return violations_;
}

std::optional<ArgumentTreeNode> EditorSession::tree() const {
    std::shared_lock lock(mutex_);
    return tree_;
}

Json EditorSession::status_json() const {
    Json violations = Json::array();
    for (const auto& v : violations_) violations.push_back(violation_to_json(v));
    return {{"revision", revision_}, {"violations", violations}};
}

template <class Fn>
Json EditorSession::mutate(std::optional<std::int64_t> expected_revision, Fn&& fn) {
    std::unique_lock lock(mutex_);
    check_revision(expected_revision, revision_);
    std::optional<ArgumentTreeNode> draft = tree_;
    fn(draft);
    tree_ = std::move(draft);
    violations_ = compute_violations(tree_);
    ++revision_;
    return status_json();
}

Json EditorSession::registry() const { return registry_to_json(registry_); }

Json EditorSession::tree_json() const {
    std::shared_lock lock(mutex_);
    Json j = status_json();
    j["entry_req"] = options_.entry_req;
    j["entry_kind"] = options_.entry_kind;
    j["tree"] = tree_ ? node_to_json(*tree_) : Json(nullptr);
    return j;
}

namespace {

const ModuleDescriptor& resolve_class(const Registry& registry, const std::string& class_name) {
    if (const auto* d = registry.find(class_name)) return *d;
    if (registry.is_missing(class_name)) {
        throw ApiError(409, "MissingModule",
                       "module '" + class_name + "' is unavailable: " + registry.missing().find(trim(class_name))->second);
    }
    throw ApiError(404, "UnknownModule", "unknown module '" + class_name + "'");
}

ArgumentTreeNode& node_at(std::optional<ArgumentTreeNode>& tree, const NodePath& path) {
    ArgumentTreeNode* node = tree ? tree->at(path) : nullptr;
    if (!node) throw ApiError(404, "NotFound", "no node at " + path_text(path));
    return *node;
}

void check_fits(const ModuleDescriptor& d, const ChildRequirementSpec& req) {
    if (d.kind != req.allowed_kind)
        throw ApiError(409, "KindMismatch", d.name + " is a " + d.kind + ", " + req.key + " needs a " + req.allowed_kind);
    if (!tags_match(d.tags, req.tag_filter))
        throw ApiError(409, "TagMismatch", d.name + " does not have the tags required by " + req.key);
}

}  // namespace

Json EditorSession::add_child(const NodePath& parent, const std::string& req_key, const std::string& class_name,
                              std::optional<std::int64_t> expected_revision) {
    return mutate(expected_revision, [&](std::optional<ArgumentTreeNode>& draft) {
        const ModuleDescriptor& d = resolve_class(registry_, class_name);
        if (!draft && parent.empty()) {
            if (req_key != options_.entry_req)
                throw ApiError(404, "NotFound", "the tree is empty, add a " + options_.entry_req + " first");
            if (d.kind != options_.entry_kind)
                throw ApiError(409, "KindMismatch", d.name + " is a " + d.kind + ", " + req_key + " needs a " +
                                                        options_.entry_kind);
            draft = ArgumentTreeNode(d, req_key, 0, options_.env);
            return;
        }
        if (parent.empty() && req_key == options_.entry_req)
            throw ApiError(409, "CountViolation", req_key + " requires exactly 1, and one is already set");
        ArgumentTreeNode& node = node_at(draft, parent);
        const auto* req = node.descriptor().find_requirement(req_key);
        if (!req) throw ApiError(404, "NotFound", node.name() + " has no requirement " + req_key);
        check_fits(d, *req);
        if (node.children(req_key).size() >= req->count_max) {
            throw ApiError(409, "CountViolation",
                           req_key + " allows at most " + std::to_string(req->count_max) + " module(s)");
        }
        node.add_child(req_key, ArgumentTreeNode(d, req_key, 0, options_.env));
    });
}

Json EditorSession::remove_child(const NodePath& path, std::optional<std::int64_t> expected_revision) {
    return mutate(expected_revision, [&](std::optional<ArgumentTreeNode>& draft) {
        node_at(draft, path);
        if (path.empty()) {
            draft.reset();
            return;
        }
        NodePath parent(path.begin(), path.end() - 1);
        node_at(draft, parent).remove_child(path.back().req_key, path.back().index);
    });
}

Json EditorSession::set_arg(const NodePath& path, const std::string& arg, const Scalar& raw,
                            std::optional<std::int64_t> expected_revision) {
    return mutate(expected_revision, [&](std::optional<ArgumentTreeNode>& draft) {
        ArgumentTreeNode& node = node_at(draft, path);
        const ArgumentSpec* spec = node.descriptor().find_argument(arg);
        if (!spec) throw ApiError(404, "NotFound", node.name() + " has no argument " + arg);
        try {
            Scalar value = raw;
            if (const auto* s = std::get_if<std::string>(&value)) value = expand_placeholders(*s, options_.env);
            node.set_value(arg, coerce_value(*spec, value));
        } catch (const CoercionError& e) {
            throw ApiError(422, "CoercionError", e.what());
        } catch (const UnknownPlaceholder& e) {
            throw ApiError(422, "UnknownPlaceholder", e.what());
        }
    });
}

Json EditorSession::reset(const std::optional<std::string>& class_name, std::optional<std::int64_t> expected_revision) {
    return mutate(expected_revision, [&](std::optional<ArgumentTreeNode>& draft) {
        draft.reset();
        if (!class_name) return;
        const ModuleDescriptor& d = resolve_class(registry_, *class_name);
        if (d.kind != options_.entry_kind)
            throw ApiError(409, "KindMismatch", d.name + " is a " + d.kind + ", not a " + options_.entry_kind);
        draft = ArgumentTreeNode(d, options_.entry_req, 0, options_.env);
    });
}

Json EditorSession::load(const ConfigDocument& config, const std::optional<NodePath>& graft,
                         std::optional<std::int64_t> expected_revision) {
    return mutate(expected_revision, [&](std::optional<ArgumentTreeNode>& draft) {
        BuildOptions build = options_;
        const ChildRequirementSpec* req = nullptr;
        if (graft && !graft->empty()) {
            node_at(draft, *graft);
            NodePath parent(graft->begin(), graft->end() - 1);
            req = node_at(draft, parent).descriptor().find_requirement(graft->back().req_key);
            build.entry_req = req->key;
            build.entry_kind = req->allowed_kind;
        }
        ConfigDocument doc = config;
        auto result = build_tree_lenient(registry_, doc, build);
        for (const auto& v : result.violations) {
            bool structural = v.code == ViolationCode::CountViolation || v.code == ViolationCode::KindMismatch ||
                              v.code == ViolationCode::TagMismatch || v.code == ViolationCode::DuplicateRequirementKey;
            bool at_root = v.path.empty() && v.code != ViolationCode::CountViolation;
            if (!structural || (at_root && v.code == ViolationCode::KindMismatch))
                throw ApiError(v.code == ViolationCode::KindMismatch ? 409 : 422, std::string(code_name(v.code)), v.detail);
        }
        if (!result.root) throw ApiError(422, "CountViolation", build.entry_req + " is not selected in the config");
        ArgumentTreeNode root = std::move(*result.root);
        if (!graft || graft->empty()) {
            draft = std::move(root);
            return;
        }
        check_fits(root.descriptor(), *req);
        NodePath parent(graft->begin(), graft->end() - 1);
        auto& slot = node_at(draft, parent).children(graft->back().req_key);
        root.set_position(req->key, graft->back().index);
        slot[graft->back().index] = std::move(root);
    });
}

Json EditorSession::validate() const {
    std::shared_lock lock(mutex_);
    return status_json();
}

std::vector<SearchMatch> EditorSession::search(const std::string& query) const {
    std::shared_lock lock(mutex_);
    std::vector<SearchMatch> out;
    if (query.empty() || !tree_) return out;
    const std::string q = lower(query);
    auto hit = [&](std::string_view text) { return lower(text).find(q) != std::string::npos; };
    std::function<void(const ArgumentTreeNode&, const NodePath&)> walk = [&](const ArgumentTreeNode& node,
                                                                              const NodePath& path) {
        if (hit(node.name())) out.push_back({path, "module_name", node.name()});
        for (const auto& arg : node.descriptor().arguments) {
            if (hit(arg.name)) out.push_back({path, "arg_name", arg.name});
            std::string text = to_text(node.value(arg.name));
            if (hit(text)) out.push_back({path, "arg_value", text});
        }
        for (const auto& slot : node.slots()) {
            if (hit(slot.req_key)) out.push_back({path, "arg_name", slot.req_key});
            for (const auto& child : slot.nodes) {
                NodePath child_path = path;
                child_path.push_back({slot.req_key, child.index()});
                walk(child, child_path);
            }
        }
    };
    if (hit(tree_->req_key())) out.push_back({{}, "arg_name", tree_->req_key()});
    walk(*tree_, {});
    return out;
}

Json EditorSession::search_json(const std::string& query) const {
    Json matches = Json::array();
    for (const auto& m : search(query)) {
        matches.push_back({{"path", path_to_json(m.node_path)}, {"field", m.field}, {"text", m.matched_text}});
    }
    return {{"query", query}, {"matches", matches}};
}

Json EditorSession::save(const std::optional<NodePath>& scope) const {
    std::shared_lock lock(mutex_);
    if (!tree_) throw ApiError(409, "CountViolation", "the tree is empty");
    const ArgumentTreeNode* node = tree_->at(scope.value_or(NodePath{}));
    if (!node) throw ApiError(404, "NotFound", "no node at " + path_text(scope.value_or(NodePath{})));
    return {{"revision", revision_},
            {"scope_path", path_to_json(scope.value_or(NodePath{}))},
            {"config", config_to_json(emit_config(*node))}};
}

Json EditorSession::generate() const {
    std::shared_lock lock(mutex_);
    if (!violations_.empty() || !tree_) throw ApiError(409, "InvalidTree", "the tree has violations");
    return {{"revision", revision_}, {"config", config_to_json(generate_config(*tree_))}};
}

std::string EditorSession::dot() const {
    std::shared_lock lock(mutex_);
    if (!tree_) return "digraph argtree {\n}\n";
    return to_dot(*tree_, true);
}

ArgumentTreeNode EditorSession::runnable_tree() const {
    std::shared_lock lock(mutex_);
    if (!violations_.empty() || !tree_) throw ApiError(409, "InvalidTree", "the tree has violations, it cannot run");
    return *tree_;
}

// ---------------------------------------------------------------------------
// http
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>argtree editor</title></head>
<body>
<h1>argtree editor backend</h1>
<p>The browser frontend is built separately; start the server with <code>--assets DIR</code> to serve it.</p>
<p>API: <a href="/api/v1/registry">/api/v1/registry</a>, <a href="/api/v1/tree">/api/v1/tree</a>,
<a href="/api/v1/dot">/api/v1/dot</a></p>
</body></html>
)";

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    auto j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ApiError(400, "BadRequest", "request body must be a JSON object");
    return j;
}

std::optional<std::int64_t> revision_of(const Json& body) {
    if (!body.contains("revision") || body["revision"].is_null()) return std::nullopt;
    if (!body["revision"].is_number_integer()) throw ApiError(400, "BadRequest", "revision must be an integer");
    return body["revision"].get<std::int64_t>();
}

std::string string_field(const Json& body, const char* name) {
    if (!body.contains(name) || !body[name].is_string())
        throw ApiError(400, "BadRequest", std::string("missing string field '") + name + "'");
    return body[name].get<std::string>();
}

void send_json(httplib::Response& res, const Json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

template <class Fn>
httplib::Server::Handler api(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const ApiError& e) {
            send_json(res, {{"error", {{"code", e.code()}, {"detail", e.detail()}}}}, e.status());
        } catch (const std::exception& e) {
            send_json(res, {{"error", {{"code", "BadRequest"}, {"detail", e.what()}}}}, 400);
        }
    };
}

}  // namespace

struct GuiServer::Impl {
    httplib::Server http;
};

GuiServer::GuiServer(const Registry& registry, ServerOptions options)
    : session_(registry, options.build), options_(std::move(options)), impl_(std::make_unique<Impl>()) {
    auto& http = impl_->http;
    EditorSession& s = session_;

    http.Get("/api/v1/registry", api([&s](const httplib::Request&, httplib::Response& res) { send_json(res, s.registry()); }));
    http.Get("/api/v1/tree", api([&s](const httplib::Request&, httplib::Response& res) { send_json(res, s.tree_json()); }));
    http.Post("/api/v1/tree/children", api([&s](const httplib::Request& req, httplib::Response& res) {
                  Json body = parse_body(req);
                  send_json(res, s.add_child(path_from_json(body.value("path", Json::array())),
                                             string_field(body, "req_key"), string_field(body, "class_name"),
                                             revision_of(body)));
              }));
    http.Delete("/api/v1/tree/children", api([&s](const httplib::Request& req, httplib::Response& res) {
                    Json body = parse_body(req);
                    if (!body.contains("path")) throw ApiError(400, "BadRequest", "missing field 'path'");
                    send_json(res, s.remove_child(path_from_json(body["path"]), revision_of(body)));
                }));
    http.Patch("/api/v1/tree/args", api([&s](const httplib::Request& req, httplib::Response& res) {
                   Json body = parse_body(req);
                   if (!body.contains("value") || !body["value"].is_primitive() || body["value"].is_null())
                       throw ApiError(400, "BadRequest", "missing scalar field 'value'");
                   send_json(res, s.set_arg(path_from_json(body.value("path", Json::array())), string_field(body, "arg"),
                                            scalar_from_json(body["value"]), revision_of(body)));
               }));
    http.Post("/api/v1/validate", api([&s](const httplib::Request&, httplib::Response& res) { send_json(res, s.validate()); }));
    http.Get("/api/v1/search", api([&s](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, s.search_json(req.get_param_value("q")));
             }));
    http.Post("/api/v1/save", api([&s](const httplib::Request& req, httplib::Response& res) {
                  Json body = parse_body(req);
                  std::optional<NodePath> scope;
                  if (body.contains("scope_path") && !body["scope_path"].is_null()) scope = path_from_json(body["scope_path"]);
                  send_json(res, s.save(scope));
              }));
    http.Post("/api/v1/load", api([&s](const httplib::Request& req, httplib::Response& res) {
                  Json body = parse_body(req);
                  if (!body.contains("config")) throw ApiError(400, "BadRequest", "missing field 'config'");
                  std::optional<NodePath> graft;
                  if (body.contains("graft_path") && !body["graft_path"].is_null()) graft = path_from_json(body["graft_path"]);
                  send_json(res, s.load(config_from_json(body["config"]), graft, revision_of(body)));
              }));
    http.Post("/api/v1/reset", api([&s](const httplib::Request& req, httplib::Response& res) {
                  Json body = parse_body(req);
                  std::optional<std::string> cls;
                  if (body.contains("class_name") && body["class_name"].is_string()) cls = body["class_name"].get<std::string>();
                  send_json(res, s.reset(cls, revision_of(body)));
              }));
    http.Post("/api/v1/generate", api([&s](const httplib::Request&, httplib::Response& res) { send_json(res, s.generate()); }));
    http.Get("/api/v1/dot", api([&s](const httplib::Request&, httplib::Response& res) {
                 res.set_content(s.dot(), "text/vnd.graphviz");
             }));
    http.Post("/api/v1/run", api([this](const httplib::Request&, httplib::Response& res) {
                  auto tree = std::make_shared<ArgumentTreeNode>(session_.runnable_tree());
                  auto save_dir = options_.run_save_dir;
                  res.set_chunked_content_provider(
                      "application/x-ndjson", [tree, save_dir](std::size_t, httplib::DataSink& sink) {
                          auto emit = [&sink](const Json& event) {
                              std::string line = event.dump() + "\n";
                              sink.write(line.data(), line.size());
                          };
                          try {
                              demo::RunOptions opts;
                              opts.save_dir = save_dir;
                              opts.on_log = [&emit](const std::string& line) { emit({{"event", "log"}, {"line", line}}); };
                              auto report = demo::run_tree(*tree, opts);
                              emit({{"event", "done"},
                                    {"epochs_run", report.epochs_run},
                                    {"final_loss", report.final_loss},
                                    {"checkpoint_path", report.checkpoint_path}});
                          } catch (const std::exception& e) {
                              emit({{"event", "error"}, {"detail", e.what()}});
                          }
                          sink.done();
                          return true;
                      });
              }));

    if (options_.assets_dir) {
        http.set_mount_point("/", *options_.assets_dir);
    } else {
        http.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kPlaceholderPage, "text/html"); });
    }
}

GuiServer::~GuiServer() { stop(); }

int GuiServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->http.bind_to_any_port(host);
    return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool GuiServer::listen() { return impl_->http.listen_after_bind(); }

void GuiServer::stop() {
    if (impl_) impl_->http.stop();
}

}  // namespace argtree::gui
