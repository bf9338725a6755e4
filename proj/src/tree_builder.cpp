#include "argtree/tree_builder.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace argtree {

std::string path_text(const NodePath& path) {
    std::string out = "[";
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) out += " ";
        out += path[i].req_key + "#" + std::to_string(path[i].index);
    }
    return out + "]";
}

std::string_view code_name(ViolationCode code) {
    switch (code) {
        case ViolationCode::UnknownModule: return "UnknownModule";
        case ViolationCode::MissingModule: return "MissingModule";
        case ViolationCode::CountViolation: return "CountViolation";
        case ViolationCode::KindMismatch: return "KindMismatch";
        case ViolationCode::TagMismatch: return "TagMismatch";
        case ViolationCode::UnparsedKey: return "UnparsedKey";
        case ViolationCode::DuplicateRequirementKey: return "DuplicateRequirementKey";
        case ViolationCode::AmbiguousValue: return "AmbiguousValue";
        case ViolationCode::CoercionError: return "CoercionError";
        case ViolationCode::UnknownPlaceholder: return "UnknownPlaceholder";
    }
    return "?";
}

std::string format_violation(const Violation& v) {
    return std::string(code_name(v.code)) + " " + path_text(v.path) + " " + v.detail;
}

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
    std::string msg = "configuration does not describe a valid tree:";
    for (const auto& v : violations) msg += "\n  " + format_violation(v);
    return msg;
}

std::string count_detail(const ChildRequirementSpec& req, std::size_t found) {
    std::string need;
    if (req.count_min == req.count_max)
        need = "exactly " + std::to_string(req.count_min);
    else if (req.count_max == kUnbounded)
        need = "at least " + std::to_string(req.count_min);
    else
        need = "between " + std::to_string(req.count_min) + " and " + std::to_string(req.count_max);
    return req.key + " requires " + need + ", found " + std::to_string(found);
}

bool count_ok(const ChildRequirementSpec& req, std::size_t n) { return n >= req.count_min && n <= req.count_max; }

std::string tag_text(const TagMap& tags) {
    std::string out;
    for (const auto& [k, v] : tags) out += (out.empty() ? "" : ", ") + k + "=" + to_text(v);
    return out;
}

Scalar default_for(const ArgumentSpec& arg, const PlaceholderEnv& env) {
    Scalar raw = arg.default_value;
    if (const auto* s = std::get_if<std::string>(&raw)) {
        try {
            raw = expand_placeholders(*s, env);
        } catch (const UnknownPlaceholder&) {
        }
    }
    try {
        return coerce_value(arg, raw);
    } catch (const CoercionError&) {
        return coerce_value(arg, arg.default_value);
    }
}

}  // namespace

BuildError::BuildError(std::vector<Violation> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

ArgumentTreeNode::ArgumentTreeNode(ModuleDescriptor descriptor, std::string req_key, std::size_t index,
                                   const PlaceholderEnv& env)
    : descriptor_(std::move(descriptor)), req_key_(std::move(req_key)), index_(index) {
    for (const auto& arg : descriptor_.arguments) values_[arg.name] = default_for(arg, env);
    for (const auto& req : descriptor_.child_requirements) slots_.push_back({req.key, {}});
}

void ArgumentTreeNode::set_position(std::string req_key, std::size_t index) {
    req_key_ = std::move(req_key);
    index_ = index;
}

const Scalar& ArgumentTreeNode::value(std::string_view arg) const {
    auto it = values_.find(std::string(arg));
    if (it == values_.end()) throw Error("module '" + name() + "' has no argument '" + std::string(arg) + "'");
    return it->second;
}

void ArgumentTreeNode::set_value(const std::string& arg, Scalar value) {
    if (!descriptor_.find_argument(arg))
        throw Error("module '" + name() + "' has no argument '" + arg + "'");
    values_[arg] = std::move(value);
}

const std::vector<ArgumentTreeNode>& ArgumentTreeNode::children(std::string_view req_key) const {
    for (const auto& slot : slots_) {
        if (slot.req_key == req_key) return slot.nodes;
    }
    throw Error("module '" + name() + "' has no requirement '" + std::string(req_key) + "'");
}

std::vector<ArgumentTreeNode>& ArgumentTreeNode::children(std::string_view req_key) {
    const auto& self = *this;
    return const_cast<std::vector<ArgumentTreeNode>&>(self.children(req_key));
}

ArgumentTreeNode& ArgumentTreeNode::add_child(std::string_view req_key, ArgumentTreeNode child) {
    auto& list = children(req_key);
    child.set_position(std::string(req_key), list.size());
    list.push_back(std::move(child));
    return list.back();
}

void ArgumentTreeNode::remove_child(std::string_view req_key, std::size_t index) {
    auto& list = children(req_key);
    if (index >= list.size()) throw Error("no child " + std::string(req_key) + "#" + std::to_string(index));
    list.erase(list.begin() + static_cast<std::ptrdiff_t>(index));
    for (std::size_t i = 0; i < list.size(); ++i) list[i].set_position(std::string(req_key), i);
}

const ArgumentTreeNode* ArgumentTreeNode::at(const NodePath& path) const {
    const ArgumentTreeNode* node = this;
    for (const auto& step : path) {
        const ChildSlot* found = nullptr;
        for (const auto& slot : node->slots_) {
            if (slot.req_key == step.req_key) found = &slot;
        }
        if (!found || step.index >= found->nodes.size()) return nullptr;
        node = &found->nodes[step.index];
    }
    return node;
}

ArgumentTreeNode* ArgumentTreeNode::at(const NodePath& path) {
    return const_cast<ArgumentTreeNode*>(static_cast<const ArgumentTreeNode*>(this)->at(path));
}

std::size_t ArgumentTreeNode::node_count() const {
    std::size_t n = 1;
    for (const auto& slot : slots_) {
        for (const auto& child : slot.nodes) n += child.node_count();
    }
    return n;
}

bool structurally_equal(const ArgumentTreeNode& a, const ArgumentTreeNode& b) {
    if (a.name() != b.name() || a.req_key() != b.req_key() || a.index() != b.index()) return false;
    if (a.values() != b.values()) return false;
    if (a.slots().size() != b.slots().size()) return false;
    for (std::size_t s = 0; s < a.slots().size(); ++s) {
        const auto& x = a.slots()[s];
        const auto& y = b.slots()[s];
        if (x.req_key != y.req_key || x.nodes.size() != y.nodes.size()) return false;
        for (std::size_t i = 0; i < x.nodes.size(); ++i) {
            if (!structurally_equal(x.nodes[i], y.nodes[i])) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

namespace {

class TreeParser {
public:
    TreeParser(const Registry& registry, ConfigDocument& doc, const BuildOptions& options)
        : registry_(registry), doc_(doc), options_(options) {}

    BuildResult run() {
        BuildResult result;
        auto names = get_used_classes(doc_, options_.entry_req);
        if (names.size() != 1) {
            ChildRequirementSpec entry{options_.entry_req, options_.entry_kind, {}, 1, 1, {}};
            report(ViolationCode::CountViolation, {}, count_detail(entry, names.size()));
        }
        if (!names.empty()) {
            if (const auto* d = resolve(names.front(), {}, options_.entry_req, 0)) {
                if (d->kind != options_.entry_kind) {
                    report(ViolationCode::KindMismatch, {},
                           d->name + " is a " + d->kind + ", " + options_.entry_req + " needs a " +
                               options_.entry_kind);
                }
                result.root = parse(*d, options_.entry_req, 0, {});
            }
        }
        if (!skipped_subtree_) {
            for (const auto& key : doc_.unconsumed_keys()) report(ViolationCode::UnparsedKey, {}, key);
        }
        result.violations = std::move(violations_);
        return result;
    }

private:
    void report(ViolationCode code, NodePath path, std::string detail) {
        violations_.push_back({code, std::move(path), std::move(detail)});
    }

    const ModuleDescriptor* resolve(const std::string& name, const NodePath& parent_path, const std::string& req_key,
                                    std::size_t idx) {
        if (const auto* d = registry_.find(name)) return d;
        skipped_subtree_ = true;
        std::string where = req_key + "#" + std::to_string(idx) + ": ";
        if (registry_.is_missing(name)) {
            const auto& reason = registry_.missing().find(trim(name))->second;
            std::string hint(registry_.install_hint(name));
            if (hint.empty()) hint = "install or enable the plugin that provides it";
            report(ViolationCode::MissingModule, parent_path,
                   where + "module '" + name + "' is unavailable: " + reason + " (" + hint + ")");
        } else {
            report(ViolationCode::UnknownModule, parent_path, where + "unknown module '" + name + "'");
        }
        return nullptr;
    }

    ArgumentTreeNode parse(const ModuleDescriptor& d, const std::string& req_key, std::size_t index,
                           const NodePath& path) {
        ArgumentTreeNode node(d, req_key, index, options_.env);

        for (const auto& arg : d.arguments) {
            try {
                node.set_value(arg.name, get_used_value(doc_, req_key, index, d.name, arg, options_.env));
            } catch (const AmbiguousValue& e) {
                report(ViolationCode::AmbiguousValue, path, e.what());
            } catch (const CoercionError& e) {
                report(ViolationCode::CoercionError, path, e.what());
            } catch (const UnknownPlaceholder& e) {
                report(ViolationCode::UnknownPlaceholder, path, arg.name + ": " + e.what());
            }
        }

        for (const auto& req : d.child_requirements) {
            auto owner = key_owner_.find(req.key);
            if (owner == key_owner_.end()) {
                key_owner_.emplace(req.key, d.name);
            } else if (owner->second != d.name) {
                report(ViolationCode::DuplicateRequirementKey, path,
                       req.key + " is declared by both " + owner->second + " and " + d.name);
            } else {
                // flat keys cannot tell two users of the same requirement key apart
                report(ViolationCode::DuplicateRequirementKey, path,
                       req.key + (active_keys_.count(req.key) ? " recurs below itself"
                                                              : " is used by more than one " + d.name));
                skipped_subtree_ = true;
                continue;
            }

            auto names = get_used_classes(doc_, req.key);
            if (!count_ok(req, names.size())) report(ViolationCode::CountViolation, path, count_detail(req, names.size()));

            active_keys_.insert(req.key);
            auto& list = node.children(req.key);
            for (std::size_t i = 0; i < names.size(); ++i) {
                const auto* child = resolve(names[i], path, req.key, i);
                if (!child) continue;
                NodePath child_path = path;
                child_path.push_back({req.key, i});
                if (child->kind != req.allowed_kind) {
                    report(ViolationCode::KindMismatch, child_path,
                           child->name + " is a " + child->kind + ", " + req.key + " needs a " + req.allowed_kind);
                } else if (!tags_match(child->tags, req.tag_filter)) {
                    report(ViolationCode::TagMismatch, child_path,
                           child->name + " does not have tags {" + tag_text(req.tag_filter) + "} required by " +
                               req.key);
                }
                list.push_back(parse(*child, req.key, i, child_path));
            }
            active_keys_.erase(req.key);
        }
        return node;
    }

    const Registry& registry_;
    ConfigDocument& doc_;
    const BuildOptions& options_;
    std::vector<Violation> violations_;
    std::map<std::string, std::string> key_owner_;
    std::set<std::string> active_keys_;
    bool skipped_subtree_ = false;
};

}  // namespace

BuildResult build_tree_lenient(const Registry& registry, ConfigDocument& doc, const BuildOptions& options) {
    doc.reset_consumed();
    return TreeParser(registry, doc, options).run();
}

ArgumentTreeNode build_tree(const Registry& registry, ConfigDocument& doc, const BuildOptions& options) {
    auto result = build_tree_lenient(registry, doc, options);
    if (!result.violations.empty() || !result.root) throw BuildError(std::move(result.violations));
    return std::move(*result.root);
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

namespace {

void validate_node(const ArgumentTreeNode& node, const NodePath& path, std::map<std::string, std::string>& owners,
                   std::vector<Violation>& out) {
    const auto& d = node.descriptor();
    for (const auto& req : d.child_requirements) {
        auto owner = owners.find(req.key);
        if (owner == owners.end()) {
            owners.emplace(req.key, d.name);
        } else if (owner->second != d.name) {
            out.push_back({ViolationCode::DuplicateRequirementKey, path,
                           req.key + " is declared by both " + owner->second + " and " + d.name});
        } else {
            out.push_back({ViolationCode::DuplicateRequirementKey, path,
                           req.key + " is used by more than one " + d.name});
        }
        const auto& kids = node.children(req.key);
        if (!count_ok(req, kids.size())) out.push_back({ViolationCode::CountViolation, path, count_detail(req, kids.size())});
        for (std::size_t i = 0; i < kids.size(); ++i) {
            NodePath child_path = path;
            child_path.push_back({req.key, i});
            const auto& cd = kids[i].descriptor();
            if (cd.kind != req.allowed_kind) {
                out.push_back({ViolationCode::KindMismatch, child_path,
                               cd.name + " is a " + cd.kind + ", " + req.key + " needs a " + req.allowed_kind});
            } else if (!tags_match(cd.tags, req.tag_filter)) {
                out.push_back({ViolationCode::TagMismatch, child_path,
                               cd.name + " does not have tags {" + tag_text(req.tag_filter) + "} required by " +
                                   req.key});
            }
            validate_node(kids[i], child_path, owners, out);
        }
    }
}

}  // namespace

std::vector<Violation> validate_tree(const ArgumentTreeNode& root) {
    std::vector<Violation> out;
    std::map<std::string, std::string> owners;
    validate_node(root, {}, owners, out);
    return out;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

namespace {

void emit_node(const ArgumentTreeNode& node, std::size_t index, ConfigDocument& doc) {
    for (const auto& arg : node.descriptor().arguments) {
        doc.set(wildcard_key(node.req_key(), index, arg.name), node.value(arg.name));
    }
    for (const auto& slot : node.slots()) {
        std::string names;
        for (const auto& child : slot.nodes) names += (names.empty() ? "" : ", ") + child.name();
        doc.set(selection_key(slot.req_key), names);
        for (const auto& child : slot.nodes) emit_node(child, child.index(), doc);
    }
}

}  // namespace

ConfigDocument emit_config(const ArgumentTreeNode& root) {
    ConfigDocument doc;
    doc.set(selection_key(root.req_key()), root.name());
    emit_node(root, 0, doc);
    return doc;
}

ConfigDocument generate_config(const ArgumentTreeNode& root) {
    auto violations = validate_tree(root);
    if (!violations.empty()) throw InvalidTree(join_violations(violations));
    return emit_config(root);
}

// ---------------------------------------------------------------------------
// docgen
// ---------------------------------------------------------------------------

std::string docgen(const Registry& registry) {
    std::ostringstream os;
    os << "argtree module registry: " << registry.size() << " modules, " << registry.missing().size()
       << " missing\n";
    for (const auto& kind : registry.kinds()) {
        os << "\n[kind: " << kind << "]\n";
        for (const auto* d : registry.filter(kind)) {
            os << "Module: " << d->name << "\n";
            if (!d->help.empty()) os << "  help: " << d->help << "\n";
            if (!d->source.empty()) os << "  source: " << d->source << "\n";
            if (!d->tags.empty()) os << "  tags: " << tag_text(d->tags) << "\n";
            for (const auto& arg : d->arguments) {
                os << "  Argument: " << d->name << "." << arg.name << " (" << kind_name(arg.value_kind)
                   << ", default " << to_json_text(arg.default_value) << ")";
                if (!arg.choices.empty()) {
                    os << " choices {";
                    for (std::size_t i = 0; i < arg.choices.size(); ++i) os << (i ? ", " : "") << arg.choices[i];
                    os << "}";
                }
                if (!arg.help.empty()) os << " -- " << arg.help;
                os << "\n";
            }
            for (const auto& req : d->child_requirements) {
                os << "  Requirement: " << req.key << " -> " << req.allowed_kind;
                if (!req.tag_filter.empty()) os << " {" << tag_text(req.tag_filter) << "}";
                os << " count " << count_range_text(req);
                if (!req.help.empty()) os << " -- " << req.help;
                os << "\n";
            }
        }
    }
    if (!registry.missing().empty()) {
        os << "\n[MISSING]\n";
        for (const auto& [name, reason] : registry.missing()) os << "Missing: " << name << " -- " << reason << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// dot
// ---------------------------------------------------------------------------

namespace {

std::string dot_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

class DotWriter {
public:
    explicit DotWriter(bool violations) : violations_(violations) {}

    std::string render(const ArgumentTreeNode& root) {
        os_ << "digraph argtree {\n";
        os_ << "  rankdir=TB;\n";
        os_ << "  node [fontname=\"Helvetica\"];\n";
        node(root);
        os_ << "}\n";
        return os_.str();
    }

private:
    std::string node(const ArgumentTreeNode& n) {
        std::string id = "n" + std::to_string(next_node_++);
        os_ << "  " << id << " [shape=box, style=filled, fillcolor=turquoise, label=\"" << dot_escape(n.name())
            << "\"];\n";
        for (const auto& req : n.descriptor().child_requirements) {
            const auto& kids = n.children(req.key);
            bool bad = !count_ok(req, kids.size()) || (owners_.count(req.key) && owners_[req.key] != n.name());
            owners_.emplace(req.key, n.name());
            for (const auto& k : kids) {
                if (k.descriptor().kind != req.allowed_kind || !tags_match(k.descriptor().tags, req.tag_filter))
                    bad = true;
            }
            std::string rid = "r" + std::to_string(next_req_++);
            os_ << "  " << rid << " [shape=ellipse, label=\"" << dot_escape(req.key) << " ("
                << count_range_text(req) << ")\"";
            if (violations_ && bad) os_ << ", color=red, fontcolor=red";
            os_ << "];\n";
            os_ << "  " << id << " -> " << rid << ";\n";
            for (const auto& k : kids) {
                std::string cid = node(k);
                os_ << "  " << rid << " -> " << cid << ";\n";
            }
        }
        return id;
    }

    bool violations_;
    std::ostringstream os_;
    std::size_t next_node_ = 0;
    std::size_t next_req_ = 0;
    std::map<std::string, std::string> owners_;
};

}  // namespace

std::string to_dot(const ArgumentTreeNode& root, bool include_violations) { return DotWriter(include_violations).render(root); }

}  // namespace argtree
