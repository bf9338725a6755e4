#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "argtree/demo/demo_domain.hpp"
#include "argtree/gui_server.hpp"
#include "argtree/tree_builder.hpp"

namespace argtree::cli {

namespace {


/// Raised for failures mapped onto an exit code.
struct Exit {
    int code;
};

struct Inputs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::vector<std::string> env;
    std::string entry = "cls_task";
    std::string entry_kind = "task";
};

std::string read_file(const std::string& path, std::ostream& err) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        err << "error: cannot read " << path << "\n";
        throw Exit{kExitIo};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out, std::ostream& err) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) {
        err << "error: cannot write " << path << "\n";
        throw Exit{kExitIo};
    }
}

BuildOptions build_options(const Inputs& in, std::ostream& err) {
    BuildOptions options;
    options.entry_req = in.entry;
    options.entry_kind = in.entry_kind;
    for (const auto& item : in.env) {
        auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            err << "error: --env expects name=value, got '" << item << "'\n";
            throw Exit{kExitInvalid};
        }
        options.env[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return options;
}

ConfigDocument load_config(const Inputs& in, std::ostream& err) {
    std::string text = read_file(in.config_path, err);
    try {
        return merge_overrides(parse_document(text), in.overrides);
    } catch (const MalformedKey& e) {
        err << "error: " << e.what() << "\n";
        throw Exit{kExitInvalid};
    } catch (const Error& e) {
        err << "error: " << in.config_path << ": " << e.what() << "\n";
        throw Exit{kExitIo};
    }
}

/// Builds the tree or prints one line per violation and exits with kExitInvalid.
ArgumentTreeNode load_tree(const Registry& registry, const Inputs& in, std::ostream& err) {
    ConfigDocument doc = load_config(in, err);
    auto result = build_tree_lenient(registry, doc, build_options(in, err));
    if (!result.violations.empty() || !result.root) {
        for (const auto& v : result.violations) err << format_violation(v) << "\n";
        throw Exit{kExitInvalid};
    }
    return std::move(*result.root);
}

void add_config_inputs(CLI::App* cmd, Inputs& in) {
    cmd->add_option("config", in.config_path, "JSON config file")->required();
    cmd->add_option("--set", in.overrides, "override a config entry, key=value (repeatable)");
    cmd->add_option("--env", in.env, "placeholder value, name=value (repeatable)");
    cmd->add_option("--entry", in.entry, "requirement key of the root node");
    cmd->add_option("--entry-kind", in.entry_kind, "module kind of the root node");
}

int cmd_validate(const Registry& registry, const Inputs& in, std::ostream& err) {
    auto tree = load_tree(registry, in, err);
    err << "OK: " << tree.node_count() << " nodes\n";
    return kExitOk;
}

int cmd_run(const Registry& registry, const Inputs& in, const std::string& save_dir, bool quiet, std::ostream& out,
            std::ostream& err) {
    auto tree = load_tree(registry, in, err);
    demo::RunOptions options;
    if (!save_dir.empty()) options.save_dir = save_dir;
    if (!quiet) options.on_log = [&err](const std::string& line) { err << line << "\n"; };
    try {
        auto report = demo::run_tree(tree, options);
        out << "epochs_run: " << report.epochs_run << "\n";
        out << "final_loss: " << to_text(Scalar(report.final_loss)) << "\n";
        if (!report.checkpoint_path.empty()) out << "best_checkpoint: " << report.checkpoint_path << "\n";
    } catch (const InvalidTree& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const ConstructionError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const RuntimeFailure& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}

int cmd_list(const Registry& registry, const std::string& kind, const std::vector<std::string>& tag_items,
             std::ostream& out, std::ostream& err) {
    TagMap tags;
    for (const auto& item : tag_items) {
        auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            err << "error: --tag expects name=value, got '" << item << "'\n";
            return kExitInvalid;
        }
        std::string value = item.substr(eq + 1);
        if (value == "true" || value == "True")
            tags[item.substr(0, eq)] = true;
        else if (value == "false" || value == "False")
            tags[item.substr(0, eq)] = false;
        else
            tags[item.substr(0, eq)] = value;
    }
    for (const auto* d : registry.filter(kind, tags)) out << d->name << "\t" << d->kind << "\n";
    if (kind == "*" && tags.empty()) {
        for (const auto& [name, reason] : registry.missing()) out << name << "\tmissing\t" << reason << "\n";
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"argtree: build, check and run hierarchical module configurations"};
    app.require_subcommand(1);

    Inputs in;
    std::string out_path;
    std::string dot_path;
    std::string save_dir;
    std::string list_kind = "*";
    std::vector<std::string> list_tags;
    bool quiet = false;
    std::string host = "127.0.0.1";
    int port = 8765;
    std::string assets;

    auto* validate = app.add_subcommand("validate", "build the tree and report every violation");
    add_config_inputs(validate, in);

    auto* run = app.add_subcommand("run", "build, instantiate and run the task");
    add_config_inputs(run, in);
    run->add_option("--save-dir", save_dir, "replaces the task's save_dir");
    run->add_flag("--quiet", quiet, "do not echo log lines");

    auto* list = app.add_subcommand("list", "list registered modules");
    list->add_option("--kind", list_kind, "module kind, * for all");
    list->add_option("--tag", list_tags, "required tag, name=value (repeatable)");

    auto* doc = app.add_subcommand("docgen", "write the argument reference of every module");
    doc->add_option("--out", out_path, "output file (default stdout)");

    auto* tree = app.add_subcommand("tree", "print the tree overview or write it as Graphviz DOT");
    add_config_inputs(tree, in);
    tree->add_option("--dot", dot_path, "DOT output file, - for stdout");

    auto* generate = app.add_subcommand("generate", "write the canonical config of a valid tree");
    add_config_inputs(generate, in);
    generate->add_option("--out", out_path, "output file (default stdout)");

    auto* serve = app.add_subcommand("serve", "serve the editor API");
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "port, 0 for any free port");
    serve->add_option("--assets", assets, "directory with the built frontend");
    serve->add_option("--save-dir", save_dir, "save_dir for runs started from the editor");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        int code = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        Registry registry = demo::build_demo_registry();
        if (*validate) return cmd_validate(registry, in, err);
        if (*run) return cmd_run(registry, in, save_dir, quiet, out, err);
        if (*list) return cmd_list(registry, list_kind, list_tags, out, err);
        if (*doc) {
            write_output(out_path, docgen(registry), out, err);
            return kExitOk;
        }
        if (*tree) {
            auto root = load_tree(registry, in, err);
            if (!dot_path.empty()) {
                write_output(dot_path, to_dot(root, false), out, err);
            } else {
                auto task = demo::instantiate(root);
                out << export_state(*task, false).name << "\n";
                std::function<void(const ArgumentTreeNode&, int)> show = [&](const ArgumentTreeNode& n, int depth) {
                    for (const auto& slot : n.slots()) {
                        for (const auto& child : slot.nodes) {
                            out << std::string(2 * depth + 2, ' ') << slot.req_key << "#" << child.index() << ": "
                                << child.name() << "\n";
                            show(child, depth + 1);
                        }
                    }
                };
                show(root, 0);
            }
            return kExitOk;
        }
        if (*generate) {
            auto root = load_tree(registry, in, err);
            write_output(out_path, generate_config(root).to_json_text() + "\n", out, err);
            return kExitOk;
        }
        if (*serve) {
            gui::ServerOptions options;
            if (!assets.empty()) options.assets_dir = assets;
            if (!save_dir.empty()) options.run_save_dir = save_dir;
            gui::GuiServer server(registry, options);
            int bound = server.bind(host, port);
            if (bound < 0) {
                err << "error: cannot bind " << host << ":" << port << "\n";
                return kExitIo;
            }
            err << "serving on http://" << host << ":" << bound << "/\n";
            return server.listen() ? kExitOk : kExitIo;
        }
    } catch (const Exit& e) {
        return e.code;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitInvalid;
}

}  // namespace argtree::cli
