#include "doctest.h"

#include <filesystem>
#include <random>
#include <thread>

#include "argtree/gui_server.hpp"
#include "httplib.h"
#include "testkit.hpp"

using namespace argtree;
using namespace argtree::gui;

namespace {

const Registry& registry() {
    static const Registry r = demo::build_demo_registry(false);
    return r;
}

int status_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ApiError& e) {
        return e.status();
    }
    return 200;
}

const NodePath kRoot{};
const NodePath kTrainer{{"cls_trainer", 0}};

/// Empty session grown into a runnable search task.
void grow_search_task(EditorSession& s) {
    s.add_child(kRoot, "cls_task", "SingleSearchTask");
    s.add_child(kRoot, "cls_device", "CpuDevicesManager");
    s.add_child(kRoot, "cls_trainer", "SimpleTrainer");
    s.add_child(kRoot, "cls_method", "GradientDescentMethod");
    s.add_child({{"cls_method", 0}}, "cls_optimizers", "SGDOptimizer");
}

std::size_t count_code(const Json& status, const std::string& code) {
    std::size_t n = 0;
    for (const auto& v : status["violations"]) n += v["code"] == code;
    return n;
}

}  // namespace

TEST_CASE("empty session reports the missing entry") {
    EditorSession s(registry(), testkit::test_options());
    CHECK(s.revision() == 0);
    auto v = s.violations();
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == ViolationCode::CountViolation);
    CHECK(v[0].detail == "cls_task requires exactly 1, found 0");
    CHECK(s.tree_json()["tree"].is_null());
    CHECK(status_of([&] { s.generate(); }) == 409);
    CHECK(status_of([&] { s.runnable_tree(); }) == 409);
}

TEST_CASE("scripted editing session") {
    EditorSession s(registry(), testkit::test_options());
    grow_search_task(s);
    auto status = s.set_arg(kTrainer, "max_epochs", std::string("3"));
    CHECK(status["revision"] == 6);
    CHECK(s.tree()->at(kTrainer)->value("max_epochs") == Scalar(std::int64_t(3)));
    s.set_arg(kRoot, "seed", std::int64_t(4));
    s.set_arg({{"cls_method", 0}, {"cls_optimizers", 0}}, "lr", 0.1);
    auto valid = s.validate();
    CHECK(valid["violations"].empty());
    CHECK(valid["revision"] == 8);

    auto removed = s.remove_child({{"cls_device", 0}});
    REQUIRE(removed["violations"].size() == 1);
    CHECK(removed["violations"][0]["code"] == "CountViolation");
    CHECK(removed["violations"][0]["path"] == Json::array());
    CHECK(removed["violations"][0]["detail"] == "cls_device requires exactly 1, found 0");
    CHECK(s.dot().find("color=red") != std::string::npos);
    CHECK(status_of([&] { s.runnable_tree(); }) == 409);
}

TEST_CASE("mutation errors") {
    EditorSession s(registry(), testkit::test_options());
    grow_search_task(s);
    auto rev = s.revision();
    CHECK(status_of([&] { s.add_child(kRoot, "cls_device", "CpuDevicesManager"); }) == 409);
    CHECK(status_of([&] { s.add_child({{"cls_nothing", 0}}, "cls_device", "CpuDevicesManager"); }) == 404);
    CHECK(status_of([&] { s.add_child(kTrainer, "cls_unknown", "CpuDevicesManager"); }) == 404);
    CHECK(status_of([&] { s.add_child(kTrainer, "cls_callbacks", "CpuDevicesManager"); }) == 409);
    CHECK(status_of([&] { s.add_child(kTrainer, "cls_callbacks", "NoSuchCallback"); }) == 404);
    CHECK(status_of([&] { s.add_child({{"cls_method", 0}, {"cls_optimizers", 0}}, "cls_schedulers", "AdaBeliefOptimizer"); }) ==
          409);
    CHECK(status_of([&] { s.remove_child({{"cls_method", 0}}); }) == 200);
    rev = s.revision();
    CHECK(status_of([&] { s.add_child(kRoot, "cls_method", "FixedPointMethod"); }) == 409);
    CHECK(status_of([&] { s.set_arg(kTrainer, "max_epochs", std::string("three")); }) == 422);
    CHECK(status_of([&] { s.set_arg(kTrainer, "ema_device", std::string("gpu")); }) == 422);
    CHECK(status_of([&] { s.set_arg(kRoot, "save_dir", std::string("{nowhere}/x")); }) == 422);
    CHECK(status_of([&] { s.set_arg(kTrainer, "no_such_arg", std::int64_t(1)); }) == 404);
    CHECK(status_of([&] { s.remove_child({{"cls_trainer", 3}}); }) == 404);
    CHECK(s.revision() == rev);
    CHECK(status_of([&] { s.set_arg(kTrainer, "max_epochs", std::int64_t(2), rev - 1); }) == 409);
    CHECK(status_of([&] { s.set_arg(kTrainer, "max_epochs", std::int64_t(2), rev); }) == 200);
    CHECK(s.revision() == rev + 1);
}

TEST_CASE("children are renumbered and counted") {
    EditorSession s(registry(), testkit::test_options());
    grow_search_task(s);
    s.add_child(kTrainer, "cls_callbacks", "CheckpointCallback");
    s.add_child(kTrainer, "cls_callbacks", "PrintCallback");
    s.add_child(kTrainer, "cls_callbacks", "EarlyStoppingCallback");
    s.remove_child({{"cls_trainer", 0}, {"cls_callbacks", 0}});
    auto tree_copy = s.tree();
    const auto& kids = tree_copy->at(kTrainer)->children("cls_callbacks");
    REQUIRE(kids.size() == 2);
    CHECK(kids[0].name() == "PrintCallback");
    CHECK(kids[0].index() == 0);
    CHECK(kids[1].index() == 1);
    auto tree = s.tree_json();
    CHECK(tree["tree"]["name"] == "SingleSearchTask");
}

TEST_CASE("search spans module names, argument names and values") {
    EditorSession s(registry(), testkit::test_options());
    grow_search_task(s);
    auto matches = s.search("as");
    std::set<std::string> fields;
    for (const auto& m : matches) {
        fields.insert(m.field);
        std::string lower = m.matched_text;
        std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
        CHECK(lower.find("as") != std::string::npos);
    }
    CHECK(matches.size() >= 2);
    CHECK(fields.count("module_name") == 1);
    CHECK(fields.count("arg_name") == 1);
    CHECK(std::any_of(matches.begin(), matches.end(), [](const SearchMatch& m) {
        return m.field == "module_name" && m.matched_text == "SingleSearchTask";
    }));
    CHECK(std::any_of(matches.begin(), matches.end(),
                      [](const SearchMatch& m) { return m.field == "arg_name" && m.matched_text == "cls_task"; }));
    s.set_arg(kRoot, "note", std::string("BASELINE"));
    auto values = s.search("baseline");
    REQUIRE(values.size() == 1);
    CHECK(values[0].field == "arg_value");
    CHECK(values[0].node_path.empty());
    CHECK(s.search("").empty());
}

TEST_CASE("partial save and graft") {
    EditorSession s(registry(), testkit::test_options());
    grow_search_task(s);
    s.add_child(kTrainer, "cls_callbacks", "CheckpointCallback");
    s.add_child(kTrainer, "cls_exp_loggers", "CsvExpLogger");
    s.set_arg(kTrainer, "max_epochs", std::int64_t(7));
    auto saved = s.save(kTrainer);
    CHECK(saved["config"]["cls_trainer"] == "SimpleTrainer");
    CHECK(saved["config"]["{cls_trainer#0}.max_epochs"] == 7);
    CHECK_FALSE(saved["config"].contains("cls_task"));

    EditorSession fresh(registry(), testkit::test_options());
    fresh.add_child(kRoot, "cls_task", "SingleRetrainTask");
    fresh.add_child(kRoot, "cls_trainer", "SimpleTrainer");
    fresh.load(config_from_json(saved["config"]), kTrainer);
    CHECK(structurally_equal(*fresh.tree()->at(kTrainer), *s.tree()->at(kTrainer)));
    CHECK(fresh.tree()->at(kTrainer)->req_key() == "cls_trainer");

    Json wrong = {{"cls_trainer", "CpuDevicesManager"}};
    CHECK(status_of([&] { fresh.load(config_from_json(wrong), kTrainer); }) == 409);
    Json unknown = {{"cls_trainer", "Nope"}};
    CHECK(status_of([&] { fresh.load(config_from_json(unknown), kTrainer); }) == 422);
    CHECK(status_of([&] { fresh.load(config_from_json(saved["config"]), NodePath{{"cls_trainer", 4}}); }) == 404);
}

TEST_CASE("full load, generate and reset") {
    EditorSession s(registry(), testkit::test_options());
    auto golden = testkit::load_config("search_task.json");
    s.load(golden, std::nullopt);
    CHECK(s.violations().empty());
    auto generated = s.generate();
    auto doc = config_from_json(generated["config"]);
    auto rebuilt = build_tree(registry(), doc, testkit::test_options());
    CHECK(structurally_equal(rebuilt, *s.tree()));

    auto lenient = testkit::load_config("search_task.json");
    lenient.set("cls_device", std::string(""));
    lenient.erase("{cls_device}.num_devices");
    s.load(lenient, std::nullopt);
    REQUIRE(s.violations().size() == 1);
    CHECK(s.violations()[0].code == ViolationCode::CountViolation);

    auto broken = testkit::load_config("search_task.json");
    broken.set("{cls_task}.bogus", std::int64_t(1));
    auto before = s.revision();
    CHECK(status_of([&] { s.load(broken, std::nullopt); }) == 422);
    CHECK(s.revision() == before);

    s.reset(std::string("SingleRetrainTask"));
    CHECK(s.tree()->name() == "SingleRetrainTask");
    CHECK(s.tree()->node_count() == 1);
    CHECK(status_of([&] { s.reset(std::string("SimpleTrainer")); }) == 409);
    s.reset(std::nullopt);
    CHECK_FALSE(s.tree().has_value());
}

TEST_CASE("violations always match validate_tree after random mutations") {
    EditorSession s(registry(), testkit::test_options());
    std::mt19937_64 rng(17);
    auto names = registry().filter("*");
    for (int step = 0; step < 400; ++step) {
        auto tree = s.tree();
        std::vector<NodePath> paths;
        if (tree) {
            std::function<void(const ArgumentTreeNode&, NodePath)> walk = [&](const ArgumentTreeNode& n, NodePath p) {
                paths.push_back(p);
                for (const auto& slot : n.slots()) {
                    for (const auto& c : slot.nodes) {
                        auto cp = p;
                        cp.push_back({slot.req_key, c.index()});
                        walk(c, cp);
                    }
                }
            };
            walk(*tree, {});
        }
        auto pick_path = [&]() { return paths[std::uniform_int_distribution<std::size_t>(0, paths.size() - 1)(rng)]; };
        int op = std::uniform_int_distribution<int>(0, 3)(rng);
        try {
            if (!tree) {
                s.add_child(kRoot, "cls_task", rng() % 2 ? "SingleSearchTask" : "SingleRetrainTask");
            } else if (op <= 1) {
                auto path = pick_path();
                const auto& reqs = tree->at(path)->descriptor().child_requirements;
                if (reqs.empty()) continue;
                const auto& req = reqs[rng() % reqs.size()];
                s.add_child(path, req.key, names[rng() % names.size()]->name);
            } else if (op == 2) {
                auto path = pick_path();
                if (path.empty() && rng() % 4) continue;
                s.remove_child(path);
            } else {
                auto path = pick_path();
                const auto& args = tree->at(path)->descriptor().arguments;
                if (args.empty()) continue;
                const auto& arg = args[rng() % args.size()];
                s.set_arg(path, arg.name, testkit::random_value(arg, rng));
            }
        } catch (const ApiError&) {
        }
        auto now = s.tree();
        auto expected = now ? validate_tree(*now)
                            : std::vector<Violation>{{ViolationCode::CountViolation, {}, "cls_task requires exactly 1, found 0"}};
        REQUIRE(s.violations() == expected);
    }
}

TEST_CASE("concurrent readers and writers") {
    EditorSession s(registry(), testkit::test_options());
    grow_search_task(s);
    std::atomic<bool> done{false};
    std::atomic<int> reads{0};
    std::thread reader([&] {
        while (!done) {
            auto json = s.tree_json();
            auto rev = json["revision"].get<std::int64_t>();
            CHECK(rev >= 5);
            ++reads;
        }
    });
    std::vector<std::thread> writers;
    for (int w = 0; w < 4; ++w) {
        writers.emplace_back([&, w] {
            for (int i = 0; i < 50; ++i) s.set_arg(kTrainer, "max_epochs", std::int64_t(w * 100 + i));
        });
    }
    for (auto& t : writers) t.join();
    done = true;
    reader.join();
    CHECK(s.revision() == 5 + 200);
    CHECK(reads > 0);
}

TEST_CASE("http api") {
    auto dir = std::filesystem::temp_directory_path() / "argtree-gui-run";
    std::filesystem::remove_all(dir);
    ServerOptions options;
    options.build = testkit::test_options();
    options.run_save_dir = dir.string();
    GuiServer server(registry(), options);
    int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread thread([&] { server.listen(); });
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(10, 0);
    while (!client.Get("/api/v1/tree")) std::this_thread::sleep_for(std::chrono::milliseconds(5));

    auto reg = client.Get("/api/v1/registry");
    REQUIRE(reg);
    CHECK(reg->status == 200);
    auto reg_json = Json::parse(reg->body);
    CHECK(reg_json["modules"].size() == registry().size());
    CHECK(reg_json["missing"]["AdaBeliefOptimizer"] == demo::kExtrasMissingReason);
    bool trainer_found = false;
    for (const auto& m : reg_json["modules"]) {
        if (m["name"] == "SimpleTrainer") {
            trainer_found = true;
            CHECK(m["arguments"].size() >= 3);
            CHECK(m["child_requirements"][0]["max"].is_null());
        }
    }
    CHECK(trainer_found);

    auto post = [&](const std::string& path, const Json& body) {
        return client.Post(path, body.dump(), "application/json");
    };
    CHECK(post("/api/v1/tree/children", {{"path", Json::array()}, {"req_key", "cls_task"}, {"class_name", "SingleRetrainTask"}, {"revision", 0}})->status == 200);
    CHECK(post("/api/v1/tree/children", {{"path", Json::array()}, {"req_key", "cls_device"}, {"class_name", "CpuDevicesManager"}})->status == 200);
    CHECK(post("/api/v1/tree/children", {{"path", Json::array()}, {"req_key", "cls_device"}, {"class_name", "CpuDevicesManager"}})->status == 409);
    CHECK(post("/api/v1/tree/children", {{"path", Json::array()}, {"req_key", "cls_trainer"}, {"class_name", "SimpleTrainer"}})->status == 200);
    CHECK(post("/api/v1/tree/children", {{"path", Json::array()}, {"req_key", "cls_method"}, {"class_name", "GradientDescentMethod"}})->status == 200);
    auto added = post("/api/v1/tree/children",
                      {{"path", Json::array({Json::array({"cls_method", 0})})}, {"req_key", "cls_optimizers"}, {"class_name", "SGDOptimizer"}});
    REQUIRE(added->status == 200);
    auto added_json = Json::parse(added->body);
    CHECK(added_json["violations"].empty());
    auto rev = added_json["revision"].get<std::int64_t>();

    auto patch = [&](const Json& body) { return client.Patch("/api/v1/tree/args", body.dump(), "application/json"); };
    auto set = patch({{"path", Json::array({Json::array({"cls_trainer", 0})})}, {"arg", "max_epochs"}, {"value", "3"}, {"revision", rev}});
    REQUIRE(set->status == 200);
    CHECK(Json::parse(set->body)["revision"] == rev + 1);
    auto stale = patch({{"path", Json::array({Json::array({"cls_trainer", 0})})}, {"arg", "max_epochs"}, {"value", 4}, {"revision", rev}});
    CHECK(stale->status == 409);
    CHECK(Json::parse(stale->body)["error"]["code"] == "StaleRevision");
    auto bad_value = patch({{"path", Json::array({Json::array({"cls_trainer", 0})})}, {"arg", "max_epochs"}, {"value", "x"}});
    CHECK(bad_value->status == 422);
    CHECK(Json::parse(bad_value->body)["error"]["code"] == "CoercionError");
    CHECK(patch({{"path", "nope"}, {"arg", "x"}, {"value", 1}})->status == 400);
    CHECK(client.Post("/api/v1/tree/children", "{not json", "application/json")->status == 400);

    auto search = client.Get("/api/v1/search?q=EPOCH");
    REQUIRE(search->status == 200);
    CHECK_FALSE(Json::parse(search->body)["matches"].empty());
    CHECK(Json::parse(client.Post("/api/v1/validate")->body)["violations"].empty());
    auto generated = client.Post("/api/v1/generate");
    REQUIRE(generated->status == 200);
    CHECK(Json::parse(generated->body)["config"]["{cls_trainer#0}.max_epochs"] == 3);
    auto saved = post("/api/v1/save", {{"scope_path", Json::array({Json::array({"cls_trainer", 0})})}});
    REQUIRE(saved->status == 200);
    CHECK(Json::parse(saved->body)["config"]["cls_trainer"] == "SimpleTrainer");
    auto dot = client.Get("/api/v1/dot");
    CHECK(dot->body.rfind("digraph", 0) == 0);

    auto run = client.Post("/api/v1/run");
    REQUIRE(run);
    CHECK(run->status == 200);
    std::vector<Json> events;
    std::istringstream lines(run->body);
    for (std::string line; std::getline(lines, line);) events.push_back(Json::parse(line));
    REQUIRE_FALSE(events.empty());
    CHECK(events.back()["event"] == "done");
    CHECK(events.back()["epochs_run"] == 3);
    CHECK(std::count_if(events.begin(), events.end(), [](const Json& e) { return e["event"] == "log"; }) >= 3);
    CHECK(std::filesystem::exists(dir / "config.json"));

    auto removed = client.Delete("/api/v1/tree/children", Json({{"path", Json::array({Json::array({"cls_device", 0})})}}).dump(),
                                 "application/json");
    REQUIRE(removed->status == 200);
    CHECK(count_code(Json::parse(removed->body), "CountViolation") == 1);
    CHECK(client.Post("/api/v1/run")->status == 409);
    CHECK(client.Post("/api/v1/generate")->status == 409);

    auto loaded = post("/api/v1/load", {{"config", Json::parse(testkit::read_file(testkit::config_path("search_task.json")))}});
    REQUIRE(loaded->status == 200);
    CHECK(Json::parse(loaded->body)["violations"].empty());
    CHECK(post("/api/v1/load", {{"config", {{"cls_task", Json::array()}}}})->status == 422);
    CHECK(post("/api/v1/reset", Json::object())->status == 200);
    CHECK(Json::parse(client.Get("/api/v1/tree")->body)["tree"].is_null());

    auto index = client.Get("/");
    REQUIRE(index);
    CHECK(index->status == 200);
    CHECK(index->body.find("/api/v1/registry") != std::string::npos);

    server.stop();
    thread.join();
    std::filesystem::remove_all(dir);
}

TEST_CASE("registry json of an empty registry") {
    auto j = registry_to_json(Registry{});
    CHECK(j["modules"].empty());
    CHECK(j["missing"].empty());
}
