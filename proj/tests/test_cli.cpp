#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "argtree/demo/demo_domain.hpp"
#include "cli.hpp"
#include "testkit.hpp"

using namespace argtree;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "argtree");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("argtree-cli-" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string file(const std::string& name, const std::string& text) const {
        auto path = (dir / name).string();
        std::ofstream(path) << text;
        return path;
    }
};

const std::string kEnv = "--env=path_tmp=/tmp/argtree-cli-test";

}  // namespace

TEST_CASE("validate the golden config") {
    auto r = invoke({"validate", testkit::config_path("search_task.json"), kEnv});
    CHECK(r.code == 0);
    CHECK(r.err == "OK: 5 nodes\n");
    CHECK(r.out.empty());
}

TEST_CASE("validate reports every violation") {
    auto r = invoke({"validate", testkit::config_path("search_task.json"), kEnv, "--set",
                  "cls_device=CudaDevicesManager, CudaDevicesManager"});
    CHECK(r.code == 2);
    CHECK(r.err.find("CountViolation [] cls_device") != std::string::npos);

    Scratch s("violations");
    auto path = s.file("bad.json", R"({"cls_task": "SingleSearchTask", "cls_device": "CpuDevicesManager",
        "cls_trainer": "SimpleTrainer", "{cls_trainer}.bogus": 1, "cls_data": "Nope"})");
    auto many = invoke({"validate", path, kEnv});
    CHECK(many.code == 2);
    CHECK(many.err.find("UnknownModule [] cls_data#0") != std::string::npos);
}

TEST_CASE("validate i/o failures") {
    CHECK(invoke({"validate", "/nonexistent/config.json"}).code == 1);
    Scratch s("syntax");
    CHECK(invoke({"validate", s.file("broken.json", "{\"cls_task\": ")}).code == 1);
    CHECK(invoke({"validate", s.file("list.json", "{\"cls_task\": [1]}")}).code == 1);
    CHECK(invoke({"validate", s.file("key.json", "{\"{cls_task.x\": 1}")}).code == 2);
    CHECK(invoke({"validate"}).code == 2);
    CHECK(invoke({"frobnicate"}).code == 2);
    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("run writes the save directory") {
    Scratch s("run");
    auto r = invoke({"run", testkit::config_path("search_task.json"), kEnv, "--save-dir", s.dir.string(), "--set",
                  "{cls_task}.is_test_run=false", "--quiet"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("epochs_run: 3") != std::string::npos);
    CHECK(fs::exists(s.dir / "config.json"));
    CHECK(fs::exists(s.dir / "log.txt"));
    std::size_t checkpoints = 0;
    for (const auto& e : fs::directory_iterator(s.dir / "checkpoints")) checkpoints += e.path().extension() == ".json";
    CHECK(checkpoints == 1);
    auto again = invoke({"validate", (s.dir / "config.json").string(), kEnv});
    CHECK(again.code == 0);
}

TEST_CASE("run honours overrides and placeholders") {
    Scratch s("overrides");
    auto r = invoke({"run", testkit::config_path("search_task.json"), "--env=path_tmp=" + s.dir.string(), "--set",
                  "{cls_trainer}.max_epochs=1", "--set", "{cls_task}.is_test_run=false", "--quiet"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("epochs_run: 1") != std::string::npos);
    CHECK(fs::exists(s.dir / "config.json"));
    CHECK(fs::exists(s.dir / "log.txt"));
}

TEST_CASE("run without the extras plugin prints the install hint") {
    ::unsetenv(demo::kExtrasEnvVar);
    auto r = invoke({"run", testkit::config_path("extras_adabelief.json"), kEnv});
    CHECK(r.code == 2);
    CHECK(r.err.find("MissingModule") != std::string::npos);
    CHECK(r.err.find("optional plugin 'extras' not installed") != std::string::npos);
    CHECK(r.err.find(demo::kExtrasEnvVar) != std::string::npos);

    Scratch s("extras");
    ::setenv(demo::kExtrasEnvVar, "1", 1);
    auto ok = invoke({"run", testkit::config_path("extras_adabelief.json"), kEnv, "--save-dir", s.dir.string(), "--quiet"});
    ::unsetenv(demo::kExtrasEnvVar);
    CHECK(ok.code == 0);
}

TEST_CASE("list filters by kind and tags") {
    auto r = invoke({"list", "--kind", "method", "--tag", "search=true"});
    CHECK(r.code == 0);
    CHECK(r.out == "GradientDescentMethod\tmethod\nUniformRandomMethod\tmethod\n");
    auto all = invoke({"list"});
    CHECK(all.out.find("AdaBeliefOptimizer\tmissing") != std::string::npos);
    CHECK(invoke({"list", "--tag", "search"}).code == 2);
}

TEST_CASE("docgen to stdout and file") {
    auto r = invoke({"docgen"});
    CHECK(r.code == 0);
    CHECK(r.out == docgen(demo::build_demo_registry()));
    Scratch s("docgen");
    auto path = (s.dir / "modules.txt").string();
    CHECK(invoke({"docgen", "--out", path}).code == 0);
    CHECK(testkit::read_file(path) == r.out);
    CHECK(invoke({"docgen", "--out", "/nonexistent/dir/modules.txt"}).code == 1);
}

TEST_CASE("tree and dot output") {
    Scratch s("dot");
    auto path = (s.dir / "tree.dot").string();
    auto r = invoke({"tree", testkit::config_path("search_task.json"), kEnv, "--dot", path});
    CHECK(r.code == 0);
    auto dot = testkit::read_file(path);
    std::regex box("shape=box");
    CHECK(std::distance(std::sregex_iterator(dot.begin(), dot.end(), box), std::sregex_iterator()) == 5);
    auto overview = invoke({"tree", testkit::config_path("search_task.json"), kEnv});
    CHECK(overview.code == 0);
    CHECK(overview.out.find("cls_trainer#0: SimpleTrainer") != std::string::npos);
    CHECK(invoke({"tree", testkit::config_path("search_task.json"), kEnv, "--set", "cls_trainer=Nope"}).code == 2);
}

TEST_CASE("generate then validate") {
    Scratch s("generate");
    auto path = (s.dir / "canonical.json").string();
    CHECK(invoke({"generate", testkit::config_path("random_search.json"), kEnv, "--out", path}).code == 0);
    CHECK(invoke({"validate", path, kEnv}).code == 0);
    auto first = testkit::read_file(path);
    CHECK(invoke({"generate", path, kEnv, "--out", path}).code == 0);
    CHECK(testkit::read_file(path) == first);
    auto stdout_run = invoke({"generate", testkit::config_path("random_search.json"), kEnv});
    CHECK(stdout_run.out == first);
}

TEST_CASE("entry options build partial trees") {
    Scratch s("entry");
    auto path = s.file("trainer.json", R"({"cls_trainer": "SimpleTrainer", "{cls_trainer#0}.max_epochs": 4})");
    auto r = invoke({"validate", path, "--entry", "cls_trainer", "--entry-kind", "trainer"});
    CHECK(r.code == 0);
    CHECK(r.err == "OK: 1 nodes\n");
    CHECK(invoke({"validate", path}).code == 2);
    CHECK(invoke({"validate", path, "--env", "broken"}).code == 2);
}

TEST_CASE("installed binary keeps the exit code contract") {
    const std::string bin = ARGTREE_CLI_PATH;
    auto status = [&](const std::string& args) {
        int raw = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    CHECK(status("validate " + testkit::config_path("search_task.json")) == 0);
    CHECK(status("validate /nonexistent/config.json") == 1);
    CHECK(status("validate " + testkit::config_path("search_task.json") +
                 " --set 'cls_device=CudaDevicesManager, CudaDevicesManager'") == 2);
}
