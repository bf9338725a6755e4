#include "doctest.h"

#include <chrono>
#include <cstdlib>

#include "argtree/demo/demo_domain.hpp"
#include "argtree/registry.hpp"

using namespace argtree;

namespace {

ModuleDescriptor simple(const std::string& name, const std::string& kind, TagMap tags = {}) {
    ModuleDescriptor d;
    d.name = name;
    d.kind = kind;
    d.tags = std::move(tags);
    return d;
}

}  // namespace

TEST_CASE("register then lookup") {
    Registry r;
    r.add(simple("SimpleTrainer", "trainer"));
    CHECK(r.lookup("SimpleTrainer").kind == "trainer");
    CHECK_THROWS_AS(r.add(simple("SimpleTrainer", "trainer")), DuplicateName);
    CHECK_THROWS_AS(r.lookup(""), UnknownModule);
    CHECK_THROWS_AS(r.lookup("Nope"), UnknownModule);
}

TEST_CASE("invalid descriptors are refused") {
    Registry r;
    auto d = simple("Broken", "trainer");
    d.child_requirements.push_back({"device", "device", {}, 1, 1, ""});
    CHECK_THROWS_AS(r.add(d), InvalidDescriptor);
    CHECK(r.size() == 0);
}

TEST_CASE("missing modules") {
    Registry r;
    r.add_missing("AdaBeliefOptimizer", "optional plugin 'extras' not installed");
    try {
        r.lookup("AdaBeliefOptimizer");
        FAIL("expected MissingModule");
    } catch (const MissingModule& e) {
        CHECK(e.reason() == "optional plugin 'extras' not installed");
        CHECK(std::string(e.what()).find("optional plugin 'extras' not installed") != std::string::npos);
    }
    CHECK(r.filter("*").empty());
    CHECK(r.filter("optimizer").empty());
    CHECK_THROWS_AS(r.add(simple("AdaBeliefOptimizer", "optimizer")), DuplicateName);
    r.add(simple("SGDOptimizer", "optimizer"));
    CHECK_THROWS_AS(r.add_missing("SGDOptimizer", "x"), DuplicateName);
}

TEST_CASE("lookup trims whitespace") {
    auto r = demo::build_demo_registry(false);
    CHECK(&r.lookup("SimpleTrainer ") == &r.lookup("SimpleTrainer"));
    CHECK(r.lookup("  CudaDevicesManager").name == "CudaDevicesManager");
}

TEST_CASE("filter matches a brute-force scan") {
    const auto all = demo::demo_descriptors(false);
    auto r = demo::build_demo_registry(false);
    const std::vector<std::pair<std::string, TagMap>> queries = {
        {"method", {{"search", true}}},       {"method", {}},        {"optimizer", {{"nonexistent_tag", true}}},
        {"task", {{"search", false}}},        {"nothing", {}},       {"*", {}},
        {"network_layer", {}},                {"optimizer", {}}};
    for (const auto& [kind, tags] : queries) {
        std::vector<std::string> expected;
        for (const auto& d : all) {
            bool kind_ok = kind == "*" || d.kind == kind;
            bool tags_ok = true;
            for (const auto& [k, v] : tags) {
                auto it = d.tags.find(k);
                tags_ok = tags_ok && it != d.tags.end() && it->second == v;
            }
            if (kind_ok && tags_ok && !r.is_missing(d.name)) expected.push_back(d.name);
        }
        std::sort(expected.begin(), expected.end());
        std::vector<std::string> got;
        for (const auto* d : r.filter(kind, tags)) got.push_back(d->name);
        INFO(kind);
        CHECK(got == expected);
    }
    std::vector<std::string> search_methods;
    for (const auto* d : r.filter("method", {{"search", true}})) search_methods.push_back(d->name);
    CHECK(search_methods == std::vector<std::string>{"GradientDescentMethod", "UniformRandomMethod"});
}

TEST_CASE("registration order does not change queries") {
    auto all = demo::demo_descriptors(true);
    Registry forward;
    for (const auto& d : all) forward.add(d);
    Registry backward;
    for (auto it = all.rbegin(); it != all.rend(); ++it) backward.add(*it);
    for (const auto& kind : forward.kinds()) {
        auto a = forward.filter(kind);
        auto b = backward.filter(kind);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->name == b[i]->name);
    }
}

TEST_CASE("unrelated descriptors leave filters unchanged") {
    auto r = demo::build_demo_registry(false);
    auto before = r.filter("method", {{"search", true}}).size();
    r.add(simple("ZzzMethod", "other_kind", {{"search", true}}));
    CHECK(r.filter("method", {{"search", true}}).size() == before);
}

TEST_CASE("extras plugin follows the environment flag") {
    auto off = demo::build_demo_registry(false);
    CHECK(off.is_missing("AdaBeliefOptimizer"));
    CHECK(off.missing().at("AdaBeliefOptimizer") == demo::kExtrasMissingReason);
    auto on = demo::build_demo_registry(true);
    CHECK(on.find("AdaBeliefOptimizer") != nullptr);
    CHECK(on.filter("optimizer").size() == off.filter("optimizer").size() + 1);

    ::setenv(demo::kExtrasEnvVar, "1", 1);
    CHECK(demo::build_demo_registry().find("AdaBeliefOptimizer") != nullptr);
    ::setenv(demo::kExtrasEnvVar, "0", 1);
    CHECK(demo::build_demo_registry().is_missing("AdaBeliefOptimizer"));
    ::unsetenv(demo::kExtrasEnvVar);
    CHECK(demo::build_demo_registry().is_missing("AdaBeliefOptimizer"));
}

TEST_CASE("demo registry builds quickly") {
    auto start = std::chrono::steady_clock::now();
    auto r = demo::build_demo_registry(true);
    auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    CHECK(r.size() >= 30);
    CHECK(elapsed < 50.0);
}
