#include "doctest.h"

#include "argtree/demo/demo_domain.hpp"
#include "argtree/schema.hpp"

using namespace argtree;

namespace {

ArgumentSpec boolean_spec() { return {"is_test_run", ValueKind::Boolean, std::string("False"), "", {}}; }
ArgumentSpec integer_spec() { return {"seed", ValueKind::Integer, std::int64_t(0), "", {}}; }
ArgumentSpec real_spec() { return {"ema_decay", ValueKind::Real, 0.0, "", {}}; }
ArgumentSpec choice_spec() { return {"ema_device", ValueKind::String, std::string("cpu"), "", {"cpu", "same"}}; }

ModuleDescriptor task_descriptor() {
    ModuleDescriptor d;
    d.name = "SingleSearchTask";
    d.kind = "task";
    d.tags["search"] = true;
    d.arguments = {{"save_dir", ValueKind::String, std::string("{path_tmp}"), "", {}}, integer_spec(), boolean_spec()};
    d.child_requirements = {{"cls_device", "device", {}, 1, 1, ""},
                            {"cls_trainer", "trainer", {}, 1, 1, ""},
                            {"cls_method", "method", {{"search", true}}, 1, 1, ""}};
    return d;
}

}  // namespace

TEST_CASE("boolean coercion accepts native and textual booleans") {
    auto spec = boolean_spec();
    CHECK(coerce_value(spec, true) == Scalar(true));
    CHECK(coerce_value(spec, std::string("True")) == Scalar(true));
    CHECK(coerce_value(spec, std::string("true")) == Scalar(true));
    CHECK(coerce_value(spec, std::string("False")) == Scalar(false));
    CHECK(coerce_value(spec, std::string("false")) == Scalar(false));
    CHECK(coerce_value(spec, spec.default_value) == Scalar(false));
    CHECK_THROWS_AS(coerce_value(spec, std::string("yes")), CoercionError);
    CHECK_THROWS_AS(coerce_value(spec, std::int64_t(1)), CoercionError);
}

TEST_CASE("integer coercion rejects fractional input") {
    auto spec = integer_spec();
    CHECK(coerce_value(spec, std::int64_t(0)) == Scalar(std::int64_t(0)));
    CHECK(coerce_value(spec, 4.0) == Scalar(std::int64_t(4)));
    CHECK(coerce_value(spec, std::string("-12")) == Scalar(std::int64_t(-12)));
    CHECK_THROWS_AS(coerce_value(spec, 0.5), CoercionError);
    CHECK_THROWS_AS(coerce_value(spec, std::string("1.5")), CoercionError);
    CHECK_THROWS_AS(coerce_value(spec, true), CoercionError);
}

TEST_CASE("real coercion parses decimal strings") {
    auto spec = real_spec();
    CHECK(coerce_value(spec, std::string("0.5")) == Scalar(0.5));
    CHECK(coerce_value(spec, 0.5) == Scalar(0.5));
    CHECK(coerce_value(spec, std::int64_t(2)) == Scalar(2.0));
    CHECK_THROWS_AS(coerce_value(spec, std::string("half")), CoercionError);
}

TEST_CASE("choices are enforced") {
    auto spec = choice_spec();
    CHECK(coerce_value(spec, std::string("same")) == Scalar(std::string("same")));
    try {
        coerce_value(spec, std::string("gpu"));
        FAIL("expected CoercionError");
    } catch (const CoercionError& e) {
        CHECK(e.argument() == "ema_device");
        CHECK(e.raw() == "\"gpu\"");
    }
}

TEST_CASE("coercion is idempotent") {
    const std::vector<std::pair<ArgumentSpec, Scalar>> cases = {
        {boolean_spec(), std::string("True")}, {integer_spec(), 7.0},          {real_spec(), std::string("1e-3")},
        {choice_spec(), std::string("cpu")},   {real_spec(), std::int64_t(3)}, {integer_spec(), std::string("5")}};
    for (const auto& [spec, raw] : cases) {
        Scalar once = coerce_value(spec, raw);
        CHECK(coerce_value(spec, once) == once);
    }
}

TEST_CASE("every shipped default coerces") {
    for (const auto& d : demo::demo_descriptors(true)) {
        for (const auto& a : d.arguments) {
            INFO(d.name << "." << a.name);
            CHECK_NOTHROW(coerce_value(a, a.default_value));
        }
    }
}

TEST_CASE("well-formed descriptor has no violations") {
    CHECK(validate_descriptor(task_descriptor()).empty());
    for (const auto& d : demo::demo_descriptors(true)) CHECK(validate_descriptor(d).empty());
}

TEST_CASE("duplicate argument is reported once") {
    auto d = task_descriptor();
    d.arguments.push_back(integer_spec());
    auto v = validate_descriptor(d);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == DescriptorViolation{DescriptorViolationCode::DuplicateArgument, "seed", ""});
}

TEST_CASE("requirement key without prefix is reported") {
    auto d = task_descriptor();
    d.child_requirements[0].key = "device";
    auto v = validate_descriptor(d);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == DescriptorViolation{DescriptorViolationCode::BadRequirementKey, "device", ""});
}

TEST_CASE("other descriptor breaches") {
    auto d = task_descriptor();
    d.child_requirements[1].count_min = 2;
    d.child_requirements[1].count_max = 1;
    d.child_requirements.push_back(d.child_requirements[0]);
    d.arguments.push_back({"bad.name", ValueKind::String, std::string(""), "", {}});
    d.arguments.push_back({"flag", ValueKind::Boolean, std::string("maybe"), "", {}});
    auto v = validate_descriptor(d);
    CHECK(v.size() == 4);
    auto has = [&](DescriptorViolationCode code, const std::string& subject) {
        return std::find(v.begin(), v.end(), DescriptorViolation{code, subject, ""}) != v.end();
    };
    CHECK(has(DescriptorViolationCode::BadCountRange, "cls_trainer"));
    CHECK(has(DescriptorViolationCode::DuplicateRequirement, "cls_device"));
    CHECK(has(DescriptorViolationCode::BadArgumentName, "bad.name"));
    CHECK(has(DescriptorViolationCode::BadDefault, "flag"));

    ModuleDescriptor empty;
    auto e = validate_descriptor(empty);
    CHECK(e.size() == 2);
}

TEST_CASE("tag matching requires every filter pair") {
    TagMap tags{{"search", true}, {"family", std::string("gd")}};
    CHECK(tags_match(tags, {}));
    CHECK(tags_match(tags, {{"search", true}}));
    CHECK_FALSE(tags_match(tags, {{"search", false}}));
    CHECK_FALSE(tags_match(tags, {{"search", std::string("true")}}));
    CHECK_FALSE(tags_match(tags, {{"nonexistent_tag", true}}));
}

TEST_CASE("count range text") {
    CHECK(count_range_text({"cls_x", "k", {}, 0, kUnbounded, ""}) == "0..*");
    CHECK(count_range_text({"cls_x", "k", {}, 1, 1, ""}) == "1..1");
}
