#include "argtree/errors.hpp"

#include <utility>

namespace argtree {

CoercionError::CoercionError(std::string arg, std::string raw, std::string expected)
    : Error("cannot use " + raw + " for argument '" + arg + "' (expected " + expected + ")"),
      arg_(std::move(arg)),
      raw_(std::move(raw)),
      expected_(std::move(expected)) {}

UnknownModule::UnknownModule(std::string name)
    : Error("unknown module '" + name + "'"), name_(std::move(name)) {}

MissingModule::MissingModule(std::string name, std::string reason)
    : Error("module '" + name + "' is unavailable: " + reason), name_(std::move(name)), reason_(std::move(reason)) {}

DuplicateName::DuplicateName(std::string name)
    : Error("module name '" + name + "' is already registered"), name_(std::move(name)) {}

NonScalarValue::NonScalarValue(std::string key)
    : Error("value of '" + key + "' is not a scalar"), key_(std::move(key)) {}

MalformedKey::MalformedKey(std::string key) : Error("malformed key '" + key + "'"), key_(std::move(key)) {}

AmbiguousValue::AmbiguousValue(std::string first_key, std::string second_key)
    : Error("'" + first_key + "' and '" + second_key + "' set different values for the same argument"),
      first_(std::move(first_key)),
      second_(std::move(second_key)) {}

UnknownPlaceholder::UnknownPlaceholder(std::string name)
    : Error("unknown placeholder '{" + name + "}'"), name_(std::move(name)) {}

ConstructionError::ConstructionError(std::string where, std::string detail)
    : Error("cannot construct " + where + ": " + detail), where_(std::move(where)), detail_(std::move(detail)) {}

MissingSelection::MissingSelection(std::string node)
    : Error("no candidate selection for node '" + node + "'"), node_(std::move(node)) {}

IndexOutOfRange::IndexOutOfRange(std::string node, long long index, std::size_t size)
    : Error("selection index " + std::to_string(index) + " out of range for node '" + node + "' with " +
            std::to_string(size) + " candidates") {}

RuntimeFailure::RuntimeFailure(std::string where, std::string cause)
    : Error("run failed at " + where + ": " + cause), where_(std::move(where)) {}

}  // namespace argtree
