#pragma once

#include <stdexcept>
#include <string>

namespace argtree {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CoercionError : public Error {
public:
    CoercionError(std::string arg, std::string raw, std::string expected);

    const std::string& argument() const { return arg_; }
    const std::string& raw() const { return raw_; }
    const std::string& expected() const { return expected_; }

private:
    std::string arg_;
    std::string raw_;
    std::string expected_;
};

class UnknownModule : public Error {
public:
    explicit UnknownModule(std::string name);
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class MissingModule : public Error {
public:
    MissingModule(std::string name, std::string reason);
    const std::string& name() const { return name_; }
    const std::string& reason() const { return reason_; }

private:
    std::string name_;
    std::string reason_;
};

class DuplicateName : public Error {
public:
    explicit DuplicateName(std::string name);
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class InvalidDescriptor : public Error {
public:
    using Error::Error;
};

class SyntaxError : public Error {
public:
    using Error::Error;
};

class NonScalarValue : public Error {
public:
    explicit NonScalarValue(std::string key);
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

class MalformedKey : public Error {
public:
    explicit MalformedKey(std::string key);
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

class AmbiguousValue : public Error {
public:
    AmbiguousValue(std::string first_key, std::string second_key);
    const std::string& first_key() const { return first_; }
    const std::string& second_key() const { return second_; }

private:
    std::string first_;
    std::string second_;
};

class UnknownPlaceholder : public Error {
public:
    explicit UnknownPlaceholder(std::string name);
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class InvalidTree : public Error {
public:
    using Error::Error;
};

class ConstructionError : public Error {
public:
    ConstructionError(std::string where, std::string detail);
    const std::string& where() const { return where_; }
    const std::string& detail() const { return detail_; }

private:
    std::string where_;
    std::string detail_;
};

class MissingSelection : public Error {
public:
    explicit MissingSelection(std::string node);
    const std::string& node() const { return node_; }

private:
    std::string node_;
};

class IndexOutOfRange : public Error {
public:
    IndexOutOfRange(std::string node, long long index, std::size_t size);
};

class RuntimeFailure : public Error {
public:
    RuntimeFailure(std::string where, std::string cause);
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

}  // namespace argtree
