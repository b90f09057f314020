#pragma once

#include <stdexcept>
#include <string>

namespace pvota {

/// Base class for every error raised by the toolchain. `stage()` names the
/// pipeline stage so the CLI can report where a run failed.
class Error : public std::runtime_error {
public:
    Error(std::string stage, const std::string& what)
        : std::runtime_error(what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

class SyntaxOutsideSubset : public Error {
public:
    SyntaxOutsideSubset(int line, std::string construct)
        : Error("parse", "line " + std::to_string(line) + ": construct outside the supported subset: " + construct),
          line_(line), construct_(std::move(construct)) {}

    int line() const noexcept { return line_; }
    const std::string& construct() const noexcept { return construct_; }

private:
    int line_;
    std::string construct_;
};

class UnresolvedName : public Error {
public:
    UnresolvedName(const std::string& name, int line)
        : Error("parse", "line " + std::to_string(line) + ": unresolved name '" + name + "'"), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class PVarNotFound : public Error {
public:
    explicit PVarNotFound(const std::string& name)
        : Error("graph", "virtual physical variable not found in program: " + name), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class PolicyViolation : public Error {
public:
    explicit PolicyViolation(const std::string& what) : Error("prune", what) {}
};

class SchemaError : public Error {
public:
    SchemaError(const std::string& path, int line, const std::string& what)
        : Error("ingest", path + ":" + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class NonMonotoneTimestamp : public Error {
public:
    NonMonotoneTimestamp(const std::string& path, int line)
        : Error("ingest", path + ":" + std::to_string(line) + ": duplicate (variable, timestamp)"), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class UnknownEventType : public Error {
public:
    UnknownEventType(int row, const std::string& type)
        : Error("ingest", "event row " + std::to_string(row) + ": unknown event type '" + type + "'"), row_(row) {}
    int row() const noexcept { return row_; }

private:
    int row_;
};

class AmbiguousAlignment : public Error {
public:
    AmbiguousAlignment(const std::string& variable, long long epoch)
        : Error("ingest", "ambiguous alignment for '" + variable + "' at epoch " + std::to_string(epoch)) {}
};

class InsufficientBaseline : public Error {
public:
    InsufficientBaseline(const std::string& variable, std::size_t n)
        : Error("deviation", "insufficient baseline for '" + variable + "': " + std::to_string(n) + " samples"),
          n_(n) {}
    std::size_t count() const noexcept { return n_; }

private:
    std::size_t n_;
};

class TypeMismatch : public Error {
public:
    explicit TypeMismatch(const std::string& variable)
        : Error("deviation", "value type does not match model for '" + variable + "'") {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

} // namespace pvota
