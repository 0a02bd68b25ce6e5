#pragma once

// Exception hierarchy shared by every jetc module.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jetc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed expression text. `position` is a 0-based character offset.
struct SyntaxError : Error {
    SyntaxError(std::size_t position, std::string expected)
        : Error("syntax error at position " + std::to_string(position) + ": expected " + expected),
          position(position),
          expected(std::move(expected)) {}
    std::size_t position;
    std::string expected;
};

struct UnknownVariable : Error {
    explicit UnknownVariable(std::string name)
        : Error("unknown variable '" + name + "'"), name(std::move(name)) {}
    std::string name;
};

// log of a non-positive number, sqrt of a negative number, division by zero.
struct EvalDomainError : Error {
    using Error::Error;
};

struct InvalidSpace : Error {
    using Error::Error;
};

struct GridTooSmall : Error {
    using Error::Error;
};

struct InvalidGrid : Error {
    using Error::Error;
};

struct NonFiniteEncountered : Error {
    using Error::Error;
};

struct NotGeometric : Error {
    using Error::Error;
};

// Diagnostics raised while reading a problem file. Line and column are 1-based;
// a zero column means "whole line".
struct FileError : Error {
    FileError(const std::string& kind, std::size_t line, std::size_t column, const std::string& what)
        : Error(kind + " at " + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          line(line),
          column(column) {}
    std::size_t line;
    std::size_t column;
};

struct ParseError : FileError {
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : FileError("ParseError", line, column, what) {}
};

struct MissingCoefficient : FileError {
    MissingCoefficient(const std::string& slot)
        : FileError("MissingCoefficient", 0, 0, slot), slot(slot) {}
    std::string slot;
};

struct DuplicateDefinition : FileError {
    DuplicateDefinition(std::size_t line, std::size_t column, const std::string& what)
        : FileError("DuplicateDefinition", line, column, what) {}
};

struct UnknownCoordinate : FileError {
    UnknownCoordinate(std::size_t line, std::size_t column, const std::string& name)
        : FileError("UnknownCoordinate", line, column, name), name(name) {}
    std::string name;
};

}  // namespace jetc
