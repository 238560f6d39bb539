#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taskseq {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unknown object id (or NULL where a real object is required).
class LookupError : public Error {
public:
    using Error::Error;
};

class CorpusIntegrityError : public Error {
public:
    CorpusIntegrityError(std::string scenario, std::size_t step, const std::string& what)
        : Error("corpus integrity: scenario " + scenario + " step " + std::to_string(step) + ": " + what),
          scenario_(std::move(scenario)),
          step_(step) {}

    const std::string& scenario() const { return scenario_; }
    std::size_t step() const { return step_; }

private:
    std::string scenario_;
    std::size_t step_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class VersionError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class ExpertError : public Error {
public:
    using Error::Error;
};

class SessionError : public Error {
public:
    using Error::Error;
};

}  // namespace taskseq
