#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace icmt {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A bank that must hold candidates turned out empty.
class EmptyBankError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or precondition violated by the caller.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Lookup of an id that is not present.
class UnknownIdError : public Error {
public:
    using Error::Error;
};

/// Vector dimensions disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Failure talking to the generation service or reading replay records.
class GenerationError : public Error {
public:
    GenerationError(const std::string& what, bool retryable)
        : Error(what), retryable_(retryable) {}

    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

/// Replay file has no record for the requested prompt hash.
class ReplayMissError : public GenerationError {
public:
    explicit ReplayMissError(const std::string& prompt_hash)
        : GenerationError("replay miss: no record for prompt_hash " + prompt_hash, false),
          hash_(prompt_hash) {}

    const std::string& prompt_hash() const noexcept { return hash_; }

private:
    std::string hash_;
};

} // namespace icmt
