// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mvt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (segment files, headers, config). Carries a 1-based line when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

/// Row count of an embedding matrix does not match the segment count.
class AlignmentError : public Error {
public:
    AlignmentError(std::size_t expected, std::size_t found, const std::string& context = {})
        : Error((context.empty() ? std::string{} : context + ": ") + "row alignment mismatch, expected " +
                std::to_string(expected) + " rows, found " + std::to_string(found)),
          expected_(expected), found_(found) {}
    std::size_t expected() const noexcept { return expected_; }
    std::size_t found() const noexcept { return found_; }

private:
    std::size_t expected_;
    std::size_t found_;
};

/// Non-finite or otherwise unusable numeric payload.
class DataError : public Error {
public:
    DataError(const std::string& what, std::size_t row)
        : Error(what + " at row " + std::to_string(row)), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed (network, I/O); the owning video is skipped.
class StageError : public Error {
public:
    using Error::Error;
};

/// Collects non-fatal warnings. Thread-safe so one sink can be shared by workers.
class Diagnostics {
public:
    void warn(std::string message) {
        std::lock_guard lock(mutex_);
        warnings_.push_back(std::move(message));
    }

    std::vector<std::string> warnings() const {
        std::lock_guard lock(mutex_);
        return warnings_;
    }

    bool empty() const {
        std::lock_guard lock(mutex_);
        return warnings_.empty();
    }

private:
    mutable std::mutex mutex_;
    std::vector<std::string> warnings_;
};

namespace detail {
inline void warn(Diagnostics* diag, std::string message) {
    if (diag) diag->warn(std::move(message));
}
}  // namespace detail

}  // namespace mvt
