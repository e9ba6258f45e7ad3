#pragma once

#include <stdexcept>
#include <string>

namespace edformer {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incompatible tensor or series shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Invalid hyperparameters or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// NaN or infinite values where finite values are required.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

// Misuse of the differentiation tape (non-scalar loss, foreign tensor, reuse).
class TapeError : public Error {
public:
    using Error::Error;
};

// Malformed CSV input. Row and column are 1-based as seen in the file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : Error(what), row_(row), column_(column) {}

    std::size_t row() const { return row_; }
    std::size_t column() const { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

class BadMagicError : public CheckpointError {
public:
    BadMagicError() : CheckpointError("bad magic: not an EDF1 checkpoint") {}
};

class UnsupportedVersionError : public CheckpointError {
public:
    explicit UnsupportedVersionError(unsigned version)
        : CheckpointError("unsupported version " + std::to_string(version)), version_(version) {}
    unsigned version() const { return version_; }

private:
    unsigned version_;
};

class TruncatedFileError : public CheckpointError {
public:
    TruncatedFileError() : CheckpointError("truncated file: checkpoint ended early") {}
    explicit TruncatedFileError(const std::string& detail) : CheckpointError("truncated file: " + detail) {}
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(std::size_t step, std::size_t batch)
        : Error("non-finite loss at step " + std::to_string(step) + ", batch " + std::to_string(batch)),
          step_(step), batch_(batch) {}
    std::size_t step() const { return step_; }
    std::size_t batch() const { return batch_; }

private:
    std::size_t step_;
    std::size_t batch_;
};

}  // namespace edformer
