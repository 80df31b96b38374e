#pragma once

#include <stdexcept>
#include <string>

namespace qtt {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Einsum operands whose layouts cannot be contracted core by core.
class ConformanceError : public ShapeError {
public:
    using ShapeError::ShapeError;
};

class NumericError : public Error {
public:
    using Error::Error;
};

/// Dense expansion refused because it exceeds the configured size guard.
class RefusalError : public Error {
public:
    using Error::Error;
};

class InvalidGuess : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// Train file errors. Open and read failures use FileError itself.
class FileError : public Error {
public:
    using Error::Error;
};

/// Bad magic, malformed metadata, or payload inconsistent with it.
class CorruptFileError : public FileError {
public:
    using FileError::FileError;
};

class TruncatedFileError : public FileError {
public:
    using FileError::FileError;
};

class VersionError : public FileError {
public:
    using FileError::FileError;
};

} // namespace qtt
