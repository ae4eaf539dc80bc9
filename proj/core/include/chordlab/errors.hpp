#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chordlab {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Chord label or token stream could not be parsed; offset is a byte offset
// into the offending string.
struct SyntaxError : Error {
    std::size_t offset;
    SyntaxError(const std::string& msg, std::size_t off)
        : Error(msg + " (offset " + std::to_string(off) + ")"), offset(off) {}
};

// Corpus file violates the canonical text format; line is 1-based.
struct FormatError : Error {
    int line;
    FormatError(const std::string& msg, int line_no)
        : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

struct DoubleBackward : Error {
    using Error::Error;
};

struct EmptyCorpus : Error {
    using Error::Error;
};

struct InvalidK : Error {
    using Error::Error;
};

struct UnknownFeature : Error {
    using Error::Error;
};

struct VersionMismatch : Error {
    using Error::Error;
};

struct CorruptCheckpoint : Error {
    using Error::Error;
};

// Training loss became NaN/Inf; the trial is recorded as failed.
struct DivergedLoss : Error {
    using Error::Error;
};

struct StoreCorrupt : Error {
    int line;
    StoreCorrupt(const std::string& msg, int line_no)
        : Error("store line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct NoCorrectPredictions : Error {
    using Error::Error;
};

struct NotMultiFeature : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace chordlab
