#pragma once

#include <stdexcept>
#include <string>

namespace advs {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not chain or agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A value outside its admissible domain (label, pixel, epsilon, ...).
class RangeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

enum class FormatFault { bad_magic, truncated, count_mismatch, bad_header, bad_version, bad_payload };

/// Malformed file content. The fault tag distinguishes the failure kinds.
class FormatError : public Error {
public:
    FormatError(FormatFault fault, const std::string& what) : Error(what), fault_(fault) {}
    FormatFault fault() const noexcept { return fault_; }

private:
    FormatFault fault_;
};

/// Failure inside one experiment phase; what() starts with "[phase] ".
class PhaseError : public Error {
public:
    PhaseError(std::string phase, const std::string& what)
        : Error("[" + phase + "] " + what), phase_(std::move(phase)) {}
    const std::string& phase() const noexcept { return phase_; }

private:
    std::string phase_;
};

}  // namespace advs
