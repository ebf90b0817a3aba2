#pragma once

#include <stdexcept>
#include <string>

namespace vmtu {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// Raised when an evolution leaves the bounded regime (|u| > 1e6 or a non-finite value).
class Diverged : public Error {
public:
    Diverged(const std::string& what, long step) : Error(what), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

/// A region-average denominator vanished (the contour left the image).
class EmptyRegion : public Error {
public:
    using Error::Error;
};

class BadMultipliers : public Error {
public:
    using Error::Error;
};

class InputTooSmall : public Error {
public:
    using Error::Error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace vmtu
