#pragma once

#include <stdexcept>
#include <string>

namespace densecode {

/// Raised for violated preconditions: bad shapes, out-of-domain parameters,
/// malformed spectra and the like.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A bisection path whose endpoints share the same verdict.
class NoTransitionError : public Error {
public:
    using Error::Error;
};

/// An analytic construction refused because its existence certificate fails.
class CertificateError : public Error {
public:
    CertificateError(const std::string& what, double slack) : Error(what), slack_(slack) {}
    double slack() const noexcept { return slack_; }

private:
    double slack_;
};

}  // namespace densecode
