#pragma once

#include <stdexcept>
#include <string>

namespace badapprox {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition (empty vector, dimension mismatch, bad parameter).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A certified comparison could not be decided at the current precision.
class Undecided : public Error {
public:
    using Error::Error;
};

/// An enclosure is too wide to resolve the nearest integer.
class TooWide : public Undecided {
public:
    using Undecided::Undecided;
};

/// Malformed input file or specification string.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A certified check failed: a certificate does not hold.
class CertificateFailure : public Error {
public:
    using Error::Error;
};

} // namespace badapprox
