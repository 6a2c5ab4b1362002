#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace cgdft {

using Scalar = double;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr Scalar kInfinity = std::numeric_limits<Scalar>::infinity();

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad level, bad norm exponent, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A coarse density with a non-positive cell average was handed to an
/// operation that needs a strictly positive one.
class NotInteriorDensity : public Error {
public:
    using Error::Error;
};

/// The many-body basis would exceed the dense/iterative size guard.
class DimensionOverflow : public Error {
public:
    using Error::Error;
};

/// An iterative eigensolver or linear solver failed to converge.
class NonConvergence : public Error {
public:
    using Error::Error;
};

/// The ground space is more degenerate than the ensemble mixing solve allows.
class DegeneracyOverflow : public Error {
public:
    using Error::Error;
};

/// Extended-real arithmetic produced an indeterminate form (inf - inf).
class IndeterminateForm : public Error {
public:
    using Error::Error;
};

/// a + b in the extended reals; +inf + -inf is an error, not NaN.
inline Scalar extended_add(Scalar a, Scalar b)
{
    if ((a == kInfinity && b == -kInfinity) || (a == -kInfinity && b == kInfinity))
        throw IndeterminateForm("extended_add: inf + (-inf)");
    return a + b;
}

/// a - b in the extended reals.
inline Scalar extended_sub(Scalar a, Scalar b) { return extended_add(a, -b); }

}  // namespace cgdft
