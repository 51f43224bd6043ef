#pragma once

#include <stdexcept>
#include <string>

namespace pflab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Grids or array shapes that do not line up.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// Argument outside the admissible domain of a function (e.g. |s| >= 1 in F').
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative linear solver ran out of iterations.
class SolverNotConverged : public Error {
public:
    using Error::Error;
};

/// Damped Newton iteration failed to reach its tolerance.
class NewtonDivergence : public Error {
public:
    using Error::Error;
};

/// A converged time step touched the guard band around the pure phases.
class BoundsViolation : public Error {
public:
    using Error::Error;
};

/// Adaptive time stepping hit dt_min and the step still fails.
class StepFloor : public Error {
public:
    using Error::Error;
};

/// Converged equilibrium with non-positive separation margin.
class SeparationFailure : public Error {
public:
    using Error::Error;
};

/// Analysis-level inequality that must hold did not.
class BoundViolation : public Error {
public:
    using Error::Error;
};

class InsufficientSnapshots : public Error {
public:
    using Error::Error;
};

class WindowOutOfRange : public Error {
public:
    using Error::Error;
};

/// Hypothesis y0 <= threshold of the geometric-convergence lemma fails.
class ConditionNotMet : public Error {
public:
    using Error::Error;
};

class DegenerateWindow : public Error {
public:
    using Error::Error;
};

/// Malformed configuration text; carries line/key context in the message.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed configuration that violates an invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace pflab
