#pragma once

#include <stdexcept>
#include <string>

namespace pmsdr {

// Base class for every error thrown by the library. Callers that only want
// "did pmsdr fail" can catch this; stage-aware callers catch the subtypes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed numeric input: non-finite entries, non-stochastic matrices, ...
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Vector/matrix sizes do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Rank parameter outside the valid range for the given dimensions.
class RankError : public Error {
public:
    using Error::Error;
};

// Scalar argument outside a function's mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// Iterative solver failed to reach its tolerance; carries the last residual.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double residual)
        : Error(msg), last_residual(residual) {}
    double last_residual;
};

// Inconsistent user-facing configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A combinatorial constraint cannot be satisfied (e.g. strict permutation of
// two indices).
class ConstraintError : public Error {
public:
    using Error::Error;
};

// A metric or decomposition hit a degenerate denominator / empty set.
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Elimination schedule would leave fewer rows than the regression needs.
class ScheduleError : public Error {
public:
    using Error::Error;
};

// Unlabeled-sensing recovery ended with an unusable retained set.
class RecoveryError : public Error {
public:
    using Error::Error;
};

// Spectral clustering could not produce a usable assignment.
class ClusteringError : public Error {
public:
    using Error::Error;
};

// Not enough samples for the requested structure (e.g. fewer inliers than
// clusters).
class InsufficientData : public Error {
public:
    using Error::Error;
};

// A cluster is too small to estimate a rank-r basis from.
class DegenerateCluster : public Error {
public:
    using Error::Error;
};

// Gap-based splitting on a score vector with no gap at all.
class NoGapError : public Error {
public:
    using Error::Error;
};

// A pipeline stage failed; carries the stage name so callers can tell where
// the run aborted without parsing messages.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& msg)
        : Error("stage '" + stage + "': " + msg), stage_name(stage) {}
    std::string stage_name;
};

} // namespace pmsdr
