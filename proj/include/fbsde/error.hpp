#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fbsde {

/// Bad caller input: shapes, ranges, divisibility.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Normal equations could not be factored. Carries the pivot index that failed.
class RankDeficient : public std::runtime_error {
public:
    RankDeficient(const std::string& what, std::size_t pivot)
        : std::runtime_error(what), pivot_(pivot) {}
    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// A non-finite value appeared during simulation or fitting.
///
/// `iteration`, `step` and `path` are -1 when not applicable.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, long iteration, long step, long path)
        : std::runtime_error(what), iteration_(iteration), step_(step), path_(path) {}

    long iteration() const noexcept { return iteration_; }
    long step() const noexcept { return step_; }
    long path() const noexcept { return path_; }

private:
    long iteration_;
    long step_;
    long path_;
};

/// The problem lacks something an operation requires (e.g. an analytic solution).
class UnsupportedProblem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fbsde
