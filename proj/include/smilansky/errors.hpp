#pragma once

#include <stdexcept>
#include <string>

namespace smilansky {

enum class ErrorKind {
    ThresholdEnergy,
    ExceptionalEnergy,
    PrecisionLoss,
    FitDiverged,
    PreconditionViolation,
    QuadratureUnderResolved,
    SupportViolation,
    TailNotConverged,
    PhaseUnderResolved,
    RootNotConverged,
    SeriesNotConverged,
    NotBracketed,
    GridMisaligned,
    SolveFailed,
    TruncationLeak,
    QGridTooCoarse,
    RecurrenceOverflow,
    BoundaryLeak,
    ConfigInvalid,
    ComputeFailed,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace smilansky
