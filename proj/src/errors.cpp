#include "smilansky/errors.hpp"

namespace smilansky {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::ThresholdEnergy: return "ThresholdEnergy";
        case ErrorKind::ExceptionalEnergy: return "ExceptionalEnergy";
        case ErrorKind::PrecisionLoss: return "PrecisionLoss";
        case ErrorKind::FitDiverged: return "FitDiverged";
        case ErrorKind::PreconditionViolation: return "PreconditionViolation";
        case ErrorKind::QuadratureUnderResolved: return "QuadratureUnderResolved";
        case ErrorKind::SupportViolation: return "SupportViolation";
        case ErrorKind::TailNotConverged: return "TailNotConverged";
        case ErrorKind::PhaseUnderResolved: return "PhaseUnderResolved";
        case ErrorKind::RootNotConverged: return "RootNotConverged";
        case ErrorKind::SeriesNotConverged: return "SeriesNotConverged";
        case ErrorKind::NotBracketed: return "NotBracketed";
        case ErrorKind::GridMisaligned: return "GridMisaligned";
        case ErrorKind::SolveFailed: return "SolveFailed";
        case ErrorKind::TruncationLeak: return "TruncationLeak";
        case ErrorKind::QGridTooCoarse: return "QGridTooCoarse";
        case ErrorKind::RecurrenceOverflow: return "RecurrenceOverflow";
        case ErrorKind::BoundaryLeak: return "BoundaryLeak";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
        case ErrorKind::ComputeFailed: return "ComputeFailed";
    }
    return "Unknown";
}

}  // namespace smilansky
