#include "emtwin/errors.hpp"

namespace emtwin {

const char* to_string(Errc code) {
    switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Parse: return "ParseError";
    case Errc::Io: return "IoError";
    case Errc::UnitMismatch: return "UnitMismatch";
    case Errc::DivergentInductance: return "DivergentInductance";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::InstabilityThreshold: return "InstabilityThreshold";
    case Errc::NonConvergedSum: return "NonConvergedSum";
    case Errc::FitDiverged: return "FitDiverged";
    case Errc::InsufficientSpan: return "InsufficientSpan";
    case Errc::PeakTooNarrow: return "PeakTooNarrow";
    case Errc::MissingCalTone: return "MissingCalTone";
    case Errc::BelowSplittingThreshold: return "BelowSplittingThreshold";
    case Errc::NonFiniteResidual: return "NonFiniteResidual";
    case Errc::SingularNormalEquations: return "SingularNormalEquations";
    }
    return "Unknown";
}

int exit_code(Errc code) {
    switch (code) {
    case Errc::InvalidArgument:
    case Errc::Parse:
    case Errc::Io:
    case Errc::UnitMismatch:
    case Errc::InsufficientSpan:
        return 2;
    case Errc::FitDiverged:
    case Errc::PeakTooNarrow:
    case Errc::MissingCalTone:
    case Errc::BelowSplittingThreshold:
    case Errc::NonFiniteResidual:
    case Errc::SingularNormalEquations:
        return 3;
    case Errc::DivergentInductance:
    case Errc::NoConvergence:
    case Errc::InstabilityThreshold:
    case Errc::NonConvergedSum:
        return 4;
    }
    return 1;
}

}  // namespace emtwin
