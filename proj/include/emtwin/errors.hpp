#pragma once

#include <stdexcept>
#include <string>

namespace emtwin {

enum class Errc {
    InvalidArgument,
    Parse,
    Io,
    UnitMismatch,
    DivergentInductance,
    NoConvergence,
    InstabilityThreshold,
    NonConvergedSum,
    FitDiverged,
    InsufficientSpan,
    PeakTooNarrow,
    MissingCalTone,
    BelowSplittingThreshold,
    NonFiniteResidual,
    SingularNormalEquations,
};

const char* to_string(Errc code);

/// Process exit code for a failure of this kind: 2 input, 3 fit, 4 model domain.
int exit_code(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace emtwin
