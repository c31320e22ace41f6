#pragma once

#include <stdexcept>
#include <string>

namespace trajpred {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define TRAJPRED_ERROR(Name)                                         \
    struct Name : Error {                                            \
        explicit Name(const std::string& msg) : Error(msg) {}        \
    }

// trajectory-core
TRAJPRED_ERROR(NonMonotonicTimestamps);
TRAJPRED_ERROR(MixedObjectIds);
TRAJPRED_ERROR(Empty);
TRAJPRED_ERROR(EmptyInput);

// preprocess
TRAJPRED_ERROR(KTooLarge);
TRAJPRED_ERROR(AllPointsNoise);
TRAJPRED_ERROR(NoSegments);

// vbgmm / predict
TRAJPRED_ERROR(NumericalFailure);
TRAJPRED_ERROR(DofNotPositive);
TRAJPRED_ERROR(InsufficientHistory);
TRAJPRED_ERROR(AllFitsFailed);

// eval
TRAJPRED_ERROR(LengthMismatch);
TRAJPRED_ERROR(NoTestCases);

// io / cli
TRAJPRED_ERROR(IoError);
TRAJPRED_ERROR(ParseError);

#undef TRAJPRED_ERROR

}  // namespace trajpred
