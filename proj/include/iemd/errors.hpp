#pragma once

#include <stdexcept>
#include <string>

namespace iemd {

/** Base class of every error raised by the library. */
class Error : public std::runtime_error
{
    public:
        explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define IEMD_DEFINE_ERROR(Name)                                              \
    class Name : public Error                                                \
    {                                                                        \
        public:                                                              \
            explicit Name(const std::string& what = #Name) : Error(what) {}  \
    }

// Transportation problem / EMD solver
IEMD_DEFINE_ERROR(InvalidProblem);
IEMD_DEFINE_ERROR(InfeasibleBalance);
IEMD_DEFINE_ERROR(CycleLimitExceeded);
IEMD_DEFINE_ERROR(SingularBasis);
IEMD_DEFINE_ERROR(DimensionMismatch);

// Appearance model
IEMD_DEFINE_ERROR(EmptyTemplateSet);
IEMD_DEFINE_ERROR(PatchLargerThanWindow);
IEMD_DEFINE_ERROR(NonConvergence);
IEMD_DEFINE_ERROR(NormalizationDegenerate);
IEMD_DEFINE_ERROR(FeatureDimMismatch);

// Tracker
IEMD_DEFINE_ERROR(InvalidConfig);
IEMD_DEFINE_ERROR(OutOfFrame);

// Gyro
IEMD_DEFINE_ERROR(EmptyLog);
IEMD_DEFINE_ERROR(NonUnitQuaternion);
IEMD_DEFINE_ERROR(SingularIntrinsics);
IEMD_DEFINE_ERROR(PointAtInfinity);

// Harness
IEMD_DEFINE_ERROR(MissingGroundTruth);
IEMD_DEFINE_ERROR(UnreadableImage);
IEMD_DEFINE_ERROR(DegenerateBox);
IEMD_DEFINE_ERROR(SpecOutOfBounds);
IEMD_DEFINE_ERROR(ParseError);

#undef IEMD_DEFINE_ERROR

}   // namespace iemd
