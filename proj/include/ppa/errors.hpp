#pragma once

#include <stdexcept>
#include <string>

namespace ppa {

/// Base class for every domain failure raised by the library. Contract
/// violations on arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PPA_DECLARE_ERROR(Name)       \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
    explicit Name() : Error(#Name) {} \
  }

// phase models
PPA_DECLARE_ERROR(DegenerateNormal);
PPA_DECLARE_ERROR(DegenerateRayNormal);
PPA_DECLARE_ERROR(RayBehindCamera);
PPA_DECLARE_ERROR(DegenerateAxis);

// normal estimation
PPA_DECLARE_ERROR(IllConditioned);
PPA_DECLARE_ERROR(EmptySystem);
PPA_DECLARE_ERROR(NoValidPixels);
PPA_DECLARE_ERROR(TooFewViews);

// contours
PPA_DECLARE_ERROR(SeedMasked);
PPA_DECLARE_ERROR(SeedOutOfBounds);
PPA_DECLARE_ERROR(RayParallelToPlane);
PPA_DECLARE_ERROR(EmptyContour);

// scenes and datasets
PPA_DECLARE_ERROR(PlaneBehindCamera);
PPA_DECLARE_ERROR(InfeasiblePoses);
PPA_DECLARE_ERROR(IoError);
PPA_DECLARE_ERROR(FormatError);
PPA_DECLARE_ERROR(MissingGroundTruth);
PPA_DECLARE_ERROR(SchemaMismatch);

#undef PPA_DECLARE_ERROR

}  // namespace ppa
