#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sparse4d {

/// Base class of every error raised by the library. Each failure mode named
/// in the module contracts has its own subclass so callers can catch it
/// selectively.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SPARSE4D_DEFINE_ERROR(Name)  \
  class Name : public Error {        \
   public:                           \
    using Error::Error;              \
  }

// Ingestion
SPARSE4D_DEFINE_ERROR(MalformedFile);
SPARSE4D_DEFINE_ERROR(EmptyMesh);
SPARSE4D_DEFINE_ERROR(UnsupportedFormat);
SPARSE4D_DEFINE_ERROR(IoError);

// Rendering and augmentation
SPARSE4D_DEFINE_ERROR(MissingColors);
SPARSE4D_DEFINE_ERROR(DegenerateExtent);
SPARSE4D_DEFINE_ERROR(DimensionMismatch);
SPARSE4D_DEFINE_ERROR(TrainTooSmall);
SPARSE4D_DEFINE_ERROR(NegativeWeight);

// Landmarks
SPARSE4D_DEFINE_ERROR(DegenerateConfiguration);

// Sparse coding
SPARSE4D_DEFINE_ERROR(RankDeficientSupport);
SPARSE4D_DEFINE_ERROR(EnumerationTooLarge);
SPARSE4D_DEFINE_ERROR(BadIndexSet);
SPARSE4D_DEFINE_ERROR(EmptyCalibrationSet);

// Features and models
SPARSE4D_DEFINE_ERROR(ImageTooSmall);
SPARSE4D_DEFINE_ERROR(ShapeMismatch);
SPARSE4D_DEFINE_ERROR(DegenerateDataset);

// Evaluation
SPARSE4D_DEFINE_ERROR(AllZeroWeights);
SPARSE4D_DEFINE_ERROR(TooFewSubjects);

// Configuration
SPARSE4D_DEFINE_ERROR(ConfigError);
SPARSE4D_DEFINE_ERROR(InvalidArgument);

#undef SPARSE4D_DEFINE_ERROR

/// Wraps a failure with the pipeline stage it came from.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage " + stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace sparse4d
