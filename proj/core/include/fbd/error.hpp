#pragma once

#include <stdexcept>
#include <string>

namespace fbd {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FBD_DEFINE_ERROR(Name)              \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

FBD_DEFINE_ERROR(DimensionMismatch);
FBD_DEFINE_ERROR(InvalidArgument);
FBD_DEFINE_ERROR(FixedPointViolated);
FBD_DEFINE_ERROR(SingularDifferential);
FBD_DEFINE_ERROR(InvalidBracket);
FBD_DEFINE_ERROR(IndexOutOfRange);
FBD_DEFINE_ERROR(CertificateViolated);
FBD_DEFINE_ERROR(NotInBasin);
FBD_DEFINE_ERROR(NoConvergenceWithinBudget);
FBD_DEFINE_ERROR(SupplierBoundViolated);
FBD_DEFINE_ERROR(NoPathAtResolution);
FBD_DEFINE_ERROR(QTooCloseToK);
FBD_DEFINE_ERROR(CertificateSearchExhausted);
FBD_DEFINE_ERROR(MoverFailed);
FBD_DEFINE_ERROR(GeneralPositionViolated);
FBD_DEFINE_ERROR(ConfigError);
FBD_DEFINE_ERROR(FormatError);

#undef FBD_DEFINE_ERROR

/// A builder stage could not be committed; `stage` is the stage being built.
class StageFailed : public Error {
 public:
  StageFailed(int stage, const std::string& cause)
      : Error("stage " + std::to_string(stage) + " failed: " + cause), stage_(stage), cause_(cause) {}
  int stage() const { return stage_; }
  const std::string& cause() const { return cause_; }

 private:
  int stage_;
  std::string cause_;
};

}  // namespace fbd
