#pragma once

#include <stdexcept>
#include <string>

namespace riccati {

// Base of every error thrown by the library. Each condition that a caller may
// want to react to separately gets its own type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RICCATI_DEFINE_ERROR(Name)      \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

RICCATI_DEFINE_ERROR(PreconditionViolation);
RICCATI_DEFINE_ERROR(DimensionMismatch);
RICCATI_DEFINE_ERROR(NotSquare);
RICCATI_DEFINE_ERROR(SingularOperator);
RICCATI_DEFINE_ERROR(SingularPencil);
RICCATI_DEFINE_ERROR(ShiftFailure);
RICCATI_DEFINE_ERROR(Stagnation);
RICCATI_DEFINE_ERROR(RSolveFailure);
RICCATI_DEFINE_ERROR(StabilizationFailure);
RICCATI_DEFINE_ERROR(MaxStepsExceeded);
RICCATI_DEFINE_ERROR(InnerSolveFailure);
RICCATI_DEFINE_ERROR(InexactBreakdown);
RICCATI_DEFINE_ERROR(DegeneratePolynomial);
RICCATI_DEFINE_ERROR(LineSearchFailure);
RICCATI_DEFINE_ERROR(DefinitenessViolation);
RICCATI_DEFINE_ERROR(NoStabilizingSolution);
RICCATI_DEFINE_ERROR(MatrixMarketError);
RICCATI_DEFINE_ERROR(ConfigError);

#undef RICCATI_DEFINE_ERROR

}  // namespace riccati
