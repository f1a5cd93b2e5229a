#pragma once

#include <stdexcept>

namespace wishart {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define WISHART_DEFINE_ERROR(Name) \
  struct Name : Error {            \
    using Error::Error;            \
  }

WISHART_DEFINE_ERROR(DimensionMismatch);
WISHART_DEFINE_ERROR(NotPositiveDefinite);
WISHART_DEFINE_ERROR(NotPsd);
WISHART_DEFINE_ERROR(SingularOperator);
WISHART_DEFINE_ERROR(SingularLyapunov);
WISHART_DEFINE_ERROR(DomainViolation);
WISHART_DEFINE_ERROR(NumericalBreakdown);
WISHART_DEFINE_ERROR(BlowUp);
WISHART_DEFINE_ERROR(NotTransformable);
WISHART_DEFINE_ERROR(NotErgodic);
WISHART_DEFINE_ERROR(RankConditionViolated);
WISHART_DEFINE_ERROR(InvalidDegree);
WISHART_DEFINE_ERROR(DegenerateDiagonal);
WISHART_DEFINE_ERROR(DegenerateDegree);
WISHART_DEFINE_ERROR(NonPositiveState);
WISHART_DEFINE_ERROR(MissingStats);
WISHART_DEFINE_ERROR(SingularSystem);
WISHART_DEFINE_ERROR(NotInvertible);
WISHART_DEFINE_ERROR(CaseParameterMismatch);
WISHART_DEFINE_ERROR(ConfigError);

#undef WISHART_DEFINE_ERROR

}  // namespace wishart
