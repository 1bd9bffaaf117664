#pragma once

#include <stdexcept>
#include <string>

namespace bls {

// Two families: numerical failures (a factorization or solve could not
// proceed) and input failures (malformed data, config or files). The CLI maps
// them onto distinct exit codes.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BLS_DEFINE_ERROR(Name, Base)        \
  class Name : public Base {                \
   public:                                  \
    explicit Name(const std::string& what)  \
        : Base(#Name ": " + what) {}        \
  };

BLS_DEFINE_ERROR(NotPositiveDefinite, NumericalError)
BLS_DEFINE_ERROR(FactorizationFailure, NumericalError)
BLS_DEFINE_ERROR(SingularFactor, NumericalError)
BLS_DEFINE_ERROR(SingularInnerMatrix, NumericalError)
BLS_DEFINE_ERROR(SingularG, NumericalError)

BLS_DEFINE_ERROR(NotSymmetric, InputError)
BLS_DEFINE_ERROR(MalformedInput, InputError)
BLS_DEFINE_ERROR(DimensionMismatch, InputError)
BLS_DEFINE_ERROR(InvalidConfig, InputError)
BLS_DEFINE_ERROR(IndexOutOfRange, InputError)
BLS_DEFINE_ERROR(ParseError, InputError)
BLS_DEFINE_ERROR(LabelMismatch, InputError)
BLS_DEFINE_ERROR(ScheduleInvalid, InputError)
BLS_DEFINE_ERROR(VersionMismatch, InputError)
BLS_DEFINE_ERROR(CorruptFile, InputError)

#undef BLS_DEFINE_ERROR

}  // namespace bls
