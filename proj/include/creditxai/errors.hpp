#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace creditxai {

// Base for every error raised by the library. Each failure mode named in the
// module contracts has its own subclass so callers can catch selectively.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CREDITXAI_ERROR(Name)          \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

CREDITXAI_ERROR(InvalidArgument);
CREDITXAI_ERROR(PreconditionViolation);
CREDITXAI_ERROR(IoFailure);

CREDITXAI_ERROR(NoItemsFound);
CREDITXAI_ERROR(AllItemsMissing);

CREDITXAI_ERROR(ProviderUnavailable);
CREDITXAI_ERROR(DimensionMismatch);

CREDITXAI_ERROR(ZeroVector);
CREDITXAI_ERROR(NoCommonItems);

CREDITXAI_ERROR(UnknownSector);
CREDITXAI_ERROR(EmptyReport);

CREDITXAI_ERROR(MalformedVerdict);
CREDITXAI_ERROR(BackendUnavailable);

CREDITXAI_ERROR(MissingSignal);

CREDITXAI_ERROR(DegenerateSplit);
CREDITXAI_ERROR(MissingPrediction);

#undef CREDITXAI_ERROR

class CorruptRecord : public Error {
 public:
  CorruptRecord(std::size_t line, const std::string& what)
      : Error("corrupt record at line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace creditxai
