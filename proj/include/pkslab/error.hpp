#pragma once

#include <stdexcept>
#include <string>

namespace pkslab {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used in reports.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define PKSLAB_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

PKSLAB_DEFINE_ERROR(InvalidArgument);
PKSLAB_DEFINE_ERROR(SupportOverflow);
PKSLAB_DEFINE_ERROR(OutOfRange);
PKSLAB_DEFINE_ERROR(NonConvergence);
PKSLAB_DEFINE_ERROR(TailTruncation);
PKSLAB_DEFINE_ERROR(CriticalAtom);
PKSLAB_DEFINE_ERROR(NegativeDensity);
PKSLAB_DEFINE_ERROR(MeanNotZero);
PKSLAB_DEFINE_ERROR(DivisionUnderflow);
PKSLAB_DEFINE_ERROR(EigenFailure);
PKSLAB_DEFINE_ERROR(IntegratorFailure);
PKSLAB_DEFINE_ERROR(NanDetected);
PKSLAB_DEFINE_ERROR(IoError);
PKSLAB_DEFINE_ERROR(ConfinementFailure);

#undef PKSLAB_DEFINE_ERROR

}  // namespace pkslab
