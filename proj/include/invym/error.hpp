#pragma once

#include <stdexcept>
#include <string>

namespace invym {

// Base of every error raised by the library. `kind()` is the stable name
// surfaced by the command-line runner (e.g. "SingularError").
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define INVYM_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

INVYM_DEFINE_ERROR(InvalidArgument);
INVYM_DEFINE_ERROR(SingularError);
INVYM_DEFINE_ERROR(DomainError);
INVYM_DEFINE_ERROR(SingularAtom);
INVYM_DEFINE_ERROR(InvalidMeasure);
INVYM_DEFINE_ERROR(UnknownEnergy);
INVYM_DEFINE_ERROR(NotRankOne);
INVYM_DEFINE_ERROR(BudgetExceeded);
INVYM_DEFINE_ERROR(InfeasibleLayer);
INVYM_DEFINE_ERROR(InfeasibleBarycenter);
INVYM_DEFINE_ERROR(NoAdmissibleSplit);
INVYM_DEFINE_ERROR(NoFeasibleStart);
INVYM_DEFINE_ERROR(Infeasible);
INVYM_DEFINE_ERROR(Stalled);
INVYM_DEFINE_ERROR(HypothesisViolated);
INVYM_DEFINE_ERROR(ConfigError);

#undef INVYM_DEFINE_ERROR

}  // namespace invym
