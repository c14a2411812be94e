#pragma once

#include <stdexcept>
#include <string>

namespace thermoquant {

/// Base class for every error raised by the library. `kind()` is the stable
/// identifier used in CLI diagnostics and reports.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define THERMOQUANT_ERROR(Name)                                                \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string& what) : Error(#Name, what) {}             \
  }

THERMOQUANT_ERROR(UnboundSymbol);
THERMOQUANT_ERROR(DomainError);
THERMOQUANT_ERROR(ExpressionParseError);
THERMOQUANT_ERROR(NonPolynomial);
THERMOQUANT_ERROR(NotSolvableOnShell);
THERMOQUANT_ERROR(SingularK);
THERMOQUANT_ERROR(UnknownModel);
THERMOQUANT_ERROR(SchemaError);
THERMOQUANT_ERROR(NonPolynomialMomentum);
THERMOQUANT_ERROR(GridTooCoarse);
THERMOQUANT_ERROR(GridMismatch);
THERMOQUANT_ERROR(NotNormalForm);
THERMOQUANT_ERROR(OrderingUnsupported);
THERMOQUANT_ERROR(ZeroNorm);
THERMOQUANT_ERROR(ComplexExpectation);
THERMOQUANT_ERROR(FootPointOutOfDomain);
THERMOQUANT_ERROR(NonCommutingMap);
THERMOQUANT_ERROR(MissingField);
THERMOQUANT_ERROR(UnsupportedGenerator);

#undef THERMOQUANT_ERROR

}  // namespace thermoquant
