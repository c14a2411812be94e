#pragma once

#include <string_view>

#include "thermoquant/symcore/expression.hpp"

namespace thermoquant::symcore {

/// Parses infix text: `+ - * / ^`, `exp(...)`, integer and decimal literals,
/// identifiers. Exponents must reduce to exact rationals.
/// Throws ExpressionParseError.
Expr parse(std::string_view text);

}  // namespace thermoquant::symcore
