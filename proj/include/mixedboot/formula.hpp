#pragma once

#include <string>

#include "mixedboot/core.hpp"

namespace mixedboot {

// Grammar:
//   formula  := name '~' item ('+' item)*
//   item     := term | '(' term ('+' term)* '|' name ')'
//   term     := '1' | '0' | factor (':' factor)*
//   factor   := name ('^' k)        k in 1..4
// Exactly one parenthesized group clause. Intercepts are on unless a literal
// 0 appears in the corresponding part. Term order follows the text.
ModelSpec parse_formula(const std::string& text);

}  // namespace mixedboot
