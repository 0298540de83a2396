#pragma once

#include <string>

#include "hlt/syntax.hpp"

namespace hlt {

// Prints an expression in the surface syntax. Output of a parsed program
// re-parses to a structurally identical AST. `env` supplies degree/level
// alias names and the field table; `aux_context` selects the auxiliary
// reading (aux lambdas and aux application).
std::string pretty_print(const ExprPtr& e, const Prog& env, bool aux_context = false);
std::string pretty_print(const ExprPtr& e);

// Full program: header clauses followed by `main = ...`.
std::string pretty_print(const Prog& p);

std::string to_string(const Val& v);

}  // namespace hlt
