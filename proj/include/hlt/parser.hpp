#pragma once

#include <stdexcept>
#include <string>

#include "hlt/syntax.hpp"

namespace hlt {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line, int col)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line(line),
          col(col) {}
    int line;
    int col;
};

// Parses a .hlt source: header clauses (degrees, levels, name aliases,
// init_callperms, fields) followed by `main = <expr>`. Sugar (fun, while,
// CAS, seq, &&, !=, not, field access) is expanded here and never appears in
// the AST. Throws ParseError.
Prog parse(const std::string& text);

// Parses a bare expression against an existing program's declarations
// (aliases, fields). Used by tests.
ExprPtr parse_expr(const std::string& text, const Prog& env, bool aux_context = false);

}  // namespace hlt
