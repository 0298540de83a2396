#pragma once

#include <string>
#include <vector>

#include "hlt/syntax.hpp"

namespace hlt {

// The erasability discipline. A program that fails these checks may still be
// interpreted, but the eraser refuses it.
//
// Clause names:
//   anf                   operands of operations must be values or variables
//   aux-embedding         let-ghost is the only auxiliary construct in real code
//   function-shape        real functions carry aux params; aux functions have no self binder
//   aux-var-escape        aux-bound variables must not occur in real code
//   real-write-in-aux     no real-heap mutation inside auxiliary code
//   real-call-in-aux      no real-function application inside auxiliary code
//   atomic-shape          atomic blocks hold exactly one real impure primitive plus aux code
//   prophecy              NewProph / ResolveWith are not supported
struct DisciplineViolation {
    std::string clause;
    std::string message;
    SrcLoc loc;
};

struct DisciplineReport {
    std::vector<DisciplineViolation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

DisciplineReport check_aux_discipline(const Prog& p);
DisciplineReport check_aux_discipline(const ExprPtr& main);

}  // namespace hlt
