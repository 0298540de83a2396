#pragma once

#include <stdexcept>
#include <string>

#include "hlt/scheduler.hpp"

namespace hlt {

class EraseError : public std::runtime_error {
public:
    explicit EraseError(const std::string& w) : std::runtime_error(w) {}
};

// Expression erasure: ghost lets dropped, aux binders and arguments replaced
// by unit placeholders, atomic blocks erased recursively and unwrapped when
// the erased body is a single real atomic primitive, fork transfer lists
// emptied, everything else structural.
ExprPtr erase_expr(const ExprPtr& e);

// Keeps the real heap only.
MachineState erase_state(const MachineState& s);

// Pointwise expression erasure plus state erasure.
// Throws EraseError when a pool expression fails the discipline check.
Config erase_config(const Config& c);

// Erased program: plain dialect, no degrees/levels/initial permissions.
// Throws EraseError (with the clause list) when p fails check_aux_discipline.
Prog erase_prog(const Prog& p);

// ---------------------------------------------------------------------------
// Empirical erasure-theorem harness: filters a sound-mode execution to its
// real steps and replays them against the erased program under the plain
// dialect, comparing erased configurations step by step.

struct SimulationReport {
    bool ok = false;
    std::uint64_t real_steps = 0;
    std::uint64_t aux_steps = 0;
    std::string failure;  // first mismatch, when any
};

SimulationReport check_erasure_simulation(const Prog& p, const Execution& ex);

}  // namespace hlt
