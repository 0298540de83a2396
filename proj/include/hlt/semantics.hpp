#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hlt/state.hpp"
#include "hlt/syntax.hpp"

namespace hlt {

enum class StuckKind {
    MissingCallPerm,
    UnfulfilledObligations,
    ExpectWithoutPermission,
    ExpectOnSetSignal,
    LevelNotBelowObligations,
    TargetThreadFinished,
    ObligationNotHeld,
    SignalUnallocated,
    DegreeNotLower,
    UnsafeValueCompare,
    HeapFault,
    AuxHeapFault,
    NoRuleApplies,
    AtomicBudgetExceeded,
    ForkInAtomic,
    UnsupportedProphecy,
};

const char* stuck_kind_name(StuckKind k);

struct StuckReason {
    StuckKind kind = StuckKind::NoRuleApplies;
    Tid tid = 0;          // thread whose premise failed
    std::string detail;   // first failing premise, human form
    std::string to_string() const;
};

// Execution modes. One engine, several premise sets: plain disables the
// fuel/ghost machinery (the erased dialect), unsound_expect drops the
// expect-permission premise of ExpectS, strict_beta disables the implicit
// lowering that lets BetaS consume a strictly positive permission when no
// minimal-degree permission is present.
struct Mode {
    bool plain = false;
    bool unsound_expect = false;
    bool strict_beta = false;
    std::uint64_t atomic_budget = 1'000'000;

    static Mode sound() { return Mode{}; }
    static Mode unsound() { return Mode{false, true, false, 1'000'000}; }
    static Mode plain_mode() { return Mode{true, false, false, 1'000'000}; }
    static Mode strict() { return Mode{false, false, true, 1'000'000}; }
};

// Events observable inside one machine step (ghost ops and heap ops fire
// inside big-steps too, so rule names alone do not expose them).
struct ExpectEvent {
    Tid target = 0;
    Sig sig = 0;
    Degree deg;
};

struct HeapEvent {
    bool write = false;
    Tid tid = 0;
    Loc loc = 0;
    std::optional<std::int64_t> old_int;
    std::optional<std::int64_t> new_int;
};

struct StepEvents {
    std::vector<ExpectEvent> expects;
    std::vector<HeapEvent> heap;
    std::vector<Sig> signals_set;
    void clear() {
        expects.clear();
        heap.clear();
        signals_set.clear();
    }
};

// Step-rule context: mode plus the program's degree/level domains. `events`,
// when set, collects per-step observations for traces and diagnostics.
struct Engine {
    Mode mode;
    DomainDescriptor degrees = DomainDescriptor::atoms(1);
    DomainDescriptor levels = DomainDescriptor::atoms(1);
    StepEvents* events = nullptr;

    Engine() = default;
    Engine(const Prog& p, Mode m) : mode(m), degrees(p.degrees), levels(p.levels) {}
};

// ---------------------------------------------------------------------------
// Evaluation-context decomposition

struct Decomp {
    ExprPtr redex;
    std::function<ExprPtr(ExprPtr)> plug;
    bool in_fork_aux = false;  // hole sits in fork's auxiliary transfer slot
};

// nullopt means the expression is already a value.
std::optional<Decomp> decompose(const ExprPtr& e);

// ---------------------------------------------------------------------------
// Head steps

struct StepOutcome {
    enum class Kind { Reduced, Aborted, Stuck } kind = Kind::Stuck;
    ExprPtr expr;                                   // Reduced
    std::vector<std::pair<Tid, ExprPtr>> forks;     // Reduced, fork rule only
    StuckReason stuck;
    std::string rule;

    static StepOutcome reduced(ExprPtr e, std::string rule_name) {
        StepOutcome o;
        o.kind = Kind::Reduced;
        o.expr = std::move(e);
        o.rule = std::move(rule_name);
        return o;
    }
    static StepOutcome aborted() {
        StepOutcome o;
        o.kind = Kind::Aborted;
        o.rule = "AbortS";
        return o;
    }
    static StepOutcome stuck_with(StuckReason r) {
        StepOutcome o;
        o.kind = Kind::Stuck;
        o.stuck = std::move(r);
        return o;
    }
};

// Applies the unique head rule for the redex, mutating sigma. Never throws;
// every failed premise yields Stuck (state may be partially modified then --
// machine_step restores it). `budget` counts big-step sub-evaluations.
StepOutcome head_step(const Engine& eng, MachineState& sigma, Tid tid, const ExprPtr& redex,
                      std::uint64_t& budget);

// ---------------------------------------------------------------------------
// Big-step evaluation (atomic blocks and auxiliary code)

struct BigstepResult {
    enum class Kind { Value, Stuck, BudgetExceeded, Aborted } kind = Kind::Stuck;
    Val value;
    StuckReason stuck;
};

BigstepResult bigstep(const Engine& eng, MachineState& sigma, Tid tid, const ExprPtr& e,
                      std::uint64_t& budget);

// ---------------------------------------------------------------------------
// Machine steps

struct MachineOutcome {
    enum class Kind { Progressed, Stuck, SelectedThreadComplete, Aborted } kind = Kind::Stuck;
    std::string rule;
    std::string redex_summary;
    bool aux_position = false;            // step happened in an aux context slot
    std::vector<Tid> forked;
    StuckReason stuck;
    StepEvents events;                    // observations inside this step
};

// Applies one head step of thread `tid` under its evaluation context. On fork
// the child is appended to the pool; on Abort every thread's expression
// becomes unit; on Stuck the config is left exactly as given.
MachineOutcome machine_step(Engine& eng, Config& c, Tid tid);

// Value comparison judgment.
enum class ValEq { True, False, Unsafe };
ValEq value_eq(const Val& a, const Val& b);

}  // namespace hlt
