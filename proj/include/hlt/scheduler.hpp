#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hlt/semantics.hpp"

namespace hlt {

class SchedulerError : public std::runtime_error {
public:
    explicit SchedulerError(const std::string& w) : std::runtime_error(w) {}
};

struct SchedulePolicy {
    enum class Kind { RoundRobin, RandomFair, Scripted };
    Kind kind = Kind::RoundRobin;
    std::uint64_t seed = 0;
    std::vector<Tid> script;

    static SchedulePolicy round_robin() { return SchedulePolicy{}; }
    static SchedulePolicy random_fair(std::uint64_t seed) {
        SchedulePolicy p;
        p.kind = Kind::RandomFair;
        p.seed = seed;
        return p;
    }
    static SchedulePolicy scripted(std::vector<Tid> tids) {
        SchedulePolicy p;
        p.kind = Kind::Scripted;
        p.script = std::move(tids);
        return p;
    }
    std::string describe() const;
};

enum class RunStatus { AllFinished, Stuck, Aborted, StepCapExceeded };
const char* run_status_name(RunStatus s);

// Ghost-state deltas of one machine step, derived by diffing the state.
struct GhostDelta {
    std::vector<std::tuple<Tid, Degree, std::int64_t>> call_perms;        // +/- counts
    std::vector<std::tuple<Tid, Sig, Level, std::int64_t>> obligations;   // +/- counts
    std::vector<std::tuple<Tid, Sig, Degree, std::int64_t>> expect_perms; // + only in practice
    std::vector<std::pair<Sig, Level>> signals_created;
    std::vector<Sig> signals_set;
    std::vector<Tid> finished;
    bool empty() const {
        return call_perms.empty() && obligations.empty() && expect_perms.empty() &&
               signals_created.empty() && signals_set.empty() && finished.empty();
    }
};

struct TraceStep {
    std::uint64_t index = 0;
    Tid tid = 0;
    std::string rule;
    std::string redex;
    bool aux_position = false;
    GhostDelta delta;
    std::vector<Tid> forked;
    std::vector<ExpectEvent> expects;  // Expect firings inside this step
    std::vector<HeapEvent> heap;       // real-heap reads/writes inside this step
};

struct Execution {
    RunStatus status = RunStatus::StepCapExceeded;
    StuckReason stuck;  // when status == Stuck
    std::vector<TraceStep> steps;
    Config final;
    std::uint64_t final_hash = 0;

    std::shared_ptr<const Prog> prog;
    Mode mode;
    std::string policy_desc;
    std::uint64_t seed = 0;
    std::uint64_t program_hash = 0;

    // Schedule that reproduces this execution via a Scripted policy,
    // including the final stuck attempt when the run got stuck.
    std::vector<Tid> schedule() const;
};

struct RunOptions {
    std::uint64_t step_cap = 100000;
    Mode mode;
    bool validate_each_step = false;  // turned on by tests
};

Execution run(const Prog& p, const SchedulePolicy& policy, const RunOptions& opts);
Execution run(const Prog& p, const SchedulePolicy& policy, std::uint64_t step_cap, Mode mode);

// Deterministic re-execution of a recorded schedule. A scripted tid that is
// absent or already complete raises SchedulerError with the step index.
Execution replay(const Prog& p, const std::vector<Tid>& tids, Mode mode);

// ---------------------------------------------------------------------------
// Bounded exhaustive interleaving exploration

struct ExploreReport {
    // terminal status label -> count of terminal hits (label includes the
    // stuck kind, e.g. "Stuck(MissingCallPerm)")
    std::map<std::string, std::uint64_t> terminals;
    // one witness schedule per distinct terminal label
    std::map<std::string, std::vector<Tid>> witnesses;
    bool truncated = false;
    std::uint64_t visited_states = 0;

    bool any_stuck() const;
    std::string to_string() const;
};

ExploreReport explore(const Prog& p, std::uint64_t depth_cap, std::uint64_t visited_cap,
                      Mode mode);

// ---------------------------------------------------------------------------
// Path-fuel diagnostic (per-thread descent measure)

struct PathFuelReport {
    bool monotone = false;
    std::vector<DegreeMultiset> sequence;  // PF at each machine step index
    std::string violation;                 // first offending step, when any
};

// Requires ex.status == AllFinished and a thread that exists in the run.
// Throws SchedulerError for an unknown thread.
PathFuelReport path_fuel_check(const Execution& ex, Tid thread_path);

// ---------------------------------------------------------------------------
// Trace files: one JSON object per line, header first; byte-stable.

void write_trace(const Execution& ex, std::ostream& out);
std::string trace_to_string(const Execution& ex);

// Recomputes the path-fuel verdict from a trace file alone.
// Throws SchedulerError on malformed traces or unknown tid.
PathFuelReport fuel_from_trace(std::istream& in, Tid thread_path);

// Schedule of a trace file (tids in step order).
std::vector<Tid> schedule_from_trace(std::istream& in);

}  // namespace hlt
