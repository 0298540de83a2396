#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hlt/scheduler.hpp"

namespace hlt {

// A corpus entry: the program, its expected behaviour, desk-scale bounds and
// structural trace assertions.
struct CorpusEntry {
    std::string name;
    std::string description;
    std::string source;  // .hlt surface text
    Prog prog;

    bool sound = false;          // expected to end safely under fair schedules (sound mode)
    bool may_abort = false;      // Aborted is also a legitimate safe terminal
    bool reconstructed = false;  // client glue rebuilt from prose rather than a listing
    Mode mode;                   // mode the entry is meant to run in
    std::uint64_t step_cap = 100000;

    std::uint64_t explore_depth = 0;  // 0: not an exploration target
    std::uint64_t explore_visited = 1000000;
    bool explore_may_truncate = false;

    std::optional<StuckKind> expected_stuck;  // defect fixtures
    std::vector<Tid> script;                  // fixture schedule; empty = round robin

    using TraceCheck = std::function<std::optional<std::string>(const Execution&)>;
    std::vector<TraceCheck> trace_checks;
};

// ---------------------------------------------------------------------------
// Builders for the built-in program corpus.

CorpusEntry build_flag_example();
CorpusEntry build_motivating_client();              // 3-thread spinlock client
CorpusEntry build_ticketlock(int n_threads);        // acquire-increment-release clients
CorpusEntry build_distinguishing_client_ticketlock();
CorpusEntry build_distinguishing_client_spinlock(); // erased-only, adversarial schedule
CorpusEntry build_cohortlock(int cohorts, int per_cohort, int max_handoffs);
CorpusEntry build_unsound_livelock();

// Seeded defects.
CorpusEntry build_flag_missing_set();
CorpusEntry build_flag_no_expect_perm();
CorpusEntry build_ticketlock_nofairness(int n_threads);

// The eight negative-rule fixtures (one exact StuckReason each).
std::vector<CorpusEntry> negative_fixtures();

// Discipline-violation fixtures: (name, clause, program). One per clause.
struct DisciplineFixture {
    std::string name;
    std::string clause;
    Prog prog;
};
std::vector<DisciplineFixture> discipline_fixtures();

// The sound entries (termination-harness set).
std::vector<CorpusEntry> sound_entries();

// Every named entry, for CLI lookup.
std::vector<CorpusEntry> all_entries();
std::optional<CorpusEntry> entry_by_name(const std::string& name);

// Runs a custom scheduling adversary and freezes the chosen tids as a script.
// pick(cfg) returns the next tid among runnable ones; the run stops at a
// terminal status or after cap steps.
std::vector<Tid> record_adversary(const Prog& p, Mode mode, std::uint64_t cap,
                                  const std::function<Tid(const Config&)>& pick);

}  // namespace hlt
