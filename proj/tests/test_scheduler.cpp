#include <doctest.h>

#include <sstream>

#include "hlt/corpus.hpp"
#include "hlt/parser.hpp"
#include "hlt/scheduler.hpp"

using namespace hlt;

TEST_CASE("flag program finishes under round robin and records a replayable trace") {
    CorpusEntry flag = build_flag_example();
    RunOptions opts;
    opts.validate_each_step = true;
    Execution ex = run(flag.prog, SchedulePolicy::round_robin(), opts);
    REQUIRE(ex.status == RunStatus::AllFinished);
    CHECK(ex.steps.size() > 5);

    // deterministic replay: same status, same final hash, same bytes
    Execution re = replay(flag.prog, ex.schedule(), Mode::sound());
    CHECK(re.status == RunStatus::AllFinished);
    CHECK(re.final_hash == ex.final_hash);

    Execution again = run(flag.prog, SchedulePolicy::round_robin(), opts);
    CHECK(trace_to_string(again) == trace_to_string(ex));
}

TEST_CASE("scripted replay of a stuck run reproduces the stuck status") {
    CorpusEntry fix = build_flag_missing_set();
    Execution ex = run(fix.prog, SchedulePolicy::round_robin(), 100000, Mode::sound());
    REQUIRE(ex.status == RunStatus::Stuck);
    CHECK(ex.stuck.kind == StuckKind::UnfulfilledObligations);

    Execution re = replay(fix.prog, ex.schedule(), Mode::sound());
    CHECK(re.status == RunStatus::Stuck);
    CHECK(re.stuck.kind == ex.stuck.kind);
    CHECK(re.final_hash == ex.final_hash);

    // a scripted tid that is complete or absent is a replay error
    CHECK_THROWS_AS(replay(fix.prog, {1, 7}, Mode::sound()), SchedulerError);
}

TEST_CASE("round robin gives every runnable thread a step per window") {
    CorpusEntry tl = build_ticketlock(3);
    Execution ex = run(tl.prog, SchedulePolicy::round_robin(), 100000, Mode::sound());
    REQUIRE(ex.status == RunStatus::AllFinished);
    // find a window where all four threads exist and are running, then check
    // each appears within any pool-sized window of picks
    std::vector<Tid> picks;
    for (auto& s : ex.steps) picks.push_back(s.tid);
    // threads 2..4 appear; between consecutive picks of one tid there are at
    // most pool-size distinct other picks while it stays runnable
    std::map<Tid, std::size_t> last;
    for (std::size_t i = 0; i < picks.size(); ++i) {
        auto it = last.find(picks[i]);
        if (it != last.end()) CHECK(i - it->second <= 4);
        last[picks[i]] = i;
    }
}

TEST_CASE("random fair policy is deterministic per seed") {
    CorpusEntry tl = build_ticketlock(2);
    Execution a = run(tl.prog, SchedulePolicy::random_fair(123), 100000, Mode::sound());
    Execution b = run(tl.prog, SchedulePolicy::random_fair(123), 100000, Mode::sound());
    Execution c = run(tl.prog, SchedulePolicy::random_fair(124), 100000, Mode::sound());
    CHECK(a.status == RunStatus::AllFinished);
    CHECK(trace_to_string(a) == trace_to_string(b));
    CHECK(a.final_hash == b.final_hash);
    CHECK(trace_to_string(a) != trace_to_string(c));
}

TEST_CASE("explore: flag program has only finished terminals") {
    CorpusEntry flag = build_flag_example();
    ExploreReport rep = explore(flag.prog, 200, 1000000, Mode::sound());
    CHECK_FALSE(rep.truncated);
    CHECK_FALSE(rep.any_stuck());
    REQUIRE(rep.terminals.count("AllFinished"));
    CHECK(rep.terminals.size() == 1);
}

TEST_CASE("explore finds the seeded defect with a witness") {
    CorpusEntry fix = build_flag_missing_set();
    ExploreReport rep = explore(fix.prog, 200, 1000000, Mode::sound());
    CHECK(rep.any_stuck());
    REQUIRE(rep.witnesses.count("Stuck(UnfulfilledObligations)") == 1);
    // the witness schedule replays to the same stuck reason
    auto sched = rep.witnesses.at("Stuck(UnfulfilledObligations)");
    Execution w = replay(fix.prog, sched, Mode::sound());
    CHECK(w.status == RunStatus::Stuck);
    CHECK(w.stuck.kind == StuckKind::UnfulfilledObligations);
}

TEST_CASE("step cap is a distinct status") {
    Prog p = parse("main =\nwhile true { () }\n");
    Execution ex = run(p, SchedulePolicy::round_robin(), 50, Mode::plain_mode());
    CHECK(ex.status == RunStatus::StepCapExceeded);
    CHECK(ex.steps.size() == 50);
}

TEST_CASE("path fuel: straight-line programs decrease exactly at BetaS") {
    Prog p = parse(
        "degrees = atoms(2)\ndegree hi = 1\n"
        "init_callperms = [hi, hi, hi]\n"
        "main =\n"
        "let f = (rec f x ghost[_]. x + 1) in\n"
        "let a = f 1 in\n"
        "let b = f a in\n"
        "()\n");
    Execution ex = run(p, SchedulePolicy::round_robin(), 1000, Mode::sound());
    REQUIRE(ex.status == RunStatus::AllFinished);
    PathFuelReport rep = path_fuel_check(ex, 1);
    CHECK(rep.monotone);
    // count the strict decreases: one per BetaS
    int strict = 0;
    for (std::size_t i = 0; i + 1 < rep.sequence.size(); ++i) {
        if (!(rep.sequence[i] == rep.sequence[i + 1])) ++strict;
    }
    int betas = 0;
    for (auto& s : ex.steps)
        if (s.rule == "BetaS") ++betas;
    CHECK(strict == betas);
}

TEST_CASE("path fuel: the flag forkee pays its loop from Expect allowances") {
    CorpusEntry flag = build_flag_example();
    Execution ex = run(flag.prog, SchedulePolicy::round_robin(), 100000, Mode::sound());
    REQUIRE(ex.status == RunStatus::AllFinished);
    for (Tid t : {Tid{1}, Tid{2}}) {
        PathFuelReport rep = path_fuel_check(ex, t);
        CHECK_MESSAGE(rep.monotone, "tid ", t, ": ", rep.violation);
        CHECK(rep.sequence.size() > 1);
    }
    CHECK_THROWS_AS(path_fuel_check(ex, 9), SchedulerError);
}

TEST_CASE("fuel verdicts are recomputable from the trace file alone") {
    CorpusEntry flag = build_flag_example();
    Execution ex = run(flag.prog, SchedulePolicy::round_robin(), 100000, Mode::sound());
    std::string trace = trace_to_string(ex);
    {
        std::istringstream in(trace);
        PathFuelReport rep = fuel_from_trace(in, 2);
        CHECK(rep.monotone);
    }
    {
        // corrupt the trace: inject a call-permission gain out of nowhere,
        // after the fork so the forkee is alive
        std::istringstream lines(trace);
        std::ostringstream corrupted;
        std::string line;
        int i = 0;
        while (std::getline(lines, line)) {
            if (i == 8) {
                auto pos = line.rfind('}');
                line = line.substr(0, pos) + ",\"cp\":[[2,\"(1,0)\",2]]}";
            }
            corrupted << line << "\n";
            ++i;
        }
        std::istringstream in(corrupted.str());
        PathFuelReport rep = fuel_from_trace(in, 2);
        CHECK_FALSE(rep.monotone);
    }
    {
        std::istringstream in(trace);
        CHECK_THROWS_AS(fuel_from_trace(in, 42), SchedulerError);
    }
    {
        std::istringstream in(trace);
        auto sched = schedule_from_trace(in);
        CHECK(sched.size() == ex.steps.size());
    }
}

TEST_CASE("ghost-state accounting invariants hold along corpus traces") {
    // only LowerS (descending at the target) and ExpectS (guarded) may grow a
    // call-permission multiset; obligations move only at the obligation rules;
    // signals are monotone
    for (auto& entry : sound_entries()) {
        RunOptions opts;
        opts.mode = entry.mode;
        opts.step_cap = entry.step_cap;
        opts.validate_each_step = true;
        Execution ex = run(entry.prog, SchedulePolicy::round_robin(), opts);
        for (auto& ts : ex.steps) {
            bool grew = false;
            for (auto& [t, d, k] : ts.delta.call_perms)
                if (k > 0) grew = true;
            if (grew) {
                CHECK_MESSAGE((ts.rule == "LowerS" || ts.rule == "ExpectS" ||
                               ts.rule == "ForkS" || ts.rule == "AtomicBlockS" ||
                               ts.rule == "LetAuxS" || ts.rule == "BetaS"),
                              entry.name, ": rule ", ts.rule, " grew a permission multiset");
                // big-step wrappers may contain LowerS/ExpectS; bare heap or
                // pure rules never grow permissions
            }
            for (auto& [t, s, l, k] : ts.delta.obligations) {
                (void)s;
                (void)l;
                CHECK((ts.rule == "NewSignalS" || ts.rule == "SetSignalS" || ts.rule == "ForkS" ||
                       ts.rule == "AtomicBlockS" || ts.rule == "LetAuxS" || ts.rule == "BetaS"));
                (void)t;
                (void)k;
            }
        }
    }
}

TEST_CASE("signals are created once and set at most once along corpus traces") {
    for (auto& e : sound_entries()) {
        Execution ex = run(e.prog, SchedulePolicy::round_robin(), e.step_cap, e.mode);
        std::map<Sig, int> created, set;
        for (auto& ts : ex.steps) {
            for (auto& [s, l] : ts.delta.signals_created) {
                (void)l;
                created[s]++;
            }
            for (Sig s : ts.delta.signals_set) set[s]++;
        }
        for (auto& [s, n] : created) CHECK_MESSAGE(n == 1, e.name, " signal ", s);
        for (auto& [s, n] : set) {
            CHECK_MESSAGE(n == 1, e.name, " signal ", s, " set ", n, " times");
            CHECK_MESSAGE(created.count(s) == 1, e.name, " set an unknown signal");
        }
    }
}
