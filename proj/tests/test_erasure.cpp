#include <doctest.h>

#include "hlt/corpus.hpp"
#include "hlt/discipline.hpp"
#include "hlt/erasure.hpp"
#include "hlt/parser.hpp"
#include "hlt/pretty.hpp"

using namespace hlt;

TEST_CASE("the flag program erases to the plain busy-wait program") {
    CorpusEntry flag = build_flag_example();
    Prog erased = erase_prog(flag.prog);
    Prog expected = parse(
        "main =\n"
        "let f = ref true in\n"
        "fork [] { while !f { () } };\n"
        "f := false;\n"
        "()\n");
    CHECK(expr_equal(erased.main, expected.main));
}

TEST_CASE("the motivating client erases to the plain handoff program") {
    CorpusEntry m = build_motivating_client();
    Prog erased = erase_prog(m.prog);
    // the erased listing: spinlock module, flag, three threads, exit guard
    Prog expected = parse(
        "main =\n"
        "let sl_acquire = (rec sl_acquire lk ghost[_ _].\n"
        "  while (let p = CmpXchg(lk, false, true) in let ok = snd p in not ok) { () }) in\n"
        "let sl_release = (rec sl_release lk ghost[_]. lk := false) in\n"
        "let lk = ref false in\n"
        "let f = ref true in\n"
        "fork [] { let v = !f in if v then abort else (sl_release lk ghost[()]) };\n"
        "fork [] { sl_acquire lk ghost[(), ()]; sl_release lk ghost[()] };\n"
        "sl_acquire lk ghost[(), ()];\n"
        "f := false\n");
    CHECK_MESSAGE(expr_equal(erased.main, expected.main), "erased:\n", pretty_print(erased));
}

TEST_CASE("erasure is idempotent and deletes the auxiliary state") {
    for (auto& entry : sound_entries()) {
        Prog once = erase_prog(entry.prog);
        ExprPtr twice = erase_expr(once.main);
        CHECK_MESSAGE(expr_equal(once.main, twice), entry.name);
        CHECK(check_aux_discipline(once).ok());
    }

    MachineState s;
    s.heap[0] = Val::integer(5);
    s.aux_heap[0] = Val::integer(9);
    s.next_loc = 1;
    s.signals[0] = SignalState{Level::elem({0}), false};
    s.obligations[1] = Obligations{};
    MachineState plain = erase_state(s);
    CHECK(plain.heap.size() == 1);
    CHECK(plain.aux_heap.empty());
    CHECK(plain.signals.empty());
    CHECK(plain.obligations.empty());

    // erasure commutes with a real-heap store
    MachineState s2 = s;
    s2.heap[0] = Val::integer(7);
    MachineState e2 = erase_state(s2);
    MachineState e1 = erase_state(s);
    e1.heap[0] = Val::integer(7);
    CHECK(val_equal(e1.heap.at(0), e2.heap.at(0)));
}

TEST_CASE("erase_config refuses discipline violations") {
    Prog bad = parse("main =\nlet r = ref 0 in\nghost { r := 1 }\n");
    Config c = init_config(bad);
    CHECK_THROWS_AS(erase_config(c), EraseError);
    CHECK_THROWS_AS(erase_prog(bad), EraseError);
}

TEST_CASE("erasing an already-plain program is the identity on the text") {
    CorpusEntry flag = build_flag_example();
    Prog erased = erase_prog(flag.prog);
    std::string text1 = pretty_print(erased);
    Prog reparsed = parse(text1);
    std::string text2 = pretty_print(erase_prog(reparsed));
    CHECK(text1 == text2);
}

TEST_CASE("step-level simulation holds on round-robin corpus executions") {
    for (auto& entry : sound_entries()) {
        Execution ex = run(entry.prog, SchedulePolicy::round_robin(), entry.step_cap, entry.mode);
        bool safe = ex.status == RunStatus::AllFinished ||
                    (entry.may_abort && ex.status == RunStatus::Aborted);
        REQUIRE_MESSAGE(safe, entry.name);
        SimulationReport rep = check_erasure_simulation(entry.prog, ex);
        CHECK_MESSAGE(rep.ok, entry.name, ": ", rep.failure);
        CHECK(rep.real_steps + rep.aux_steps == ex.steps.size());
        CHECK(rep.aux_steps > 0);
    }
}

TEST_CASE("simulation holds on the aborting motivating run too") {
    CorpusEntry m = build_motivating_client();
    Execution ex = run(m.prog, SchedulePolicy::round_robin(), m.step_cap, m.mode);
    REQUIRE(ex.status == RunStatus::Aborted);
    SimulationReport rep = check_erasure_simulation(m.prog, ex);
    CHECK_MESSAGE(rep.ok, rep.failure);
}

TEST_CASE("erased programs terminate independently with zero ghost events") {
    for (auto& entry : sound_entries()) {
        Prog erased = erase_prog(entry.prog);
        Execution ex = run(erased, SchedulePolicy::round_robin(), entry.step_cap,
                           Mode::plain_mode());
        bool safe = ex.status == RunStatus::AllFinished ||
                    (entry.may_abort && ex.status == RunStatus::Aborted);
        REQUIRE_MESSAGE(safe, entry.name);
        for (auto& ts : ex.steps) {
            CHECK(ts.delta.empty());
            CHECK(ts.expects.empty());
        }
        CHECK(ex.final.state.aux_heap.empty());
        CHECK(ex.final.state.signals.empty());
    }
}
