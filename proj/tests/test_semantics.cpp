#include <doctest.h>

#include <random>

#include "hlt/parser.hpp"
#include "hlt/pretty.hpp"
#include "hlt/semantics.hpp"

using namespace hlt;

namespace {

Prog env2() {
    return parse(
        "degrees = lexsum(atoms(1), atoms(1))\n"
        "degree dlo = (0, 0)\n"
        "degree dhi = (1, 0)\n"
        "levels = atoms(2)\n"
        "level l0 = 0\n"
        "level l1 = 1\n"
        "main =\n()\n");
}

MachineState fresh_state() {
    MachineState st;
    st.obligations[1] = Obligations{};
    st.call_perms[1] = DegreeMultiset{};
    st.expect_perms[1] = ExpectPerms{};
    return st;
}

StepOutcome step(Engine& eng, MachineState& st, const ExprPtr& redex, Tid tid = 1) {
    std::uint64_t budget = 1000000;
    return head_step(eng, st, tid, redex, budget);
}

}  // namespace

TEST_CASE("decompose picks the rightmost non-value operand") {
    Prog env = env2();
    ExprPtr e = parse_expr("1 + (2 + 3)", env);
    auto d = decompose(e);
    REQUIRE(d.has_value());
    CHECK(pretty_print(d->redex, env) == "2 + 3");
    CHECK(expr_equal(d->plug(d->redex), e));

    CHECK_FALSE(decompose(mk_int(5)).has_value());
}

TEST_CASE("unique decomposition: plugging the redex back restores the term") {
    std::mt19937_64 rng(17);
    Prog env = env2();
    // random non-value terms from small building blocks
    std::vector<std::string> pieces = {
        "1 + 2", "(1, 2 + 3)", "fst (4, 5)", "if true then 1 else 2", "let x = 1 + 1 in x + x",
        "!p",    "p := 7",     "FAA(p, 1)",  "(fun x. x + 1) 3",      "inl (1 + 2)",
    };
    int count = 0;
    for (int i = 0; i < 1000; ++i) {
        std::string src = pieces[rng() % pieces.size()];
        // wrap to create deeper contexts
        if (rng() % 2) src = "(" + src + ") + (9 - 2)";
        if (rng() % 2) src = "let z = " + src + " in z";
        ExprPtr e = parse_expr(src, env);
        e = substitute(e, named("p"), Val::loc(0));
        auto d = decompose(e);
        REQUIRE(d.has_value());
        CHECK(expr_equal(d->plug(d->redex), e));
        ++count;
    }
    CHECK(count == 1000);
}

TEST_CASE("BetaS consumes one minimal-degree permission and substitutes") {
    Prog env = env2();
    Engine eng(env, Mode::sound());
    MachineState st = fresh_state();
    st.call_perms[1].add(Degree::d0());
    ExprPtr clos =
        mk_val(Val(std::make_shared<const RecClosV>(RecClosV{named("f"), named("x"), {named("y")},
                                                             parse_expr("x + 1", env)})));
    ExprPtr app = mk_app(clos, mk_int(7), {mk_unit()});
    StepOutcome o = step(eng, st, app);
    REQUIRE(o.kind == StepOutcome::Kind::Reduced);
    CHECK(o.rule == "BetaS");
    CHECK(pretty_print(o.expr, env) == "7 + 1");
    CHECK(st.call_perms[1].empty());

    // no permission at all
    StepOutcome o2 = step(eng, st, app);
    REQUIRE(o2.kind == StepOutcome::Kind::Stuck);
    CHECK(o2.stuck.kind == StuckKind::MissingCallPerm);
}

TEST_CASE("implicit lowering consumes the smallest strictly positive permission") {
    Prog env = env2();
    Engine eng(env, Mode::sound());
    MachineState st = fresh_state();
    st.call_perms[1].add(Degree::elem({0, 0}));
    st.call_perms[1].add(Degree::elem({1, 0}));
    ExprPtr app = mk_app(mk_val(Val(std::make_shared<const RecClosV>(
                             RecClosV{anon(), named("x"), {anon()}, mk_var("x")}))),
                         mk_int(1), {mk_unit()});
    StepOutcome o = step(eng, st, app);
    REQUIRE(o.kind == StepOutcome::Kind::Reduced);
    CHECK(st.call_perms[1].count(Degree::elem({0, 0})) == 0);  // smallest went
    CHECK(st.call_perms[1].count(Degree::elem({1, 0})) == 1);

    // strict mode refuses to auto-derive
    Engine strict(env, Mode::strict());
    StepOutcome o2 = step(strict, st, app);
    REQUIRE(o2.kind == StepOutcome::Kind::Stuck);
    CHECK(o2.stuck.kind == StuckKind::MissingCallPerm);
}

TEST_CASE("FinishS requires an empty obligation multiset") {
    Prog env = env2();
    Engine eng(env, Mode::sound());
    MachineState st = fresh_state();
    Sig s = st.alloc_signal(1);
    st.signals[s] = SignalState{Level::elem({0}), false};
    st.obligations[1].add(s, Level::elem({0}));
    StepOutcome o = step(eng, st, mk(ExprKind::Finish));
    REQUIRE(o.kind == StepOutcome::Kind::Stuck);
    CHECK(o.stuck.kind == StuckKind::UnfulfilledObligations);

    st.obligations[1].remove(s, Level::elem({0}));
    StepOutcome o2 = step(eng, st, mk(ExprKind::Finish));
    REQUIRE(o2.kind == StepOutcome::Kind::Reduced);
    CHECK(st.obligations[1].finished);
}

TEST_CASE("ExpectS mints a permission without consuming the expect permission") {
    Prog env = env2();
    Engine eng(env, Mode::sound());
    MachineState st = fresh_state();
    Sig s = st.alloc_signal(1);
    st.signals[s] = SignalState{Level::elem({0}), false};
    st.expect_perms[1][{s, Degree::elem({0, 0})}] = 1;

    auto ex = std::make_shared<Expr>();
    ex->k = ExprKind::Expect;
    ex->deg = Degree::elem({0, 0});
    ex->kids = {mk_int(1), mk_val(Val::sig(s))};

    StepOutcome o = step(eng, st, ExprPtr(ex));
    REQUIRE(o.kind == StepOutcome::Kind::Reduced);
    CHECK(o.rule == "ExpectS");
    CHECK(st.call_perms[1].count(Degree::elem({0, 0})) == 1);
    CHECK(st.expect_perms[1].at({s, Degree::elem({0, 0})}) == 1);  // persistent

    // set signal: first premise fails
    st.signals[s].set = true;
    StepOutcome o2 = step(eng, st, ExprPtr(ex));
    REQUIRE(o2.kind == StepOutcome::Kind::Stuck);
    CHECK(o2.stuck.kind == StuckKind::ExpectOnSetSignal);

    // unset but level not below own obligations
    st.signals[s].set = false;
    st.obligations[1].add(s, Level::elem({0}));
    StepOutcome o3 = step(eng, st, ExprPtr(ex));
    REQUIRE(o3.kind == StepOutcome::Kind::Stuck);
    CHECK(o3.stuck.kind == StuckKind::LevelNotBelowObligations);

    // unsound mode drops only the permission premise
    st.obligations[1].remove(s, Level::elem({0}));
    st.expect_perms[1].clear();
    StepOutcome o4 = step(eng, st, ExprPtr(ex));
    REQUIRE(o4.kind == StepOutcome::Kind::Stuck);
    CHECK(o4.stuck.kind == StuckKind::ExpectWithoutPermission);
    Engine unsound(env, Mode::unsound());
    StepOutcome o5 = step(unsound, st, ExprPtr(ex));
    REQUIRE(o5.kind == StepOutcome::Kind::Reduced);
    CHECK(o5.rule == "UnsoundExpect");
}

TEST_CASE("heap rules") {
    Prog env = env2();
    Engine eng(env, Mode::sound());
    MachineState st = fresh_state();

    // AllocN writes both the real cells and zeroed aux shadows
    StepOutcome oa = step(eng, st, parse_expr("AllocN(3, true)", env));
    REQUIRE(oa.kind == StepOutcome::Kind::Reduced);
    CHECK(st.heap.size() == 3);
    CHECK(st.aux_heap.size() == 3);
    CHECK(st.aux_heap.at(0).get<IntV>()->v == 0);

    // FAA returns the old value
    st.heap[0] = Val::integer(41);
    ExprPtr faa = mk(ExprKind::Faa, {mk_val(Val::loc(0)), mk_int(1)});
    StepOutcome o = step(eng, st, faa);
    REQUIRE(o.kind == StepOutcome::Kind::Reduced);
    CHECK(o.expr->val.get<IntV>()->v == 41);
    CHECK(st.heap.at(0).get<IntV>()->v == 42);

    // CmpXchg on closures is compare-unsafe
    Val clos(std::make_shared<const RecClosV>(RecClosV{anon(), anon(), {anon()}, mk_unit()}));
    st.heap[1] = clos;
    ExprPtr cx = mk(ExprKind::CmpXchg, {mk_val(Val::loc(1)), mk_val(clos), mk_int(0)});
    StepOutcome o2 = step(eng, st, cx);
    REQUIRE(o2.kind == StepOutcome::Kind::Stuck);
    CHECK(o2.stuck.kind == StuckKind::UnsafeValueCompare);

    // load of an unallocated location
    StepOutcome o3 = step(eng, st, mk(ExprKind::Load, {mk_val(Val::loc(77))}));
    CHECK(o3.stuck.kind == StuckKind::HeapFault);
}

TEST_CASE("value comparison judgment") {
    CHECK(value_eq(Val::integer(3), Val::integer(3)) == ValEq::True);
    CHECK(value_eq(Val::inj(false, Val::integer(1)), Val::inj(false, Val::integer(2))) ==
          ValEq::False);
    Val p1 = Val::pair(Val::integer(1), Val::integer(2));
    CHECK(value_eq(p1, p1) == ValEq::Unsafe);
    // one compare-safe side suffices
    CHECK(value_eq(Val::integer(1), p1) == ValEq::False);
}

TEST_CASE("bigstep evaluates aux code and rejects forks and nested atomics") {
    Prog env = env2();
    Engine eng(env, Mode::sound());
    MachineState st = fresh_state();
    std::uint64_t budget = 1000;

    // zero steps on a value
    BigstepResult r0 = bigstep(eng, st, 1, mk_int(5), budget);
    REQUIRE(r0.kind == BigstepResult::Kind::Value);
    CHECK(budget == 1000);

    // an aux closure call followed by a real FAA inside one atomic step
    st.heap[0] = Val::integer(10);
    st.aux_heap[0] = Val::integer(0);
    st.next_loc = 1;
    ExprPtr body = parse_expr("ghost { k () }; FAA(p, 1)", env);
    body = substitute(body, named("p"), Val::loc(0));
    Val k(std::make_shared<const AuxClosV>(AuxClosV{anon(), parse_expr("q :=g 9", env, true)}));
    body = substitute(body, named("k"), k);
    body = substitute(body, named("q"), Val::loc(0));
    BigstepResult r = bigstep(eng, st, 1, body, budget);
    REQUIRE(r.kind == BigstepResult::Kind::Value);
    CHECK(r.value.get<IntV>()->v == 10);
    CHECK(st.heap.at(0).get<IntV>()->v == 11);
    CHECK(st.aux_heap.at(0).get<IntV>()->v == 9);

    ExprPtr forkbody = parse_expr("fork [] { () }", env);
    std::uint64_t b2 = 1000;
    BigstepResult r2 = bigstep(eng, st, 1, forkbody, b2);
    REQUIRE(r2.kind == BigstepResult::Kind::Stuck);
    CHECK(r2.stuck.kind == StuckKind::ForkInAtomic);

    std::uint64_t b3 = 5;
    ExprPtr loop = parse_expr("while true { () }", env);
    st.call_perms[1].add(Degree::d0(), 100);
    BigstepResult r3 = bigstep(eng, st, 1, loop, b3);
    CHECK(r3.kind == BigstepResult::Kind::BudgetExceeded);
}

TEST_CASE("machine steps: fork appends, abort clears, complete thread reported") {
    Prog p = parse("main =\nfork [] { () };\n()\n");
    Engine eng(p, Mode::sound());
    Config c = init_config(p);
    // step until the fork fires
    for (int i = 0; i < 10; ++i) {
        MachineOutcome o = machine_step(eng, c, 1);
        REQUIRE(o.kind == MachineOutcome::Kind::Progressed);
        if (o.rule == "ForkS") {
            REQUIRE(o.forked.size() == 1);
            CHECK(o.forked[0] == 2);
            break;
        }
    }
    REQUIRE(c.pool.threads.size() == 2);
    CHECK(c.pool.threads[1].second->kids[1]->k == ExprKind::Finish);

    Prog ab = parse("main =\nfork [] { abort };\nwhile true { () }\n");
    Engine eng2(ab, Mode::sound());
    Config c2 = init_config(ab);
    while (c2.pool.threads.size() < 2) machine_step(eng2, c2, 1);
    MachineOutcome o2 = machine_step(eng2, c2, 2);
    // forked thread body is `abort ; Finish`; the abort is the first redex
    REQUIRE(o2.kind == MachineOutcome::Kind::Aborted);
    for (auto& [t, e] : c2.pool.threads) CHECK(is_value(e));

    MachineOutcome o3 = machine_step(eng2, c2, 1);
    CHECK(o3.kind == MachineOutcome::Kind::SelectedThreadComplete);
}

TEST_CASE("prophecy constructs parse but refuse to step") {
    Prog p = parse("main =\nlet x = newproph in\n()\n");
    Engine eng(p, Mode::sound());
    Config c = init_config(p);
    MachineOutcome o = machine_step(eng, c, 1);
    REQUIRE(o.kind == MachineOutcome::Kind::Stuck);
    CHECK(o.stuck.kind == StuckKind::UnsupportedProphecy);
}

TEST_CASE("lower can target another thread's stock") {
    Prog env = env2();
    Engine eng(env, Mode::sound());
    MachineState st = fresh_state();
    st.obligations[2] = Obligations{};
    st.call_perms[2] = DegreeMultiset{};
    st.call_perms[2].add(Degree::elem({1, 0}));
    st.expect_perms[2] = ExpectPerms{};

    auto low = std::make_shared<Expr>();
    low->k = ExprKind::Lower;
    low->deg = Degree::elem({1, 0});
    low->deg2 = Degree::elem({0, 0});
    low->kids = {mk_int(3), mk_int(2)};  // n = 3, at thread 2
    StepOutcome o = step(eng, st, ExprPtr(low));
    REQUIRE(o.kind == StepOutcome::Kind::Reduced);
    CHECK(o.rule == "LowerS");
    CHECK(st.call_perms[2].count(Degree::elem({1, 0})) == 0);
    CHECK(st.call_perms[2].count(Degree::elem({0, 0})) == 3);
    CHECK(st.call_perms[1].empty());

    // degree premise failure names the right reason
    StepOutcome o2 = step(eng, st, ExprPtr(low));
    REQUIRE(o2.kind == StepOutcome::Kind::Stuck);
    CHECK(o2.stuck.kind == StuckKind::MissingCallPerm);
}

TEST_CASE("remaining stuck classifications are reachable") {
    Prog env = env2();
    Engine eng(env, Mode::sound());

    {  // NewSignal targeting a finished thread
        MachineState st = fresh_state();
        st.obligations[1].finished = true;
        auto ns = std::make_shared<Expr>();
        ns->k = ExprKind::NewSignal;
        ns->lev = Level::elem({0});
        ns->kids = {mk_int(1)};
        StepOutcome o = step(eng, st, ExprPtr(ns));
        REQUIRE(o.kind == StepOutcome::Kind::Stuck);
        CHECK(o.stuck.kind == StuckKind::TargetThreadFinished);
    }
    {  // SetSignal on an unallocated signal
        MachineState st = fresh_state();
        ExprPtr ss = mk(ExprKind::SetSignal, {mk_int(1), mk_val(Val::sig(99))});
        StepOutcome o = step(eng, st, ss);
        REQUIRE(o.kind == StepOutcome::Kind::Stuck);
        CHECK(o.stuck.kind == StuckKind::SignalUnallocated);
    }
    {  // aux load from a cell with no auxiliary image
        MachineState st = fresh_state();
        StepOutcome o = step(eng, st, mk(ExprKind::LoadA, {mk_val(Val::loc(123))}));
        REQUIRE(o.kind == StepOutcome::Kind::Stuck);
        CHECK(o.stuck.kind == StuckKind::AuxHeapFault);
    }
    {  // an atomic block that exceeds its budget sticks distinctly
        Prog p = parse(
            "degrees = atoms(2)\n"
            "degree hi = 1\n"
            "init_callperms = [hi]\n"
            "main =\n"
            "ghost { lower hi to 100 times d0 };\n"
            "let q = ref 1 in\nlet v = atomic { let r = !q in while true { () }; r } "
            "in\n()\n");
        Mode m = Mode::sound();
        m.atomic_budget = 50;
        Engine eng2(p, m);
        Config c = init_config(p);
        MachineOutcome o;
        for (int i = 0; i < 20; ++i) {
            o = machine_step(eng2, c, 1);
            if (o.kind != MachineOutcome::Kind::Progressed) break;
        }
        REQUIRE(o.kind == MachineOutcome::Kind::Stuck);
        CHECK(o.stuck.kind == StuckKind::AtomicBudgetExceeded);
    }
}
