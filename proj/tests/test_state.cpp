#include <doctest.h>

#include <random>
#include <set>

#include "hlt/corpus.hpp"
#include "hlt/parser.hpp"
#include "hlt/state.hpp"

using namespace hlt;

TEST_CASE("init_config shape") {
    Prog p = parse(
        "degrees = atoms(2)\ndegree d1 = 1\ninit_callperms = [d1]\nmain =\n()\n");
    Config c = init_config(p);
    REQUIRE(c.pool.threads.size() == 1);
    CHECK(c.pool.threads[0].first == 1);
    // main ; Finish
    CHECK(c.pool.threads[0].second->k == ExprKind::Let);
    CHECK(c.pool.threads[0].second->kids[1]->k == ExprKind::Finish);
    CHECK(c.state.heap.empty());
    CHECK(c.state.signals.empty());
    CHECK(c.state.obligations.at(1).empty());
    CHECK(c.state.call_perms.at(1).count(Degree::elem({1})) == 1);
    CHECK(c.state.expect_perms.at(1).empty());
    CHECK(canonical_hash(c) == canonical_hash(init_config(p)));
    CHECK_FALSE(validate(c).has_value());
}

TEST_CASE("spawn_thread moves obligations and copies permissions") {
    Prog p = parse("levels = atoms(1)\nmain =\n()\n");
    Config c = init_config(p);
    Sig s = c.state.alloc_signal(1);
    c.state.signals[s] = SignalState{Level::elem({0}), false};
    c.state.obligations[1].add(s, Level::elem({0}));
    c.state.call_perms[1].add(Degree::d0(), 3);
    c.state.expect_perms[1][{s, Degree::d0()}] = 1;

    auto [c2, child] = spawn_thread(c, 1, {s}, mk_unit());
    CHECK(child == 2);
    CHECK(c2.state.obligations.at(1).empty());
    CHECK(c2.state.obligations.at(child).total() == 1);
    CHECK(c2.state.call_perms.at(child).count(Degree::d0()) == 3);
    CHECK(c2.state.expect_perms.at(child).size() == 1);
    // global obligation multiset conserved
    std::uint64_t total = 0;
    for (auto& [t, ob] : c2.state.obligations) total += ob.total();
    CHECK(total == 1);
    CHECK(c2.pool.threads.back().second->kids[1]->k == ExprKind::Finish);
    CHECK_FALSE(validate(c2).has_value());

    // transferring an unowned signal
    CHECK_THROWS_AS(spawn_thread(c2, 1, {s}, mk_unit()), StateError);
}

TEST_CASE("canonical hash distinguishes permission mutations") {
    Prog p = parse("degrees = atoms(8)\nmain =\n()\n");
    Config base = init_config(p);
    std::uint64_t h0 = canonical_hash(base);

    Config copy = base;
    CHECK(canonical_hash(copy) == h0);

    std::set<std::uint64_t> seen{h0};
    int collisions = 0;
    for (int i = 0; i < 100000; ++i) {
        Config m = base;
        // a distinct mutation each round: i/8+1 extra permissions at degree i%8
        m.state.call_perms[1].add(Degree::elem({i % 8}), (i / 8) + 1);
        std::uint64_t h = canonical_hash(m);
        if (!seen.insert(h).second) ++collisions;
    }
    CHECK(collisions == 0);
}

TEST_CASE("hash is insensitive to map insertion order") {
    Prog p = parse("main =\n()\n");
    Config a = init_config(p);
    Config b = init_config(p);
    a.state.heap[0] = Val::integer(1);
    a.state.heap[1] = Val::integer(2);
    a.state.next_loc = 2;
    b.state.heap[1] = Val::integer(2);
    b.state.heap[0] = Val::integer(1);
    b.state.next_loc = 2;
    CHECK(canonical_hash(a) == canonical_hash(b));
    CHECK(config_equal(a, b));
    CHECK(to_canonical_text(a) == to_canonical_text(b));
}

TEST_CASE("validator catches broken invariants") {
    Prog p = parse("main =\n()\n");
    Config c = init_config(p);
    c.state.obligations[1].add(99, Level::elem({0}));
    auto err = validate(c);
    REQUIRE(err.has_value());
    CHECK(err->find("unallocated signal") != std::string::npos);

    Config c2 = init_config(p);
    c2.state.call_perms.erase(1);
    CHECK(validate(c2).has_value());
}

TEST_CASE("canonical text form is a stable golden") {
    Prog p = parse(
        "degrees = atoms(2)\ndegree hi = 1\nlevels = atoms(1)\n"
        "init_callperms = [hi, d0]\nmain =\n()\n");
    Config c = init_config(p);
    c.state.heap[0] = Val::integer(4);
    c.state.next_loc = 1;
    Sig s = c.state.alloc_signal(1);
    c.state.signals[s] = SignalState{Level::elem({0}), true};
    std::string expected =
        "threads:\n"
        "  1: ();\nfinish\n"
        "heap:\n"
        "  0 -> 4\n"
        "aux_heap:\n"
        "signals:\n"
        "  1048576 -> (0, set)\n"
        "obligations:\n"
        "  1 -> {}\n"
        "call_perms:\n"
        "  1 -> {d0, 1}\n"
        "expect_perms:\n"
        "  1 -> {}\n"
        "next_loc: 1\n"
        "aux_counters:\n"
        "sig_counters: 1:1\n";
    CHECK(to_canonical_text(c) == expected);
}
