#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "hlt/order.hpp"

using namespace hlt;

namespace {

// Independent oracle: the inductive Dershowitz-Manna definition.
// M < N iff there is a nonempty X subset-of N and a multiset Y with
// M = (N \ X) + Y and every element of Y strictly below some element of X.
using MS = std::vector<int>;  // sorted atom multiset over Atoms(n)

DegreeMultiset to_dms(const MS& m) {
    DegreeMultiset out;
    for (int a : m) out.add(Degree::elem({a}));
    return out;
}

bool oracle_dm_less(const MS& m, const MS& n) {
    std::size_t k = n.size();
    for (std::size_t mask = 1; mask < (1u << k); ++mask) {
        MS x, rest;
        for (std::size_t i = 0; i < k; ++i) ((mask >> i) & 1 ? x : rest).push_back(n[i]);
        MS y = m;
        bool ok = true;
        for (int r : rest) {
            auto it = std::find(y.begin(), y.end(), r);
            if (it == y.end()) {
                ok = false;
                break;
            }
            y.erase(it);
        }
        if (!ok) continue;
        bool all_dominated = true;
        for (int e : y) {
            bool dom = false;
            for (int xe : x)
                if (e < xe) dom = true;
            if (!dom) {
                all_dominated = false;
                break;
            }
        }
        if (all_dominated) return true;
    }
    return false;
}

std::vector<MS> multisets_up_to(int atoms, int max_size) {
    std::vector<MS> out{{}};
    for (int size = 1; size <= max_size; ++size) {
        MS stack;
        std::function<void(int)> rec = [&](int lo) {
            if (static_cast<int>(stack.size()) == size) {
                out.push_back(stack);
                return;
            }
            for (int a = lo; a < atoms; ++a) {
                stack.push_back(a);
                rec(a);
                stack.pop_back();
            }
        };
        rec(0);
    }
    return out;
}

}  // namespace

TEST_CASE("lexicographic comparison follows the modular degree construction") {
    auto dom = DomainDescriptor::lexsum({DomainDescriptor::atoms(1), DomainDescriptor::atoms(1),
                                         DomainDescriptor::atoms(1)});
    CHECK(compare(dom, Degree::elem({0, 0}), Degree::elem({1, 0})) == Cmp::LT);
    CHECK(compare(dom, Degree::elem({1, 0}), Degree::elem({2, 0})) == Cmp::LT);
    CHECK(compare(dom, Degree::d0(), Degree::d0()) == Cmp::EQ);

    std::mt19937_64 rng(7);
    auto elems = dom.enumerate();
    for (int i = 0; i < 200; ++i) {
        auto& p = elems[rng() % elems.size()];
        CHECK(compare(dom, Degree::d0(), Degree::elem(p)) == Cmp::LT);
    }
    CHECK_THROWS_AS(compare(dom, Degree::elem({5, 0}), Degree::d0()), OrderError);
}

TEST_CASE("comparison is a total order on small lexsum universes") {
    auto a4 = DomainDescriptor::atoms(4);
    std::vector<DomainDescriptor> doms = {
        a4,
        DomainDescriptor::lexsum({a4, a4}),
        DomainDescriptor::lexsum({DomainDescriptor::lexsum({a4, a4}), a4}),
        DomainDescriptor::lexsum(
            {a4, DomainDescriptor::lexsum({a4, DomainDescriptor::lexsum({a4, a4})})}),
    };
    for (auto& dom : doms) {
        auto paths = dom.enumerate();
        std::vector<Degree> all{Degree::d0()};
        for (auto& p : paths) all.push_back(Degree::elem(p));
        for (auto& x : all)
            for (auto& y : all) {
                Cmp xy = compare(dom, x, y);
                Cmp yx = compare(dom, y, x);
                if (xy == Cmp::EQ) CHECK(yx == Cmp::EQ);
                if (xy == Cmp::LT) CHECK(yx == Cmp::GT);
                if (xy == Cmp::GT) CHECK(yx == Cmp::LT);
                for (auto& z : all) {
                    if (xy == Cmp::LT && compare(dom, y, z) == Cmp::LT)
                        CHECK(compare(dom, x, z) == Cmp::LT);
                }
            }
        // well-foundedness, brute force: the enumeration is strictly
        // ascending, so no descending chain can outrun the universe size
        for (std::size_t i = 0; i + 1 < paths.size(); ++i)
            CHECK(compare(dom, Degree::elem(paths[i]), Degree::elem(paths[i + 1])) == Cmp::LT);
        CHECK(paths.size() == dom.size());
    }
}

TEST_CASE("embed is order-preserving and injective") {
    auto lk = DomainDescriptor::atoms(1);
    auto dom = DomainDescriptor::lexsum({lk, DomainDescriptor::atoms(1), DomainDescriptor::atoms(1)});
    CHECK(embed(dom, 0, Degree::elem({0})) == Degree::elem({0, 0}));

    auto ceta = DomainDescriptor::atoms(2);
    auto tleta = DomainDescriptor::lexsum({ceta, DomainDescriptor::atoms(1)});
    CHECK(embed(tleta, 0, Degree::elem({0})) == Degree::elem({0, 0}));
    CHECK_THROWS_AS(embed(tleta, 5, Degree::elem({0})), OrderError);

    auto child = DomainDescriptor::lexsum({DomainDescriptor::atoms(4), DomainDescriptor::atoms(4)});
    auto parent = DomainDescriptor::lexsum({child, child, DomainDescriptor::atoms(4)});
    auto cpaths = child.enumerate();
    for (int ci : {0, 1}) {
        std::vector<Degree> embedded;
        for (auto& p : cpaths) embedded.push_back(embed(parent, ci, Degree::elem(p)));
        for (std::size_t i = 0; i < cpaths.size(); ++i)
            for (std::size_t j = 0; j < cpaths.size(); ++j) {
                Cmp inner = compare(child, Degree::elem(cpaths[i]), Degree::elem(cpaths[j]));
                Cmp outer = compare(parent, embedded[i], embedded[j]);
                CHECK(inner == outer);
            }
    }
}

TEST_CASE("dm_less agrees with the inductive oracle on Atoms(3), sizes <= 3") {
    auto dom = DomainDescriptor::atoms(3);
    auto sets = multisets_up_to(3, 3);
    int checked = 0;
    for (auto& m : sets)
        for (auto& n : sets) {
            bool got = dm_less(dom, to_dms(m), to_dms(n));
            bool want = oracle_dm_less(m, n);
            CHECK_MESSAGE(got == want, "m size ", m.size(), " n size ", n.size());
            ++checked;
        }
    CHECK(checked == 400);

    for (auto& m : sets) CHECK_FALSE(dm_less(dom, to_dms(m), to_dms(m)));
    for (auto& a : sets)
        for (auto& b : sets)
            for (auto& c : sets)
                if (dm_less(dom, to_dms(a), to_dms(b)) && dm_less(dom, to_dms(b), to_dms(c)))
                    CHECK(dm_less(dom, to_dms(a), to_dms(c)));
}

TEST_CASE("dm_less basics forced by the definition") {
    auto dom = DomainDescriptor::atoms(2);
    DegreeMultiset three_small{Degree::elem({0}), Degree::elem({0}), Degree::elem({0})};
    DegreeMultiset one_big{Degree::elem({1})};
    CHECK(dm_less(dom, three_small, one_big));
    CHECK_FALSE(dm_less(dom, one_big, one_big));

    std::mt19937_64 rng(42);
    auto dom5 = DomainDescriptor::atoms(5);
    auto rand_ms = [&](int maxn) {
        DegreeMultiset m;
        int n = rng() % (maxn + 1);
        for (int i = 0; i < n; ++i) m.add(Degree::elem({static_cast<int>(rng() % 5)}));
        return m;
    };
    int tried = 0;
    while (tried < 10000) {
        DegreeMultiset m = rand_ms(4), n = rand_ms(4), k = rand_ms(3);
        if (!dm_less(dom5, m, n)) continue;
        ++tried;
        CHECK(dm_less(dom5, m.set_union(k), n.set_union(k)));
    }
}

TEST_CASE("lowering always descends when its preconditions hold") {
    auto dom = DomainDescriptor::atoms(5);
    std::mt19937_64 rng(2026);
    int done = 0;
    while (done < 10000) {
        DegreeMultiset m;
        int n = 1 + rng() % 5;
        for (int i = 0; i < n; ++i) m.add(Degree::elem({static_cast<int>(rng() % 5)}));
        int di = 1 + static_cast<int>(rng() % 4);
        Degree delta = Degree::elem({di});
        if (m.count(delta) == 0) m.add(delta);
        Degree lower_to =
            rng() % 3 == 0 ? Degree::d0() : Degree::elem({static_cast<int>(rng() % di)});
        std::uint64_t times = rng() % 9;
        CHECK(lower_preserves_descent(dom, m, delta, times, lower_to));
        ++done;
    }
    DegreeMultiset m{Degree::elem({4})};
    CHECK(lower_preserves_descent(dom, m, Degree::elem({4}), 0, Degree::elem({1})));
    CHECK_THROWS_AS(lower_preserves_descent(dom, m, Degree::elem({4}), 1, Degree::elem({4})),
                    OrderError);
    CHECK_THROWS_AS(lower_preserves_descent(dom, m, Degree::elem({2}), 1, Degree::elem({1})),
                    OrderError);
}

TEST_CASE("level_below_all") {
    auto dom = DomainDescriptor::lexsum({DomainDescriptor::atoms(1), DomainDescriptor::atoms(1)});
    CHECK(level_below_all(dom, Level::elem({0, 0}), {}));
    CHECK(level_below_all(dom, Level::elem({0, 0}), {Level::elem({1, 0})}));
    CHECK_FALSE(level_below_all(dom, Level::elem({1, 0}), {Level::elem({1, 0})}));

    std::mt19937_64 rng(5);
    auto paths = dom.enumerate();
    for (int i = 0; i < 2000; ++i) {
        Level lev = Level::elem(paths[rng() % paths.size()]);
        std::vector<Level> obl;
        int n = rng() % 4;
        for (int j = 0; j < n; ++j) obl.push_back(Level::elem(paths[rng() % paths.size()]));
        bool expect = true;
        for (auto& o : obl)
            if (!(compare(dom, lev, o) == Cmp::LT)) expect = false;
        CHECK(level_below_all(dom, lev, obl) == expect);
    }
}
