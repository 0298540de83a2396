#include <doctest.h>

#include <functional>
#include <map>
#include <random>

#include "hlt/discipline.hpp"
#include "hlt/parser.hpp"
#include "hlt/pretty.hpp"
#include "hlt/semantics.hpp"

using namespace hlt;

namespace {

Prog plain_env() {
    Prog p;
    p.degrees = DomainDescriptor::lexsum({DomainDescriptor::atoms(1), DomainDescriptor::atoms(1)});
    p.degree_names.emplace_back("dlo", Degree::elem({0, 0}));
    p.degree_names.emplace_back("dhi", Degree::elem({1, 0}));
    p.levels = DomainDescriptor::atoms(1);
    p.level_names.emplace_back("l0", Level::elem({0}));
    p.fields.emplace_back("owner", 0);
    p.fields.emplace_back("next", 1);
    return p;
}

}  // namespace

TEST_CASE("ghost let wraps auxiliary code in a let-aux node") {
    Prog env = plain_env();
    ExprPtr e = parse_expr("ghost let s = NewSignal cur 0 in ()", env);
    REQUIRE(e->k == ExprKind::LetAux);
    CHECK(e->bind == named("s"));
    CHECK(e->kids[0]->k == ExprKind::NewSignal);
    CHECK(e->kids[0]->kids[0]->k == ExprKind::CurrentThread);
    ExprPtr e2 = parse_expr("let ghost s = NewSignal cur 0 in ()", env);
    CHECK(expr_equal(e, e2));
}

TEST_CASE("the flag program parses to the expected shape") {
    Prog env = plain_env();
    ExprPtr e = parse_expr("let f = ref true in fork [] { while !f { () } }; f := false", env);
    REQUIRE(e->k == ExprKind::Let);
    CHECK(e->kids[0]->k == ExprKind::AllocN);
    const ExprPtr& seq = e->kids[1];
    REQUIRE(seq->k == ExprKind::Let);  // sequencing
    CHECK_FALSE(seq->bind.has_value());
    CHECK(seq->kids[0]->k == ExprKind::Fork);
    CHECK(seq->kids[1]->k == ExprKind::Store);
}

TEST_CASE("CAS is sugar for the second projection of CmpXchg") {
    Prog env = plain_env();
    ExprPtr e = parse_expr("CAS(x, 0, 1)", env);
    REQUIRE(e->k == ExprKind::Snd);
    CHECK(e->kids[0]->k == ExprKind::CmpXchg);
}

TEST_CASE("parse errors carry positions") {
    CHECK_THROWS_AS(parse("main = let x = in ()"), ParseError);
    CHECK_THROWS_AS(parse("main = x"), ParseError);               // open main
    CHECK_THROWS_AS(parse("main = ghost { lower z to 1 times d0 }"), ParseError);  // unknown degree
    try {
        parse("main =\nlet x = @ in ()");
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("substitution") {
    Prog env = plain_env();
    // substitute(x + 1, x, 41) -> 41 + 1
    ExprPtr e = parse_expr("x + 1", env);
    ExprPtr out = substitute(e, named("x"), Val::integer(41));
    CHECK(pretty_print(out, env) == "41 + 1");

    // under a binder: (fun y. x)[x := 7] substitutes, (fun x. x)[x := 7] does not
    ExprPtr lam1 = parse_expr("(fun y. x)", env);
    ExprPtr lam1s = substitute(lam1, named("x"), Val::integer(7));
    CHECK(pretty_print(lam1s, env) == "(rec _ y ghost[_]. 7)");
    ExprPtr lam2 = parse_expr("(fun x. x)", env);
    CHECK(expr_equal(substitute(lam2, named("x"), Val::integer(7)), lam2));

    // anonymous binder substitutes nothing
    CHECK(expr_equal(substitute(e, anon(), Val::integer(1)), e));
}

TEST_CASE("substitution only removes the substituted free variable") {
    std::mt19937_64 rng(11);
    Prog env = plain_env();
    std::vector<std::string> exprs = {
        "x + (y - x)",
        "let a = x in a + y",
        "if x then y else x + 1",
        "(fun x. x + y) z",
        "let x = y in x + x",
    };
    for (auto& src : exprs) {
        ExprPtr e = parse_expr(src, env, true);
        auto before = free_vars(*e);
        ExprPtr s = substitute(e, named("x"), Val::integer(3));
        auto after = free_vars(*s);
        auto expect = before;
        expect.erase("x");
        CHECK(after == expect);
        (void)rng;
    }
}

// ---------------------------------------------------------------------------
// round trips

TEST_CASE("pretty-print round trip on handwritten programs") {
    std::vector<std::string> sources = {
        "main =\n()\n",
        "degrees = lexsum(atoms(1), atoms(2))\n"
        "degree a = (0, 0)\n"
        "degree b = (1, 1)\n"
        "levels = atoms(1)\n"
        "level l0 = 0\n"
        "init_callperms = [a, b, b, d0]\n"
        "fields owner = 0, next = 1\n"
        "main =\n"
        "let lk = AllocN(4, 0) in\n"
        "let ow = lk.owner in\n"
        "ghost let s = NewSignal cur l0 in\n"
        "ghost { NewExpectPerm cur s b a };\n"
        "fork [s] { ghost { SetSignal cur s } };\n"
        "let t = atomic { ghost { let o = !ow in if o = 0 then Expect cur s a else () }; "
        "FAA(ow, 1) } in\n"
        "while (let p = CmpXchg(ow, t, 0) in let ok = snd p in not ok) { () };\n"
        "lk.next := 5;\n"
        "()\n",
        "main =\nlet p = (1, (true, ())) in\nlet a = fst p in\nmatch inl 3 with inl x => x + 1 | "
        "inr y => 0 end\n",
        "main =\nlet f = (rec f x ghost[k1 k2]. f (x - 1) ghost[k1, ()]) in\nf 3 ghost[(fun _. "
        "()), 7]\n",
    };
    for (auto& src : sources) {
        Prog p1 = parse(src);
        std::string printed = pretty_print(p1);
        Prog p2 = parse(printed);
        CHECK_MESSAGE(expr_equal(p1.main, p2.main), "round trip failed for:\n", printed);
        CHECK(pretty_print(p2) == printed);  // printing is a fixpoint
    }
}

namespace {

// random well-formed surface terms; ctx tracks bound real variables
struct Gen {
    std::mt19937_64 rng{20260810};
    int fuel = 0;

    ExprPtr atom(std::vector<std::string>& scope) {
        switch (rng() % 5) {
            case 0: return mk_int(static_cast<std::int64_t>(rng() % 100));
            case 1: return mk_bool(rng() % 2 == 0);
            case 2: return mk_unit();
            case 3:
                if (!scope.empty()) return mk_var(scope[rng() % scope.size()]);
                return mk_int(7);
            default: return mk_val(Val::poison());
        }
    }

    ExprPtr expr(std::vector<std::string>& scope, int depth) {
        if (depth <= 0 || fuel-- <= 0) return atom(scope);
        switch (rng() % 12) {
            case 0: {
                std::string x = "v" + std::to_string(rng() % 6);
                ExprPtr rhs = expr(scope, depth - 1);
                scope.push_back(x);
                ExprPtr body = expr(scope, depth - 1);
                scope.pop_back();
                return mk_let(named(x), rhs, body);
            }
            case 1: return mk_seq(expr(scope, depth - 1), expr(scope, depth - 1));
            case 2:
                return mk_binop(static_cast<BinOp>(rng() % 3), atom(scope), atom(scope));
            case 3: return mk_if(atom(scope), expr(scope, depth - 1), expr(scope, depth - 1));
            case 4: return mk(ExprKind::Pair, {atom(scope), atom(scope)});
            case 5: return mk(ExprKind::Fst, {atom(scope)});
            case 6: return mk(ExprKind::Load, {atom(scope)});
            case 7: return mk(ExprKind::Store, {atom(scope), atom(scope)});
            case 8: {
                std::string x = "a" + std::to_string(rng() % 4);
                scope.push_back(x);
                ExprPtr body = expr(scope, depth - 1);
                scope.pop_back();
                ExprPtr fn = mk_rec(anon(), named(x), {anon()}, body);
                return mk_app(fn, atom(scope), {mk_unit()});
            }
            case 9: return mk(ExprKind::AllocN, {mk_int(1 + rng() % 3), atom(scope)});
            case 10: return mk(ExprKind::Atomic, {mk(ExprKind::Load, {atom(scope)})});
            default: return mk(ExprKind::Inl, {atom(scope)});
        }
    }
};

}  // namespace

TEST_CASE("pretty-print round trip on 1000 random well-formed terms") {
    Gen gen;
    Prog env = plain_env();
    for (int i = 0; i < 1000; ++i) {
        gen.fuel = 40;
        std::vector<std::string> scope;
        ExprPtr e = gen.expr(scope, 4);
        std::string printed = pretty_print(e, env);
        ExprPtr back;
        REQUIRE_NOTHROW(back = parse_expr(printed, env));
        CHECK_MESSAGE(expr_equal(e, back), "mismatch for:\n", printed);
    }
}

// ---------------------------------------------------------------------------
// dual evaluator: substitution-based engine vs an environment-based oracle

namespace {

struct EnvVal;
using EnvValPtr = std::shared_ptr<const EnvVal>;
using Env = std::map<std::string, EnvValPtr>;

struct EnvVal {
    // int | bool | unit | closure | pair
    std::variant<std::int64_t, bool, std::monostate,
                 std::tuple<Binder, Binder, ExprPtr, Env>, std::pair<EnvValPtr, EnvValPtr>>
        v;
};

EnvValPtr ev(std::int64_t n) { return std::make_shared<EnvVal>(EnvVal{n}); }
EnvValPtr ev(bool b) { return std::make_shared<EnvVal>(EnvVal{b}); }
EnvValPtr ev_unit() { return std::make_shared<EnvVal>(EnvVal{std::monostate{}}); }

EnvValPtr env_eval(const ExprPtr& e, Env env) {
    switch (e->k) {
        case ExprKind::Value: {
            if (auto* i = e->val.get<IntV>()) return ev(i->v);
            if (auto* b = e->val.get<BoolV>()) return ev(b->v);
            if (e->val.get<UnitV>()) return ev_unit();
            throw std::runtime_error("oracle: unsupported literal");
        }
        case ExprKind::Var: {
            auto it = env.find(e->var);
            if (it == env.end()) throw std::runtime_error("oracle: unbound " + e->var);
            return it->second;
        }
        case ExprKind::Rec:
            return std::make_shared<EnvVal>(
                EnvVal{std::make_tuple(e->self, e->bind, e->kids[0], env)});
        case ExprKind::App: {
            EnvValPtr f = env_eval(e->kids[0], env);
            EnvValPtr a = env_eval(e->kids[1], env);
            auto* c = std::get_if<std::tuple<Binder, Binder, ExprPtr, Env>>(&f->v);
            if (!c) throw std::runtime_error("oracle: apply non-function");
            Env inner = std::get<3>(*c);
            if (std::get<0>(*c)) inner[*std::get<0>(*c)] = f;
            if (std::get<1>(*c)) inner[*std::get<1>(*c)] = a;
            return env_eval(std::get<2>(*c), inner);
        }
        case ExprKind::Let: {
            EnvValPtr r = env_eval(e->kids[0], env);
            if (e->bind) env[*e->bind] = r;
            return env_eval(e->kids[1], env);
        }
        case ExprKind::If: {
            EnvValPtr c = env_eval(e->kids[0], env);
            auto* b = std::get_if<bool>(&c->v);
            if (!b) throw std::runtime_error("oracle: non-bool condition");
            return env_eval(e->kids[*b ? 1 : 2], env);
        }
        case ExprKind::BinaryOp: {
            EnvValPtr l = env_eval(e->kids[0], env);
            EnvValPtr r = env_eval(e->kids[1], env);
            auto* x = std::get_if<std::int64_t>(&l->v);
            auto* y = std::get_if<std::int64_t>(&r->v);
            if (!x || !y) throw std::runtime_error("oracle: non-int arithmetic");
            switch (e->bin) {
                case BinOp::Add: return ev(*x + *y);
                case BinOp::Sub: return ev(*x - *y);
                case BinOp::Eq: return ev(*x == *y);
                case BinOp::Lt: return ev(*x < *y);
                default: throw std::runtime_error("oracle: op");
            }
        }
        case ExprKind::Pair:
            return std::make_shared<EnvVal>(
                EnvVal{std::make_pair(env_eval(e->kids[0], env), env_eval(e->kids[1], env))});
        case ExprKind::Fst:
        case ExprKind::Snd: {
            EnvValPtr p = env_eval(e->kids[0], env);
            auto* pr = std::get_if<std::pair<EnvValPtr, EnvValPtr>>(&p->v);
            if (!pr) throw std::runtime_error("oracle: projection");
            return e->k == ExprKind::Fst ? pr->first : pr->second;
        }
        default:
            throw std::runtime_error("oracle: unsupported node");
    }
}

bool matches(const EnvValPtr& o, const Val& v) {
    if (auto* i = std::get_if<std::int64_t>(&o->v)) {
        auto* iv = v.get<IntV>();
        return iv && iv->v == *i;
    }
    if (auto* b = std::get_if<bool>(&o->v)) {
        auto* bv = v.get<BoolV>();
        return bv && bv->v == *b;
    }
    if (std::get_if<std::monostate>(&o->v)) return v.is_unit();
    if (auto* p = std::get_if<std::pair<EnvValPtr, EnvValPtr>>(&o->v)) {
        auto* pv = v.get<PairV>();
        return pv && matches(p->first, *pv->fst) && matches(p->second, *pv->snd);
    }
    return true;  // closures: represented differently, not compared
}

// pure closed term generator for the dual-evaluator check (<= 20 nodes)
struct PureGen {
    std::mt19937_64 rng{99};
    ExprPtr gen(std::vector<std::string>& scope, int depth) {
        if (depth == 0) {
            if (!scope.empty() && rng() % 3 == 0) return mk_var(scope[rng() % scope.size()]);
            return mk_int(static_cast<std::int64_t>(rng() % 20));
        }
        switch (rng() % 6) {
            case 0: {
                std::string x = "x" + std::to_string(scope.size());
                ExprPtr rhs = gen(scope, depth - 1);
                scope.push_back(x);
                ExprPtr body = gen(scope, depth - 1);
                scope.pop_back();
                return mk_let(named(x), rhs, body);
            }
            case 1:
                return mk_binop(rng() % 2 ? BinOp::Add : BinOp::Sub, gen(scope, depth - 1),
                                gen(scope, depth - 1));
            case 2: {
                ExprPtr c = mk_binop(BinOp::Lt, gen(scope, depth - 1), gen(scope, depth - 1));
                return mk_if(c, gen(scope, depth - 1), gen(scope, depth - 1));
            }
            case 3: {
                std::string x = "y" + std::to_string(scope.size());
                std::vector<std::string> inner = scope;
                inner.push_back(x);
                ExprPtr body = gen(inner, depth - 1);
                ExprPtr fn = mk_rec(anon(), named(x), {anon()}, body);
                return mk_app(fn, gen(scope, depth - 1), {mk_unit()});
            }
            case 4: {
                ExprPtr p = mk(ExprKind::Pair, {gen(scope, depth - 1), gen(scope, depth - 1)});
                return mk(rng() % 2 ? ExprKind::Fst : ExprKind::Snd, {p});
            }
            default:
                return gen(scope, depth - 1);
        }
    }
};

}  // namespace

TEST_CASE("substitution-based evaluation agrees with the environment oracle") {
    PureGen gen;
    Engine eng;
    int compared = 0;
    for (int i = 0; i < 500; ++i) {
        std::vector<std::string> scope;
        ExprPtr e = gen.gen(scope, 3);
        EnvValPtr want;
        try {
            want = env_eval(e, {});
        } catch (const std::runtime_error&) {
            continue;  // oracle rejects (e.g. non-bool condition); skip
        }
        MachineState st;
        st.obligations[1] = Obligations{};
        st.call_perms[1] = DegreeMultiset{};
        st.call_perms[1].add(Degree::d0(), 1000);
        st.expect_perms[1] = ExpectPerms{};
        std::uint64_t budget = 100000;
        BigstepResult r = bigstep(eng, st, 1, e, budget);
        REQUIRE(r.kind == BigstepResult::Kind::Value);
        CHECK(matches(want, r.value));
        ++compared;
    }
    CHECK(compared > 300);
}

// ---------------------------------------------------------------------------
// discipline

TEST_CASE("discipline accepts instrumented programs and flags each violation clause") {
    Prog flag = parse(
        "degrees = lexsum(atoms(1), atoms(1))\n"
        "degree dlo = (0, 0)\n"
        "degree dhi = (1, 0)\n"
        "levels = atoms(1)\n"
        "level l0 = 0\n"
        "init_callperms = [dhi, dhi]\n"
        "main =\n"
        "let f = ref true in\n"
        "let ghost s = NewSignal cur l0 in\n"
        "ghost { NewExpectPerm cur s dhi dlo };\n"
        "fork [] { while atomic { ghost { let fv = !f in if fv then Expect cur s dlo else () }; "
        "!f } { () } };\n"
        "f := false;\n"
        "ghost { SetSignal cur s }\n");
    CHECK(check_aux_discipline(flag).ok());

    // real-heap write under a ghost let
    Prog bad1 = parse("main =\nlet x = ref 0 in\nghost { x := 1 }\n");
    auto rep1 = check_aux_discipline(bad1);
    REQUIRE_FALSE(rep1.ok());
    CHECK(rep1.violations[0].clause == "real-write-in-aux");

    // aux-bound variable used by a real operand
    Prog bad2 = parse("main =\nghost let v = 1 in\nlet w = v + 1 in\n()\n");
    auto rep2 = check_aux_discipline(bad2);
    REQUIRE_FALSE(rep2.ok());
    CHECK(rep2.violations[0].clause == "aux-var-escape");
    CHECK(rep2.violations[0].loc.line > 0);
}
