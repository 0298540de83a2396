#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hlt/order.hpp"

// Abstract syntax of real and auxiliary code. Expressions are immutable
// shared trees; stepping rebuilds only the spine above the redex. Degrees and
// levels appear as parse-resolved literals on the ghost nodes, never as
// runtime values.
namespace hlt {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// A binder is a name or the anonymous binder "_".
using Binder = std::optional<std::string>;

inline Binder anon() { return std::nullopt; }
inline Binder named(std::string s) { return Binder(std::move(s)); }

struct SrcLoc {
    int line = 0;
    int col = 0;
    std::string to_string() const {
        return std::to_string(line) + ":" + std::to_string(col);
    }
};

// ---------------------------------------------------------------------------
// Values

struct Val;
using ValPtr = std::shared_ptr<const Val>;

struct UnitV {};
struct PoisonV {};
struct IntV { std::int64_t v = 0; };
struct BoolV { bool v = false; };
struct LocV { std::int64_t loc = 0; };
struct SigV { std::int64_t sig = 0; };
struct ProphV { std::int64_t id = 0; };

// Real closure: recursive, one real parameter plus one or more auxiliary
// parameters (the erasable dialect's instrumented mu).
struct RecClosV {
    Binder self;
    Binder param;
    std::vector<Binder> aux_params;
    ExprPtr body;
};

// Auxiliary closure: single parameter, no self binder.
struct AuxClosV {
    Binder param;
    ExprPtr body;
};

struct PairV {
    ValPtr fst;
    ValPtr snd;
};

struct InjV {
    bool right = false;  // inl / inr
    ValPtr payload;
};

struct Val {
    std::variant<UnitV, PoisonV, IntV, BoolV, LocV, SigV, ProphV,
                 std::shared_ptr<const RecClosV>, std::shared_ptr<const AuxClosV>,
                 PairV, InjV>
        v;

    Val() : v(UnitV{}) {}
    template <typename T>
    explicit Val(T x) : v(std::move(x)) {}

    static Val unit() { return Val(UnitV{}); }
    static Val poison() { return Val(PoisonV{}); }
    static Val integer(std::int64_t n) { return Val(IntV{n}); }
    static Val boolean(bool b) { return Val(BoolV{b}); }
    static Val loc(std::int64_t l) { return Val(LocV{l}); }
    static Val sig(std::int64_t s) { return Val(SigV{s}); }
    static Val pair(Val a, Val b) {
        return Val(PairV{std::make_shared<const Val>(std::move(a)),
                         std::make_shared<const Val>(std::move(b))});
    }
    static Val inj(bool right, Val p) {
        return Val(InjV{right, std::make_shared<const Val>(std::move(p))});
    }

    template <typename T>
    const T* get() const { return std::get_if<T>(&v); }
    bool is_unit() const { return get<UnitV>() != nullptr; }
    bool is_true() const { auto* b = get<BoolV>(); return b && b->v; }
};

bool val_equal(const Val& a, const Val& b);     // structural
std::uint64_t val_hash(const Val& v);

// ---------------------------------------------------------------------------
// Expressions

enum class UnOp { Neg };

enum class BinOp { Add, Sub, Rem, PtrAdd, Eq, Lt, Le };

enum class ExprKind {
    Value,        // payload: val
    Var,          // payload: var
    Rec,          // self, bind, aux_binds; kids: [body]
    AuxLam,       // bind; kids: [body]
    App,          // kids: [fn, arg, aux...]
    AuxApp,       // kids: [fn, arg]
    UnaryOp,      // un; kids: [e]
    BinaryOp,     // bin; kids: [lhs, rhs]
    If,           // kids: [cond, then, else]
    Pair,         // kids: [fst, snd]
    Fst, Snd,     // kids: [e]
    Inl, Inr,     // kids: [e]
    Match,        // kids: [scrut, arml, armr]  (arms are functions, applied on match)
    Let,          // bind; kids: [rhs, body]
    LetAux,       // bind; kids: [rhs, body]    (rhs is auxiliary code, big-stepped)
    AllocN,       // kids: [count, init]
    Free,         // kids: [e]
    Load,         // kids: [e]
    Store,        // kids: [dst, v]
    AllocA,       // kids: [count, init]
    LoadA,        // kids: [e]
    StoreA,       // kids: [dst, v]
    CmpXchg,      // kids: [dst, expected, new]
    Xchg,         // kids: [dst, v]
    Faa,          // kids: [dst, delta]
    Fork,         // kids: [transfer-list, body]
    Atomic,       // kids: [body]
    NewSignal,    // lev; kids: [thread]
    SetSignal,    // kids: [thread, signal]
    NewExpectPerm,// deg (consumed), deg2 (minted); kids: [thread, signal]
    Expect,       // deg; kids: [thread, signal]
    Lower,        // deg (from), deg2 (to); kids: [count, thread]
    CurrentThread,
    Finish,
    Abort,
    NewProph,     // parse-only
    ResolveWith,  // parse-only; kids: [e1, e2, e3]
};

struct Expr {
    ExprKind k;
    std::vector<ExprPtr> kids;

    Val val;                        // Value
    std::string var;                // Var
    Binder self, bind;              // Rec / AuxLam / Let / LetAux
    std::vector<Binder> aux_binds;  // Rec aux params; Match arm binders live in arms
    UnOp un = UnOp::Neg;
    BinOp bin = BinOp::Add;
    Degree deg, deg2;
    Level lev;
    SrcLoc loc;
};

ExprPtr mk(ExprKind k, std::vector<ExprPtr> kids = {});
ExprPtr mk_val(Val v);
ExprPtr mk_var(std::string name);
ExprPtr mk_unit();
ExprPtr mk_int(std::int64_t n);
ExprPtr mk_bool(bool b);
ExprPtr mk_rec(Binder self, Binder param, std::vector<Binder> aux_params, ExprPtr body);
ExprPtr mk_auxlam(Binder param, ExprPtr body);
ExprPtr mk_app(ExprPtr fn, ExprPtr arg, std::vector<ExprPtr> aux_args);
ExprPtr mk_auxapp(ExprPtr fn, ExprPtr arg);
ExprPtr mk_binop(BinOp op, ExprPtr a, ExprPtr b);
ExprPtr mk_unop(UnOp op, ExprPtr a);
ExprPtr mk_if(ExprPtr c, ExprPtr t, ExprPtr e);
ExprPtr mk_let(Binder x, ExprPtr rhs, ExprPtr body);
ExprPtr mk_letaux(Binder x, ExprPtr rhs, ExprPtr body);
ExprPtr mk_seq(ExprPtr a, ExprPtr b);

bool is_value(const Expr& e);
inline bool is_value(const ExprPtr& e) { return is_value(*e); }

bool expr_equal(const Expr& a, const Expr& b);
inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) { return expr_equal(*a, *b); }
std::uint64_t expr_hash(const Expr& e);

// Multiset of free variables (each occurrence counted).
std::map<std::string, int> free_vars(const Expr& e);

// Capture-avoiding substitution of value v for x. The anonymous binder
// substitutes nothing. Values are closed, so no renaming is ever required.
ExprPtr substitute(const ExprPtr& e, const Binder& x, const Val& v);

// ---------------------------------------------------------------------------
// Programs

struct Prog {
    DomainDescriptor degrees = DomainDescriptor::atoms(1);
    DomainDescriptor levels = DomainDescriptor::atoms(1);
    std::vector<std::pair<std::string, Degree>> degree_names;
    std::vector<std::pair<std::string, Level>> level_names;
    DegreeMultiset init_callperms;
    std::vector<std::pair<std::string, int>> fields;  // field sugar table
    ExprPtr main;

    std::optional<Degree> degree_by_name(const std::string& n) const;
    std::optional<Level> level_by_name(const std::string& n) const;
    std::optional<int> field_by_name(const std::string& n) const;
};

}  // namespace hlt
