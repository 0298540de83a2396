#include "hlt/pretty.hpp"

#include <sstream>

namespace hlt {

namespace {

// precedence: 0 stmt, 1 assign, 2 cmp, 3 add, 4 unary, 5 app, 6 postfix, 7 atom
constexpr int kStmt = 0, kAssign = 1, kCmp = 2, kAdd = 3, kUnary = 4, kApp = 5,
              kPostfix = 6, kAtom = 7;

struct Printer {
    const Prog* env = nullptr;

    std::string bind(const Binder& b) const { return b ? *b : "_"; }

    std::string deg(const Degree& d) const {
        if (d.bottom) return "d0";
        if (env)
            for (const auto& [n, dd] : env->degree_names)
                if (dd == d) return n;
        return d.to_string();
    }

    std::string lev(const Level& l) const {
        if (env)
            for (const auto& [n, ll] : env->level_names)
                if (ll == l) return n;
        return l.to_string();
    }

    std::string field_or_offset(std::int64_t off) const {
        if (env)
            for (const auto& [n, o] : env->fields)
                if (o == off) return n;
        return "";
    }

    bool is_unit_val(const ExprPtr& e) const {
        return e->k == ExprKind::Value && e->val.is_unit();
    }
    bool is_bool_val(const ExprPtr& e, bool b) const {
        if (e->k != ExprKind::Value) return false;
        auto* x = e->val.get<BoolV>();
        return x && x->v == b;
    }

    // while-loop desugar shape produced by the parser
    bool match_while(const Expr& e, ExprPtr& cond, ExprPtr& body) const {
        if (e.k != ExprKind::App || e.kids.size() != 3) return false;
        const ExprPtr& fn = e.kids[0];
        if (fn->k != ExprKind::Rec || !fn->self || *fn->self != "%loop") return false;
        if (!is_unit_val(e.kids[1]) || !is_unit_val(e.kids[2])) return false;
        const ExprPtr& b = fn->kids[0];
        if (b->k != ExprKind::Let || !b->bind || *b->bind != "%c") return false;
        const ExprPtr& iff = b->kids[1];
        if (iff->k != ExprKind::If) return false;
        const ExprPtr& then = iff->kids[0];
        if (then->k != ExprKind::Var || then->var != "%c") return false;
        const ExprPtr& seq = iff->kids[1];
        if (seq->k != ExprKind::Let || seq->bind) return false;
        cond = b->kids[0];
        body = seq->kids[0];
        return true;
    }

    std::string val(const Val& v) const {
        if (v.get<UnitV>()) return "()";
        if (v.get<PoisonV>()) return "poison";
        if (auto* x = v.get<IntV>()) return std::to_string(x->v);
        if (auto* x = v.get<BoolV>()) return x->v ? "true" : "false";
        if (auto* x = v.get<LocV>()) return "<loc " + std::to_string(x->loc) + ">";
        if (auto* x = v.get<SigV>()) return "<sig " + std::to_string(x->sig) + ">";
        if (auto* x = v.get<ProphV>()) return "<proph " + std::to_string(x->id) + ">";
        if (auto* x = v.get<std::shared_ptr<const RecClosV>>()) {
            std::string s = "(rec " + bind((*x)->self) + " " + bind((*x)->param) + " ghost[";
            for (std::size_t i = 0; i < (*x)->aux_params.size(); ++i)
                s += (i ? " " : "") + bind((*x)->aux_params[i]);
            return s + "]. " + print((*x)->body, kStmt, false) + ")";
        }
        if (auto* x = v.get<std::shared_ptr<const AuxClosV>>())
            return "(fun " + bind((*x)->param) + ". " + print((*x)->body, kStmt, true) + ")";
        if (auto* x = v.get<PairV>()) return "(" + val(*x->fst) + ", " + val(*x->snd) + ")";
        if (auto* x = v.get<InjV>())
            return std::string(x->right ? "inr " : "inl ") + val(*x->payload);
        return "?";
    }

    std::string wrap(const std::string& s, int natural, int want) const {
        if (natural < want) return "(" + s + ")";
        return s;
    }

    bool is_let_like(const ExprPtr& e) const {
        return e->k == ExprKind::Let || e->k == ExprKind::LetAux;
    }

    std::string print(const ExprPtr& e, int want, bool aux) const {
        switch (e->k) {
            case ExprKind::Value:
                return val(e->val);
            case ExprKind::Var:
                return e->var;
            case ExprKind::Rec: {
                ExprPtr cond, body;
                if (false) {}
                std::string s = "(rec " + bind(e->self) + " " + bind(e->bind) + " ghost[";
                for (std::size_t i = 0; i < e->aux_binds.size(); ++i)
                    s += (i ? " " : "") + bind(e->aux_binds[i]);
                s += "]. " + print(e->kids[0], kStmt, false) + ")";
                return s;
            }
            case ExprKind::AuxLam:
                return "(fun " + bind(e->bind) + ". " + print(e->kids[0], kStmt, true) + ")";
            case ExprKind::App: {
                ExprPtr cond, body;
                if (match_while(*e, cond, body)) {
                    std::string s = "while " + print(cond, kAssign, aux) + " { " +
                                    print(body, kStmt, aux) + " }";
                    return wrap(s, kStmt, want);
                }
                std::string s = print(e->kids[0], kApp, aux) + " " + print(e->kids[1], kPostfix, aux);
                bool implicit = e->kids.size() == 3 && is_unit_val(e->kids[2]);
                if (!implicit) {
                    s += " ghost[";
                    for (std::size_t i = 2; i < e->kids.size(); ++i)
                        s += (i > 2 ? ", " : "") + print(e->kids[i], kAssign, true);
                    s += "]";
                }
                return wrap(s, kApp, want);
            }
            case ExprKind::AuxApp: {
                std::string s =
                    print(e->kids[0], kApp, aux) + " " + print(e->kids[1], kPostfix, aux);
                return wrap(s, kApp, want);
            }
            case ExprKind::UnaryOp:
                return wrap("-" + print(e->kids[0], kUnary, aux), kUnary, want);
            case ExprKind::BinaryOp: {
                const char* op = nullptr;
                int prec = kAdd;
                switch (e->bin) {
                    case BinOp::Add: op = "+"; break;
                    case BinOp::Sub: op = "-"; break;
                    case BinOp::Rem: op = "%"; break;
                    case BinOp::PtrAdd: op = "+l"; break;
                    case BinOp::Eq: op = "="; prec = kCmp; break;
                    case BinOp::Lt: op = "<"; prec = kCmp; break;
                    case BinOp::Le: op = "<="; prec = kCmp; break;
                }
                if (e->bin == BinOp::PtrAdd && e->kids[1]->k == ExprKind::Value) {
                    if (auto* iv = e->kids[1]->val.get<IntV>()) {
                        std::string f = field_or_offset(iv->v);
                        if (!f.empty())
                            return wrap(print(e->kids[0], kPostfix, aux) + "." + f, kPostfix, want);
                    }
                }
                std::string s = print(e->kids[0], prec, aux) + " " + op + " " +
                                print(e->kids[1], prec + 1, aux);
                return wrap(s, prec, want);
            }
            case ExprKind::If: {
                // sugar patterns: `a != b`, `not a`, `a && b`
                if (is_bool_val(e->kids[1], false) && is_bool_val(e->kids[2], true)) {
                    const ExprPtr& c = e->kids[0];
                    if (c->k == ExprKind::BinaryOp && c->bin == BinOp::Eq) {
                        std::string s = print(c->kids[0], kCmp, aux) + " != " +
                                        print(c->kids[1], kCmp + 1, aux);
                        return wrap(s, kCmp, want);
                    }
                    return wrap("not " + print(e->kids[0], kUnary, aux), kUnary, want);
                }
                if (is_bool_val(e->kids[2], false) && !is_bool_val(e->kids[1], true)) {
                    std::string s = print(e->kids[0], kCmp, aux) + " && " +
                                    print(e->kids[1], kCmp + 1, aux);
                    return wrap(s, kCmp, want);
                }
                std::string thenS = print(e->kids[1], kStmt, aux);
                if (is_let_like(e->kids[1])) thenS = "(" + thenS + ")";
                std::string elseS = print(e->kids[2], kStmt, aux);
                if (is_let_like(e->kids[2])) elseS = "(" + elseS + ")";
                std::string s =
                    "if " + print(e->kids[0], kAssign, aux) + " then " + thenS + " else " + elseS;
                return wrap(s, kStmt, want);
            }
            case ExprKind::Pair:
                return "(" + print(e->kids[0], kStmt, aux) + ", " + print(e->kids[1], kStmt, aux) +
                       ")";
            case ExprKind::Fst:
                return wrap_prefix("fst", e, aux, want);
            case ExprKind::Snd:
                if (e->kids[0]->k == ExprKind::CmpXchg) {
                    const ExprPtr& cx = e->kids[0];
                    std::string s = "CAS(" + print(cx->kids[0], kStmt, aux) + ", " +
                                    print(cx->kids[1], kStmt, aux) + ", " +
                                    print(cx->kids[2], kStmt, aux) + ")";
                    return s;
                }
                return wrap_prefix("snd", e, aux, want);
            case ExprKind::Inl:
                return wrap_prefix("inl", e, aux, want);
            case ExprKind::Inr:
                return wrap_prefix("inr", e, aux, want);
            case ExprKind::Match: {
                std::string s = "match " + print(e->kids[0], kAssign, aux) + " with";
                auto arm = [&](const ExprPtr& a, const char* tag) {
                    if (a->k == ExprKind::Rec && !a->self) {
                        s += std::string(" ") + tag + " " + bind(a->bind) + " => " +
                             print(a->kids[0], kStmt, aux);
                    } else if (a->k == ExprKind::AuxLam) {
                        s += std::string(" ") + tag + " " + bind(a->bind) + " => " +
                             print(a->kids[0], kStmt, aux);
                    } else {
                        s += std::string(" ") + tag + " _ => " + print(a, kStmt, aux);
                    }
                };
                arm(e->kids[1], "inl");
                s += " |";
                arm(e->kids[2], "inr");
                s += " end";
                return wrap(s, kStmt, want);
            }
            case ExprKind::Let: {
                if (!e->bind) {
                    // sequence
                    std::string head = print(e->kids[0], kStmt, aux);
                    if (is_let_like(e->kids[0])) head = "(" + head + ")";
                    std::string s = head + ";\n" + print(e->kids[1], kStmt, aux);
                    return wrap(s, kStmt, want);
                }
                std::string rhs = print(e->kids[0], kStmt, aux);
                if (e->kids[0]->k == ExprKind::Let && !e->kids[0]->bind) rhs = "(" + rhs + ")";
                std::string s = "let " + bind(e->bind) + " = " + rhs + " in\n" +
                                print(e->kids[1], kStmt, aux);
                return wrap(s, kStmt, want);
            }
            case ExprKind::LetAux: {
                if (!e->bind) {
                    std::string s = "ghost { " + print(e->kids[0], kStmt, true) + " }";
                    if (!is_unit_val(e->kids[1])) s += ";\n" + print(e->kids[1], kStmt, aux);
                    return wrap(s, kStmt, want);
                }
                std::string rhs = print(e->kids[0], kStmt, true);
                if (e->kids[0]->k == ExprKind::Let && !e->kids[0]->bind) rhs = "(" + rhs + ")";
                std::string s = "let ghost " + bind(e->bind) + " = " + rhs + " in\n" +
                                print(e->kids[1], kStmt, aux);
                return wrap(s, kStmt, want);
            }
            case ExprKind::AllocN:
                if (e->kids[0]->k == ExprKind::Value) {
                    auto* iv = e->kids[0]->val.get<IntV>();
                    if (iv && iv->v == 1)
                        return wrap("ref " + print(e->kids[1], kPostfix, aux), kAtom, want);
                }
                return "AllocN(" + print(e->kids[0], kStmt, aux) + ", " +
                       print(e->kids[1], kStmt, aux) + ")";
            case ExprKind::AllocA:
                if (e->kids[0]->k == ExprKind::Value) {
                    auto* iv = e->kids[0]->val.get<IntV>();
                    if (iv && iv->v == 1)
                        return wrap("refg " + print(e->kids[1], kPostfix, aux), kAtom, want);
                }
                return "allocg(" + print(e->kids[0], kStmt, aux) + ", " +
                       print(e->kids[1], kStmt, aux) + ")";
            case ExprKind::Free:
                return wrap_prefix("free", e, aux, want);
            case ExprKind::Load:
                return wrap("!" + print(e->kids[0], kPostfix, aux), kAtom, want);
            case ExprKind::LoadA:
                return wrap("!g " + print(e->kids[0], kPostfix, aux), kAtom, want);
            case ExprKind::Store: {
                std::string s = print(e->kids[0], kCmp, aux) + " := " + print(e->kids[1], kCmp, aux);
                return wrap(s, kAssign, want);
            }
            case ExprKind::StoreA: {
                std::string s =
                    print(e->kids[0], kCmp, aux) + " :=g " + print(e->kids[1], kCmp, aux);
                return wrap(s, kAssign, want);
            }
            case ExprKind::CmpXchg:
                return "CmpXchg(" + print(e->kids[0], kStmt, aux) + ", " +
                       print(e->kids[1], kStmt, aux) + ", " + print(e->kids[2], kStmt, aux) + ")";
            case ExprKind::Xchg:
                return "Xchg(" + print(e->kids[0], kStmt, aux) + ", " +
                       print(e->kids[1], kStmt, aux) + ")";
            case ExprKind::Faa:
                return "FAA(" + print(e->kids[0], kStmt, aux) + ", " +
                       print(e->kids[1], kStmt, aux) + ")";
            case ExprKind::Fork: {
                std::string s = "fork [";
                ExprPtr cur = e->kids[0];
                bool first = true;
                while (cur->k == ExprKind::Pair) {
                    s += (first ? "" : ", ") + print(cur->kids[0], kAssign, true);
                    first = false;
                    cur = cur->kids[1];
                }
                if (!is_unit_val(cur) && cur->k != ExprKind::Pair)
                    s += (first ? "" : ", ") + print(cur, kAssign, true);
                s += "] { " + print(e->kids[1], kStmt, aux) + " }";
                return wrap(s, kStmt, want);
            }
            case ExprKind::Atomic:
                return "atomic { " + print(e->kids[0], kStmt, aux) + " }";
            case ExprKind::NewSignal:
                return wrap("NewSignal " + print(e->kids[0], kPostfix, true) + " " + lev(e->lev),
                            kApp, want);
            case ExprKind::SetSignal:
                return wrap("SetSignal " + print(e->kids[0], kPostfix, true) + " " +
                                print(e->kids[1], kPostfix, true),
                            kApp, want);
            case ExprKind::NewExpectPerm:
                return wrap("NewExpectPerm " + print(e->kids[0], kPostfix, true) + " " +
                                print(e->kids[1], kPostfix, true) + " " + deg(e->deg) + " " +
                                deg(e->deg2),
                            kApp, want);
            case ExprKind::Expect:
                return wrap("Expect " + print(e->kids[0], kPostfix, true) + " " +
                                print(e->kids[1], kPostfix, true) + " " + deg(e->deg),
                            kApp, want);
            case ExprKind::Lower: {
                std::string s = "lower " + deg(e->deg) + " to " + print(e->kids[0], kAssign, true) +
                                " times " + deg(e->deg2);
                if (e->kids[1]->k != ExprKind::CurrentThread)
                    s += " at " + print(e->kids[1], kPostfix, true);
                return wrap(s, kStmt, want);
            }
            case ExprKind::CurrentThread:
                return "cur";
            case ExprKind::Finish:
                return "finish";
            case ExprKind::Abort:
                return "abort";
            case ExprKind::NewProph:
                return "newproph";
            case ExprKind::ResolveWith:
                return wrap("resolvewith " + print(e->kids[0], kPostfix, aux) + " at " +
                                print(e->kids[1], kPostfix, aux) + " to " +
                                print(e->kids[2], kPostfix, aux),
                            kApp, want);
        }
        return "?";
    }

    std::string wrap_prefix(const char* kw, const ExprPtr& e, bool aux, int want) const {
        return wrap(std::string(kw) + " " + print(e->kids[0], kPostfix, aux), kAtom, want);
    }
};

}  // namespace

std::string pretty_print(const ExprPtr& e, const Prog& env, bool aux_context) {
    Printer p;
    p.env = &env;
    return p.print(e, kStmt, aux_context);
}

std::string pretty_print(const ExprPtr& e) {
    Printer p;
    return p.print(e, kStmt, false);
}

std::string pretty_print(const Prog& p) {
    std::ostringstream out;
    out << "degrees = " << p.degrees.to_string() << "\n";
    for (const auto& [n, d] : p.degree_names) out << "degree " << n << " = " << d.to_string() << "\n";
    out << "levels = " << p.levels.to_string() << "\n";
    for (const auto& [n, l] : p.level_names) out << "level " << n << " = " << l.to_string() << "\n";
    out << "init_callperms = [";
    bool first = true;
    for (const auto& [d, k] : p.init_callperms.elems()) {
        for (std::uint64_t i = 0; i < k; ++i) {
            if (!first) out << ", ";
            Printer pr;
            pr.env = &p;
            out << pr.deg(d);
            first = false;
        }
    }
    out << "]\n";
    if (!p.fields.empty()) {
        out << "fields ";
        for (std::size_t i = 0; i < p.fields.size(); ++i) {
            if (i) out << ", ";
            out << p.fields[i].first << " = " << p.fields[i].second;
        }
        out << "\n";
    }
    out << "main =\n" << pretty_print(p.main, p) << "\n";
    return out.str();
}

std::string to_string(const Val& v) {
    Printer p;
    return p.val(v);
}

}  // namespace hlt
