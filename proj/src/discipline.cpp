#include "hlt/discipline.hpp"

#include <map>

namespace hlt {

std::string DisciplineReport::to_string() const {
    if (ok()) return "ok";
    std::string s;
    for (const auto& v : violations) {
        s += v.clause + " at " + v.loc.to_string() + ": " + v.message + "\n";
    }
    return s;
}

namespace {

bool is_atom(const Expr& e) {
    // function literals box in one pure step and count as atoms for ANF;
    // `cur` is a nullary probe and field paths (constant pointer offsets of
    // an atom) reduce deterministically in place
    if (e.k == ExprKind::BinaryOp && e.bin == BinOp::PtrAdd &&
        e.kids[1]->k == ExprKind::Value && e.kids[1]->val.get<IntV>())
        return is_atom(*e.kids[0]);
    return e.k == ExprKind::Value || e.k == ExprKind::Var || e.k == ExprKind::Rec ||
           e.k == ExprKind::AuxLam || e.k == ExprKind::CurrentThread;
}

bool is_real_impure(ExprKind k) {
    switch (k) {
        case ExprKind::AllocN:
        case ExprKind::Free:
        case ExprKind::Load:
        case ExprKind::Store:
        case ExprKind::CmpXchg:
        case ExprKind::Xchg:
        case ExprKind::Faa:
            return true;
        default:
            return false;
    }
}

bool is_real_mutation(ExprKind k) {
    switch (k) {
        case ExprKind::AllocN:
        case ExprKind::Free:
        case ExprKind::Store:
        case ExprKind::CmpXchg:
        case ExprKind::Xchg:
        case ExprKind::Faa:
            return true;
        default:
            return false;
    }
}

bool is_aux_only(ExprKind k) {
    switch (k) {
        case ExprKind::AuxLam:
        case ExprKind::AuxApp:
        case ExprKind::NewSignal:
        case ExprKind::SetSignal:
        case ExprKind::NewExpectPerm:
        case ExprKind::Expect:
        case ExprKind::Lower:
        case ExprKind::CurrentThread:
        case ExprKind::AllocA:
        case ExprKind::LoadA:
        case ExprKind::StoreA:
            return true;
        default:
            return false;
    }
}

struct Checker {
    std::vector<DisciplineViolation>* out;
    // variable name -> stack of "bound in aux position" flags
    std::map<std::string, std::vector<bool>> scope;

    void report(const char* clause, const std::string& msg, const Expr& e) {
        out->push_back(DisciplineViolation{clause, msg, e.loc});
    }

    void bind(const Binder& b, bool aux) {
        if (b) scope[*b].push_back(aux);
    }
    void unbind(const Binder& b) {
        if (b) scope[*b].pop_back();
    }

    void check_operand(const Expr& parent, const ExprPtr& e, bool aux) {
        if (!is_atom(*e))
            report("anf", "operand is not a value or variable", parent);
        walk(e, aux);
    }

    // counts real impure primitives in real positions of an atomic body
    int count_impure(const ExprPtr& e) {
        if (is_real_impure(e->k)) {
            int n = 1;
            for (auto& k : e->kids) n += count_impure(k);
            return n;
        }
        switch (e->k) {
            case ExprKind::LetAux:
                return count_impure(e->kids[1]);  // rhs is auxiliary
            case ExprKind::Value:
            case ExprKind::Rec:
            case ExprKind::AuxLam:
                return 0;  // deferred bodies do not run in this step
            default: {
                int n = 0;
                for (auto& k : e->kids) n += count_impure(k);
                return n;
            }
        }
    }

    bool contains_kind(const ExprPtr& e, ExprKind k) {
        if (e->k == k) return true;
        for (auto& kid : e->kids)
            if (contains_kind(kid, k)) return true;
        if (e->k == ExprKind::Value) {
            if (auto* rc = e->val.get<std::shared_ptr<const RecClosV>>())
                return contains_kind((*rc)->body, k);
            if (auto* ac = e->val.get<std::shared_ptr<const AuxClosV>>())
                return contains_kind((*ac)->body, k);
        }
        return false;
    }

    void walk(const ExprPtr& ep, bool aux) {
        const Expr& e = *ep;
        if (e.k == ExprKind::NewProph || e.k == ExprKind::ResolveWith) {
            report("prophecy", "prophecy constructs are not supported", e);
            for (auto& k : e.kids) walk(k, aux);
            return;
        }
        if (!aux && is_aux_only(e.k)) {
            report("aux-embedding",
                   "auxiliary construct outside ghost code (only ghost lets embed in real code)",
                   e);
        }
        if (aux && is_real_mutation(e.k)) {
            report("real-write-in-aux", "real-heap write in aux code", e);
        }
        if (aux && e.k == ExprKind::App) {
            report("real-call-in-aux", "real-function application in aux code", e);
        }
        if (aux && e.k == ExprKind::Rec) {
            report("real-call-in-aux", "real function literal in aux code", e);
        }
        if (aux && e.k == ExprKind::LetAux) {
            report("aux-embedding", "nested ghost let inside auxiliary code", e);
        }

        switch (e.k) {
            case ExprKind::Value: {
                if (auto* rc = e.val.get<std::shared_ptr<const RecClosV>>()) {
                    const auto& c = **rc;
                    if (c.aux_params.empty())
                        report("function-shape", "real function without an aux parameter", e);
                    bind(c.self, false);
                    bind(c.param, false);
                    for (auto& a : c.aux_params) bind(a, true);
                    walk(c.body, aux);
                    for (auto& a : c.aux_params) unbind(a);
                    unbind(c.param);
                    unbind(c.self);
                } else if (auto* ac = e.val.get<std::shared_ptr<const AuxClosV>>()) {
                    bind((*ac)->param, true);
                    walk((*ac)->body, true);
                    unbind((*ac)->param);
                }
                return;
            }
            case ExprKind::Var: {
                auto it = scope.find(e.var);
                if (it != scope.end() && !it->second.empty() && it->second.back() && !aux)
                    report("aux-var-escape", "aux variable '" + e.var + "' escapes to real code",
                           e);
                return;
            }
            case ExprKind::Rec: {
                if (e.aux_binds.empty())
                    report("function-shape", "real function without an aux parameter", e);
                bind(e.self, false);
                bind(e.bind, false);
                for (auto& a : e.aux_binds) bind(a, true);
                walk(e.kids[0], false);
                for (auto& a : e.aux_binds) unbind(a);
                unbind(e.bind);
                unbind(e.self);
                return;
            }
            case ExprKind::AuxLam:
                bind(e.bind, true);
                walk(e.kids[0], true);
                unbind(e.bind);
                return;
            case ExprKind::App:
                check_operand(e, e.kids[0], aux);
                check_operand(e, e.kids[1], aux);
                for (std::size_t i = 2; i < e.kids.size(); ++i) walk(e.kids[i], true);
                return;
            case ExprKind::AuxApp:
                check_operand(e, e.kids[0], true);
                check_operand(e, e.kids[1], true);
                return;
            case ExprKind::Let:
                walk(e.kids[0], aux);
                bind(e.bind, aux);
                walk(e.kids[1], aux);
                unbind(e.bind);
                return;
            case ExprKind::LetAux:
                walk(e.kids[0], true);
                bind(e.bind, true);
                walk(e.kids[1], aux);
                unbind(e.bind);
                return;
            case ExprKind::Atomic: {
                int n = count_impure(e.kids[0]);
                if (n != 1)
                    report("atomic-shape",
                           "atomic block holds " + std::to_string(n) +
                               " real impure primitives (need exactly 1)",
                           e);
                if (contains_kind(e.kids[0], ExprKind::Fork))
                    report("atomic-shape", "fork inside an atomic block", e);
                if (contains_kind(e.kids[0], ExprKind::Atomic))
                    report("atomic-shape", "nested atomic block", e);
                walk(e.kids[0], aux);
                return;
            }
            case ExprKind::Fork: {
                // transfer list: a pair-encoded spine of atoms, auxiliary position
                ExprPtr cur = e.kids[0];
                while (cur->k == ExprKind::Pair) {
                    check_operand(*cur, cur->kids[0], true);
                    cur = cur->kids[1];
                }
                if (!(cur->k == ExprKind::Value && cur->val.is_unit()) && !is_atom(*cur))
                    report("anf", "fork transfer list is not a list of atoms", e);
                else if (cur->k != ExprKind::Value || !cur->val.is_unit())
                    walk(cur, true);
                walk(e.kids[1], aux);
                return;
            }
            case ExprKind::If:
                // conditions may be one flat operation (the !=, not and &&
                // sugar produce these); nesting below is still atom-checked
                walk(e.kids[0], aux);
                walk(e.kids[1], aux);
                walk(e.kids[2], aux);
                return;
            case ExprKind::Match:
                walk(e.kids[0], aux);
                walk(e.kids[1], aux);
                walk(e.kids[2], aux);
                return;
            case ExprKind::Lower:
                check_operand(e, e.kids[0], aux);
                check_operand(e, e.kids[1], aux);
                return;
            case ExprKind::UnaryOp:
            case ExprKind::BinaryOp:
            case ExprKind::Pair:
            case ExprKind::Fst:
            case ExprKind::Snd:
            case ExprKind::Inl:
            case ExprKind::Inr:
            case ExprKind::AllocN:
            case ExprKind::AllocA:
            case ExprKind::Free:
            case ExprKind::Load:
            case ExprKind::LoadA:
            case ExprKind::Store:
            case ExprKind::StoreA:
            case ExprKind::CmpXchg:
            case ExprKind::Xchg:
            case ExprKind::Faa:
            case ExprKind::NewSignal:
            case ExprKind::SetSignal:
            case ExprKind::NewExpectPerm:
            case ExprKind::Expect:
                for (auto& k : e.kids) check_operand(e, k, aux);
                return;
            default:
                for (auto& k : e.kids) walk(k, aux);
                return;
        }
    }
};

}  // namespace

DisciplineReport check_aux_discipline(const ExprPtr& main) {
    DisciplineReport r;
    Checker c;
    c.out = &r.violations;
    c.walk(main, false);
    return r;
}

DisciplineReport check_aux_discipline(const Prog& p) { return check_aux_discipline(p.main); }

}  // namespace hlt
