#include "hlt/erasure.hpp"

#include "hlt/discipline.hpp"
#include "hlt/pretty.hpp"

namespace hlt {

namespace {

bool is_real_atomic_primitive(ExprKind k) {
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

Val erase_val(const Val& v);

ExprPtr erase_rec(const ExprPtr& e) {
    switch (e->k) {
        case ExprKind::LetAux:
            return erase_rec(e->kids[1]);
        case ExprKind::Rec: {
            auto ne = std::make_shared<Expr>(*e);
            ne->aux_binds.assign(e->aux_binds.size(), anon());
            ne->kids = {erase_rec(e->kids[0])};
            return ne;
        }
        case ExprKind::App: {
            std::vector<ExprPtr> kids = {erase_rec(e->kids[0]), erase_rec(e->kids[1])};
            for (std::size_t i = 2; i < e->kids.size(); ++i) kids.push_back(mk_unit());
            return mk(ExprKind::App, std::move(kids));
        }
        case ExprKind::Fork:
            return mk(ExprKind::Fork, {mk_unit(), erase_rec(e->kids[1])});
        case ExprKind::Atomic: {
            ExprPtr body = erase_rec(e->kids[0]);
            if (is_real_atomic_primitive(body->k)) return body;
            // let x = PRIM in x  is the residue of trailing ghost code
            if (body->k == ExprKind::Let && is_real_atomic_primitive(body->kids[0]->k) &&
                body->kids[1]->k == ExprKind::Var && body->bind &&
                body->kids[1]->var == *body->bind)
                return body->kids[0];
            return mk(ExprKind::Atomic, {body});
        }
        case ExprKind::Value:
            return mk_val(erase_val(e->val));
        default: {
            auto ne = std::make_shared<Expr>(*e);
            for (auto& k : ne->kids) k = erase_rec(k);
            return ne;
        }
    }
}

Val erase_val(const Val& v) {
    if (auto* rc = v.get<std::shared_ptr<const RecClosV>>()) {
        auto nc = std::make_shared<RecClosV>(**rc);
        nc->aux_params.assign((*rc)->aux_params.size(), anon());
        nc->body = erase_rec((*rc)->body);
        return Val(std::shared_ptr<const RecClosV>(nc));
    }
    if (auto* p = v.get<PairV>()) return Val::pair(erase_val(*p->fst), erase_val(*p->snd));
    if (auto* inj = v.get<InjV>()) return Val::inj(inj->right, erase_val(*inj->payload));
    return v;
}

}  // namespace

ExprPtr erase_expr(const ExprPtr& e) { return erase_rec(e); }

MachineState erase_state(const MachineState& s) {
    MachineState out;
    out.heap = s.heap;
    out.next_loc = s.next_loc;
    return out;
}

Config erase_config(const Config& c) {
    Config out;
    for (auto& [tid, e] : c.pool.threads) {
        auto rep = check_aux_discipline(e);
        if (!rep.ok())
            throw EraseError("DisciplineViolation in thread " + std::to_string(tid) + ":\n" +
                             rep.to_string());
        out.pool.threads.emplace_back(tid, erase_expr(e));
    }
    out.state = erase_state(c.state);
    for (auto& [tid, _] : c.pool.threads) {
        out.state.obligations[tid] = Obligations{};
        out.state.call_perms[tid] = DegreeMultiset{};
        out.state.expect_perms[tid] = ExpectPerms{};
    }
    return out;
}

Prog erase_prog(const Prog& p) {
    auto rep = check_aux_discipline(p);
    if (!rep.ok()) throw EraseError("DisciplineViolation:\n" + rep.to_string());
    Prog out;
    out.fields = p.fields;
    out.main = erase_expr(p.main);
    return out;
}

// ---------------------------------------------------------------------------
// simulation harness

namespace {

// pool expressions (erased) plus real heap must agree
std::optional<std::string> erased_configs_agree(const Config& erased_instr, const Config& plain) {
    if (erased_instr.pool.threads.size() != plain.pool.threads.size())
        return "thread counts differ";
    for (std::size_t i = 0; i < plain.pool.threads.size(); ++i) {
        auto& [t1, e1] = erased_instr.pool.threads[i];
        auto& [t2, e2] = plain.pool.threads[i];
        if (t1 != t2) return "tid order differs";
        if (!expr_equal(e1, e2))
            return "thread " + std::to_string(t1) + " expressions differ:\n  erased: " +
                   pretty_print(e1) + "\n  plain:  " + pretty_print(e2);
    }
    if (erased_instr.state.heap.size() != plain.state.heap.size()) return "heap sizes differ";
    auto it = plain.state.heap.begin();
    for (auto& [l, v] : erased_instr.state.heap) {
        if (it->first != l || !val_equal(it->second, v))
            return "heap cell " + std::to_string(l) + " differs";
        ++it;
    }
    if (erased_instr.state.next_loc != plain.state.next_loc) return "allocation counters differ";
    return std::nullopt;
}

}  // namespace

SimulationReport check_erasure_simulation(const Prog& p, const Execution& ex) {
    SimulationReport rep;
    Prog erased = erase_prog(p);

    Engine instr_eng(p, ex.mode);
    Engine plain_eng(erased, Mode::plain_mode());

    Config instr = init_config(p);
    Config plain = init_config(erased);

    if (auto err = erased_configs_agree(erase_config(instr), plain)) {
        rep.failure = "initial configurations: " + *err;
        return rep;
    }

    for (std::size_t i = 0; i < ex.steps.size(); ++i) {
        const TraceStep& ts = ex.steps[i];
        Config before = instr;
        MachineOutcome o = machine_step(instr_eng, instr, ts.tid);
        if (o.kind != MachineOutcome::Kind::Progressed &&
            o.kind != MachineOutcome::Kind::Aborted) {
            rep.failure = "instrumented replay diverged at step " + std::to_string(i);
            return rep;
        }
        bool aux = o.aux_position;
        if (aux) {
            rep.aux_steps++;
            // auxiliary steps must not change the erasure
            if (auto err = erased_configs_agree(erase_config(instr), plain)) {
                rep.failure = "aux step " + std::to_string(i) + " changed the erasure: " + *err;
                return rep;
            }
            continue;
        }
        rep.real_steps++;
        MachineOutcome po = machine_step(plain_eng, plain, ts.tid);
        if (o.kind == MachineOutcome::Kind::Aborted) {
            if (po.kind != MachineOutcome::Kind::Aborted) {
                rep.failure = "step " + std::to_string(i) + ": erased program did not abort";
                return rep;
            }
            break;
        }
        if (po.kind != MachineOutcome::Kind::Progressed) {
            rep.failure = "step " + std::to_string(i) + " (" + ts.rule +
                          "): erased program cannot step (" +
                          (po.kind == MachineOutcome::Kind::Stuck ? po.stuck.to_string()
                                                                  : "thread complete") +
                          ")";
            return rep;
        }
        if (auto err = erased_configs_agree(erase_config(instr), plain)) {
            rep.failure = "step " + std::to_string(i) + " (" + ts.rule + "): " + *err;
            return rep;
        }
        (void)before;
    }
    if (ex.status == RunStatus::AllFinished && !plain.pool.all_values()) {
        rep.failure = "instrumented run finished but the erased run did not";
        return rep;
    }
    rep.ok = true;
    return rep;
}

}  // namespace hlt
