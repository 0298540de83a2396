#include "hlt/semantics.hpp"

#include "hlt/pretty.hpp"

namespace hlt {

const char* stuck_kind_name(StuckKind k) {
    switch (k) {
        case StuckKind::MissingCallPerm: return "MissingCallPerm";
        case StuckKind::UnfulfilledObligations: return "UnfulfilledObligations";
        case StuckKind::ExpectWithoutPermission: return "ExpectWithoutPermission";
        case StuckKind::ExpectOnSetSignal: return "ExpectOnSetSignal";
        case StuckKind::LevelNotBelowObligations: return "LevelNotBelowObligations";
        case StuckKind::TargetThreadFinished: return "TargetThreadFinished";
        case StuckKind::ObligationNotHeld: return "ObligationNotHeld";
        case StuckKind::SignalUnallocated: return "SignalUnallocated";
        case StuckKind::DegreeNotLower: return "DegreeNotLower";
        case StuckKind::UnsafeValueCompare: return "UnsafeValueCompare";
        case StuckKind::HeapFault: return "HeapFault";
        case StuckKind::AuxHeapFault: return "AuxHeapFault";
        case StuckKind::NoRuleApplies: return "NoRuleApplies";
        case StuckKind::AtomicBudgetExceeded: return "AtomicBudgetExceeded";
        case StuckKind::ForkInAtomic: return "ForkInAtomic";
        case StuckKind::UnsupportedProphecy: return "UnsupportedProphecy";
    }
    return "?";
}

std::string StuckReason::to_string() const {
    std::string s = stuck_kind_name(kind);
    s += " (tid " + std::to_string(tid);
    if (!detail.empty()) s += ": " + detail;
    s += ")";
    return s;
}

// ---------------------------------------------------------------------------
// value comparison

namespace {

bool lit_compare_safe(const Val& v) {
    return v.get<IntV>() || v.get<BoolV>() || v.get<UnitV>() || v.get<LocV>() || v.get<SigV>();
}

bool val_compare_safe(const Val& v) {
    if (lit_compare_safe(v)) return true;
    if (auto* inj = v.get<InjV>()) return lit_compare_safe(*inj->payload);
    return false;
}

}  // namespace

ValEq value_eq(const Val& a, const Val& b) {
    if (!val_compare_safe(a) && !val_compare_safe(b)) return ValEq::Unsafe;
    return val_equal(a, b) ? ValEq::True : ValEq::False;
}

// ---------------------------------------------------------------------------
// decomposition

namespace {

ExprPtr replace_kid(const ExprPtr& e, std::size_t i, ExprPtr nk) {
    auto ne = std::make_shared<Expr>(*e);
    ne->kids[i] = std::move(nk);
    return ne;
}

// Context child indices in evaluation order (right-to-left where the context
// grammar fills later operands first). Returns empty for head redexes.
std::vector<std::size_t> context_slots(const Expr& e) {
    switch (e.k) {
        case ExprKind::App: return {1, 0};  // (e K) then (K v); aux args are big-stepped
        case ExprKind::AuxApp: return {0};
        case ExprKind::UnaryOp: return {0};
        case ExprKind::BinaryOp: return {1, 0};
        case ExprKind::If: return {0};
        case ExprKind::Pair: return {1, 0};
        case ExprKind::Fst:
        case ExprKind::Snd:
        case ExprKind::Inl:
        case ExprKind::Inr: return {0};
        case ExprKind::Match: return {0};
        case ExprKind::Let: return {0};
        case ExprKind::AllocN:
        case ExprKind::AllocA: return {1, 0};
        case ExprKind::Free:
        case ExprKind::Load:
        case ExprKind::LoadA: return {0};
        case ExprKind::Store:
        case ExprKind::StoreA: return {1, 0};
        case ExprKind::CmpXchg: return {2, 1, 0};
        case ExprKind::Xchg:
        case ExprKind::Faa: return {1, 0};
        case ExprKind::Fork: return {0};  // the auxiliary transfer slot
        case ExprKind::NewSignal: return {0};
        case ExprKind::SetSignal: return {1, 0};
        case ExprKind::NewExpectPerm: return {1, 0};
        case ExprKind::Expect: return {1, 0};
        case ExprKind::Lower: return {1, 0};  // `at` thread, then the count
        default: return {};
    }
}

}  // namespace

std::optional<Decomp> decompose(const ExprPtr& e) {
    if (is_value(e)) return std::nullopt;
    for (std::size_t slot : context_slots(*e)) {
        if (is_value(e->kids[slot])) continue;
        auto sub = decompose(e->kids[slot]);
        // non-value always decomposes (possibly to itself)
        Decomp d;
        d.redex = sub->redex;
        bool fork_slot = (e->k == ExprKind::Fork && slot == 0);
        d.in_fork_aux = sub->in_fork_aux || fork_slot;
        ExprPtr base = e;
        auto inner = sub->plug;
        d.plug = [base, slot, inner](ExprPtr r) { return replace_kid(base, slot, inner(r)); };
        return d;
    }
    Decomp d;
    d.redex = e;
    d.plug = [](ExprPtr r) { return r; };
    return d;
}

// ---------------------------------------------------------------------------
// head steps

namespace {

StuckReason stuck(StuckKind k, Tid t, std::string detail = "") {
    return StuckReason{k, t, std::move(detail)};
}

const Val& as_val(const ExprPtr& e) { return e->val; }

std::optional<Tid> as_tid(const Val& v) {
    if (auto* i = v.get<IntV>()) {
        if (i->v >= 1) return i->v;
    }
    return std::nullopt;
}

std::vector<Level> obligation_levels(const MachineState& s, Tid t) {
    std::vector<Level> out;
    auto it = s.obligations.find(t);
    if (it == s.obligations.end() || it->second.finished) return out;
    for (auto& [sl, k] : it->second.entries)
        for (std::uint64_t i = 0; i < k; ++i) out.push_back(sl.second);
    return out;
}

bool expect_perm_held(const ExpectPerms& ep, Sig s, const Degree& d) {
    auto it = ep.find({s, d});
    return it != ep.end() && it->second > 0;
}

struct AuxEval {
    bool ok = false;
    Val value;
    BigstepResult raw;
};

AuxEval eval_aux(const Engine& eng, MachineState& sigma, Tid tid, const ExprPtr& e,
                 std::uint64_t& budget) {
    AuxEval r;
    r.raw = bigstep(eng, sigma, tid, e, budget);
    if (r.raw.kind == BigstepResult::Kind::Value) {
        r.ok = true;
        r.value = r.raw.value;
    }
    return r;
}

StepOutcome propagate_aux_failure(const BigstepResult& r) {
    if (r.kind == BigstepResult::Kind::Aborted) return StepOutcome::aborted();
    if (r.kind == BigstepResult::Kind::BudgetExceeded)
        return StepOutcome::stuck_with(
            StuckReason{StuckKind::AtomicBudgetExceeded, 0, "big-step budget exhausted"});
    return StepOutcome::stuck_with(r.stuck);
}

StepOutcome step_beta(const Engine& eng, MachineState& sigma, Tid tid, const ExprPtr& redex,
                      std::uint64_t& budget) {
    auto* clos = as_val(redex->kids[0]).get<std::shared_ptr<const RecClosV>>();
    if (!clos)
        return StepOutcome::stuck_with(
            stuck(StuckKind::NoRuleApplies, tid, "application of a non-function"));
    const RecClosV& c = **clos;
    std::size_t n_aux = redex->kids.size() - 2;
    if (c.aux_params.size() != n_aux)
        return StepOutcome::stuck_with(stuck(
            StuckKind::NoRuleApplies, tid,
            "auxiliary argument count " + std::to_string(n_aux) + " does not match function"));

    if (!eng.mode.plain) {
        auto& cp = sigma.call_perms[tid];
        if (cp.count(Degree::d0()) > 0) {
            cp.remove(Degree::d0());
        } else if (!eng.mode.strict_beta && !cp.empty()) {
            // implicit lowering: consume one strictly positive permission
            Degree smallest = cp.elems().begin()->first;
            cp.remove(smallest);
        } else {
            return StepOutcome::stuck_with(
                stuck(StuckKind::MissingCallPerm, tid, "no call permission for BetaS"));
        }
    }

    ExprPtr body = c.body;
    body = substitute(body, c.self, Val(*clos));
    body = substitute(body, c.param, as_val(redex->kids[1]));
    for (std::size_t i = 0; i < n_aux; ++i) {
        AuxEval av = eval_aux(eng, sigma, tid, redex->kids[2 + i], budget);
        if (!av.ok) return propagate_aux_failure(av.raw);
        body = substitute(body, c.aux_params[i], av.value);
    }
    return StepOutcome::reduced(body, "BetaS");
}

StepOutcome step_fork(const Engine& eng, MachineState& sigma, Tid tid, const ExprPtr& redex) {
    (void)eng;
    // destructure the pair-encoded transfer list
    std::vector<Sig> transfer;
    const Val* cur = &as_val(redex->kids[0]);
    while (true) {
        if (cur->get<UnitV>()) break;
        auto* p = cur->get<PairV>();
        if (!p)
            return StepOutcome::stuck_with(
                stuck(StuckKind::NoRuleApplies, tid, "fork transfer list is not a signal list"));
        auto* s = p->fst->get<SigV>();
        if (!s)
            return StepOutcome::stuck_with(
                stuck(StuckKind::NoRuleApplies, tid, "fork transfer list element is not a signal"));
        transfer.push_back(s->sig);
        cur = p->snd.get();
    }

    Tid child = 1;
    for (auto& [t, _] : sigma.obligations)
        if (t >= child) child = t + 1;

    auto& parent_obl = sigma.obligations[tid];
    Obligations child_obl;
    for (Sig s : transfer) {
        auto sit = sigma.signals.find(s);
        if (sit == sigma.signals.end())
            return StepOutcome::stuck_with(stuck(StuckKind::ObligationNotHeld, tid,
                                                 "signal " + std::to_string(s) + " unallocated"));
        if (!parent_obl.remove(s, sit->second.level))
            return StepOutcome::stuck_with(
                stuck(StuckKind::ObligationNotHeld, tid,
                      "signal " + std::to_string(s) + " is not held by the forking thread"));
        child_obl.add(s, sit->second.level);
    }
    sigma.obligations[child] = std::move(child_obl);
    sigma.call_perms[child] = sigma.call_perms[tid];
    sigma.expect_perms[child] = sigma.expect_perms[tid];

    StepOutcome o = StepOutcome::reduced(mk_unit(), "ForkS");
    o.forks.emplace_back(child, mk_seq(redex->kids[1], mk(ExprKind::Finish)));
    return o;
}

StepOutcome step_ghost(const Engine& eng, MachineState& sigma, Tid tid, const ExprPtr& redex) {
    if (eng.mode.plain)
        return StepOutcome::stuck_with(
            stuck(StuckKind::NoRuleApplies, tid, "auxiliary construct in the plain dialect"));
    switch (redex->k) {
        case ExprKind::NewSignal: {
            auto target = as_tid(as_val(redex->kids[0]));
            if (!target || !sigma.thread_known(*target))
                return StepOutcome::stuck_with(
                    stuck(StuckKind::TargetThreadFinished, tid, "NewSignal target is not a live thread"));
            if (sigma.obligations[*target].finished)
                return StepOutcome::stuck_with(stuck(StuckKind::TargetThreadFinished, tid,
                                                     "NewSignal target already finished"));
            Sig s = sigma.alloc_signal(*target);
            sigma.signals[s] = SignalState{redex->lev, false};
            sigma.obligations[*target].add(s, redex->lev);
            return StepOutcome::reduced(mk_val(Val::sig(s)), "NewSignalS");
        }
        case ExprKind::SetSignal: {
            auto target = as_tid(as_val(redex->kids[0]));
            auto* sv = as_val(redex->kids[1]).get<SigV>();
            if (!target || !sv)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "SetSignal operands"));
            auto sit = sigma.signals.find(sv->sig);
            if (sit == sigma.signals.end())
                return StepOutcome::stuck_with(stuck(StuckKind::SignalUnallocated, tid,
                                                     "signal " + std::to_string(sv->sig)));
            if (!sigma.thread_known(*target) || sigma.obligations[*target].finished)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::TargetThreadFinished, tid, "SetSignal target"));
            if (!sigma.obligations[*target].remove(sv->sig, sit->second.level))
                return StepOutcome::stuck_with(
                    stuck(StuckKind::ObligationNotHeld, tid,
                          "signal " + std::to_string(sv->sig) + " not an obligation of thread " +
                              std::to_string(*target)));
            sit->second.set = true;
            if (eng.events) eng.events->signals_set.push_back(sv->sig);
            return StepOutcome::reduced(mk_unit(), "SetSignalS");
        }
        case ExprKind::NewExpectPerm: {
            auto target = as_tid(as_val(redex->kids[0]));
            auto* sv = as_val(redex->kids[1]).get<SigV>();
            if (!target || !sv || !sigma.thread_known(*target))
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "NewExpectPerm operands"));
            if (!sigma.signals.count(sv->sig))
                return StepOutcome::stuck_with(stuck(StuckKind::SignalUnallocated, tid,
                                                     "signal " + std::to_string(sv->sig)));
            auto& cp = sigma.call_perms[*target];
            if (cp.count(redex->deg) == 0)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::MissingCallPerm, *target,
                          "no call permission of degree " + redex->deg.to_string()));
            if (compare(eng.degrees, redex->deg2, redex->deg) != Cmp::LT)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::DegreeNotLower, tid,
                          redex->deg2.to_string() + " not below " + redex->deg.to_string()));
            cp.remove(redex->deg);
            sigma.expect_perms[*target][{sv->sig, redex->deg2}]++;
            return StepOutcome::reduced(mk_unit(), "NewExpectPermS");
        }
        case ExprKind::Expect: {
            auto target = as_tid(as_val(redex->kids[0]));
            auto* sv = as_val(redex->kids[1]).get<SigV>();
            if (!target || !sv || !sigma.thread_known(*target))
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "Expect operands"));
            auto sit = sigma.signals.find(sv->sig);
            if (sit == sigma.signals.end())
                return StepOutcome::stuck_with(stuck(StuckKind::SignalUnallocated, tid,
                                                     "signal " + std::to_string(sv->sig)));
            if (sit->second.set)
                return StepOutcome::stuck_with(stuck(StuckKind::ExpectOnSetSignal, tid,
                                                     "signal " + std::to_string(sv->sig)));
            if (!level_below_all(eng.levels, sit->second.level,
                                 obligation_levels(sigma, *target)))
                return StepOutcome::stuck_with(
                    stuck(StuckKind::LevelNotBelowObligations, *target,
                          "level " + sit->second.level.to_string() +
                              " not below the thread's obligations"));
            if (!eng.mode.unsound_expect &&
                !expect_perm_held(sigma.expect_perms[*target], sv->sig, redex->deg))
                return StepOutcome::stuck_with(
                    stuck(StuckKind::ExpectWithoutPermission, *target,
                          "no expect permission for (" + std::to_string(sv->sig) + ", " +
                              redex->deg.to_string() + ")"));
            sigma.call_perms[*target].add(redex->deg);
            if (eng.events) eng.events->expects.push_back(ExpectEvent{*target, sv->sig, redex->deg});
            return StepOutcome::reduced(mk_unit(),
                                        eng.mode.unsound_expect ? "UnsoundExpect" : "ExpectS");
        }
        case ExprKind::Lower: {
            auto* nv = as_val(redex->kids[0]).get<IntV>();
            auto target = as_tid(as_val(redex->kids[1]));
            if (!nv || nv->v < 0 || !target || !sigma.thread_known(*target))
                return StepOutcome::stuck_with(stuck(StuckKind::NoRuleApplies, tid, "lower operands"));
            auto& cp = sigma.call_perms[*target];
            if (cp.count(redex->deg) == 0)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::MissingCallPerm, *target,
                          "no call permission of degree " + redex->deg.to_string()));
            if (compare(eng.degrees, redex->deg2, redex->deg) != Cmp::LT)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::DegreeNotLower, tid,
                          redex->deg2.to_string() + " not below " + redex->deg.to_string()));
            cp.remove(redex->deg);
            cp.add(redex->deg2, static_cast<std::uint64_t>(nv->v));
            return StepOutcome::reduced(mk_unit(), "LowerS");
        }
        case ExprKind::CurrentThread:
            return StepOutcome::reduced(mk_int(tid), "CurrentThreadS");
        default:
            return StepOutcome::stuck_with(stuck(StuckKind::NoRuleApplies, tid, "ghost op"));
    }
}

HeapEvent heap_event(bool write, Tid tid, Loc loc, const Val& oldv, const Val& newv) {
    HeapEvent ev;
    ev.write = write;
    ev.tid = tid;
    ev.loc = loc;
    if (auto* i = oldv.get<IntV>()) ev.old_int = i->v;
    if (auto* b = oldv.get<BoolV>()) ev.old_int = b->v ? 1 : 0;
    if (auto* i = newv.get<IntV>()) ev.new_int = i->v;
    if (auto* b = newv.get<BoolV>()) ev.new_int = b->v ? 1 : 0;
    return ev;
}

StepOutcome step_heap(const Engine& eng, MachineState& sigma, Tid tid, const ExprPtr& redex) {
    switch (redex->k) {
        case ExprKind::AllocN: {
            auto* n = as_val(redex->kids[0]).get<IntV>();
            if (!n || n->v <= 0)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "AllocN needs a positive count"));
            Loc base = sigma.next_loc;
            for (std::int64_t i = 0; i < n->v; ++i) {
                sigma.heap[base + i] = as_val(redex->kids[1]);
                // real allocation claims the auxiliary shadow cells as well
                if (!eng.mode.plain) sigma.aux_heap[base + i] = Val::integer(0);
            }
            sigma.next_loc += n->v;
            return StepOutcome::reduced(mk_val(Val::loc(base)), "AllocN");
        }
        case ExprKind::AllocA: {
            auto* n = as_val(redex->kids[0]).get<IntV>();
            if (!n || n->v <= 0)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "allocg needs a positive count"));
            if (eng.mode.plain)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "auxiliary construct in the plain dialect"));
            Loc base = sigma.alloc_aux(tid, n->v);
            for (std::int64_t i = 0; i < n->v; ++i) sigma.aux_heap[base + i] = as_val(redex->kids[1]);
            return StepOutcome::reduced(mk_val(Val::loc(base)), "AllocA");
        }
        case ExprKind::Free: {
            auto* l = as_val(redex->kids[0]).get<LocV>();
            if (!l || !sigma.heap.count(l->loc))
                return StepOutcome::stuck_with(stuck(StuckKind::HeapFault, tid, "Free"));
            sigma.heap.erase(l->loc);
            sigma.aux_heap.erase(l->loc);
            return StepOutcome::reduced(mk_unit(), "Free");
        }
        case ExprKind::Load: {
            auto* l = as_val(redex->kids[0]).get<LocV>();
            if (!l) return StepOutcome::stuck_with(stuck(StuckKind::HeapFault, tid, "load of a non-location"));
            auto it = sigma.heap.find(l->loc);
            if (it == sigma.heap.end())
                return StepOutcome::stuck_with(
                    stuck(StuckKind::HeapFault, tid, "load of unallocated " + std::to_string(l->loc)));
            if (eng.events) eng.events->heap.push_back(heap_event(false, tid, l->loc, it->second, it->second));
            return StepOutcome::reduced(mk_val(it->second), "HeapLoad");
        }
        case ExprKind::Store: {
            auto* l = as_val(redex->kids[0]).get<LocV>();
            if (!l) return StepOutcome::stuck_with(stuck(StuckKind::HeapFault, tid, "store to a non-location"));
            auto it = sigma.heap.find(l->loc);
            if (it == sigma.heap.end())
                return StepOutcome::stuck_with(
                    stuck(StuckKind::HeapFault, tid, "store to unallocated " + std::to_string(l->loc)));
            if (eng.events)
                eng.events->heap.push_back(heap_event(true, tid, l->loc, it->second, as_val(redex->kids[1])));
            it->second = as_val(redex->kids[1]);
            return StepOutcome::reduced(mk_unit(), "HeapStore");
        }
        case ExprKind::LoadA: {
            auto* l = as_val(redex->kids[0]).get<LocV>();
            if (eng.mode.plain)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "auxiliary construct in the plain dialect"));
            if (!l || !sigma.aux_heap.count(l->loc))
                return StepOutcome::stuck_with(stuck(StuckKind::AuxHeapFault, tid, "aux load"));
            return StepOutcome::reduced(mk_val(sigma.aux_heap[l->loc]), "AuxLoad");
        }
        case ExprKind::StoreA: {
            auto* l = as_val(redex->kids[0]).get<LocV>();
            if (eng.mode.plain)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "auxiliary construct in the plain dialect"));
            if (!l || !sigma.aux_heap.count(l->loc))
                return StepOutcome::stuck_with(stuck(StuckKind::AuxHeapFault, tid, "aux store"));
            sigma.aux_heap[l->loc] = as_val(redex->kids[1]);
            return StepOutcome::reduced(mk_unit(), "AuxStore");
        }
        case ExprKind::CmpXchg: {
            auto* l = as_val(redex->kids[0]).get<LocV>();
            if (!l) return StepOutcome::stuck_with(stuck(StuckKind::HeapFault, tid, "CmpXchg"));
            auto it = sigma.heap.find(l->loc);
            if (it == sigma.heap.end())
                return StepOutcome::stuck_with(stuck(StuckKind::HeapFault, tid, "CmpXchg"));
            ValEq eq = value_eq(it->second, as_val(redex->kids[1]));
            if (eq == ValEq::Unsafe)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::UnsafeValueCompare, tid, "CmpXchg on compare-unsafe values"));
            Val old = it->second;
            if (eq == ValEq::True) it->second = as_val(redex->kids[2]);
            if (eng.events)
                eng.events->heap.push_back(
                    heap_event(eq == ValEq::True, tid, l->loc, old, it->second));
            return StepOutcome::reduced(
                mk_val(Val::pair(old, Val::boolean(eq == ValEq::True))), "CmpXchg");
        }
        case ExprKind::Xchg: {
            auto* l = as_val(redex->kids[0]).get<LocV>();
            if (!l) return StepOutcome::stuck_with(stuck(StuckKind::HeapFault, tid, "Xchg"));
            auto it = sigma.heap.find(l->loc);
            if (it == sigma.heap.end())
                return StepOutcome::stuck_with(stuck(StuckKind::HeapFault, tid, "Xchg"));
            Val old = it->second;
            it->second = as_val(redex->kids[1]);
            if (eng.events) eng.events->heap.push_back(heap_event(true, tid, l->loc, old, it->second));
            return StepOutcome::reduced(mk_val(old), "Xchg");
        }
        case ExprKind::Faa: {
            auto* l = as_val(redex->kids[0]).get<LocV>();
            auto* d = as_val(redex->kids[1]).get<IntV>();
            if (!l || !d)
                return StepOutcome::stuck_with(stuck(StuckKind::NoRuleApplies, tid, "FAA operands"));
            auto it = sigma.heap.find(l->loc);
            if (it == sigma.heap.end())
                return StepOutcome::stuck_with(stuck(StuckKind::HeapFault, tid, "FAA"));
            auto* old = it->second.get<IntV>();
            if (!old)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "FAA on a non-integer cell"));
            std::int64_t prev = old->v;
            it->second = Val::integer(prev + d->v);
            if (eng.events)
                eng.events->heap.push_back(
                    heap_event(true, tid, l->loc, Val::integer(prev), it->second));
            return StepOutcome::reduced(mk_int(prev), "FAA");
        }
        default:
            return StepOutcome::stuck_with(stuck(StuckKind::NoRuleApplies, tid, "heap op"));
    }
}

StepOutcome step_pure(const Engine& eng, MachineState&, Tid tid, const ExprPtr& redex) {
    switch (redex->k) {
        case ExprKind::Rec: {
            auto c = std::make_shared<RecClosV>();
            c->self = redex->self;
            c->param = redex->bind;
            c->aux_params = redex->aux_binds;
            c->body = redex->kids[0];
            return StepOutcome::reduced(mk_val(Val(std::shared_ptr<const RecClosV>(c))), "Pure");
        }
        case ExprKind::AuxLam: {
            auto c = std::make_shared<AuxClosV>();
            c->param = redex->bind;
            c->body = redex->kids[0];
            return StepOutcome::reduced(mk_val(Val(std::shared_ptr<const AuxClosV>(c))), "Pure");
        }
        case ExprKind::Pair:
            return StepOutcome::reduced(
                mk_val(Val::pair(as_val(redex->kids[0]), as_val(redex->kids[1]))), "Pure");
        case ExprKind::Inl:
            return StepOutcome::reduced(mk_val(Val::inj(false, as_val(redex->kids[0]))), "Pure");
        case ExprKind::Inr:
            return StepOutcome::reduced(mk_val(Val::inj(true, as_val(redex->kids[0]))), "Pure");
        case ExprKind::UnaryOp: {
            auto* i = as_val(redex->kids[0]).get<IntV>();
            if (!i)
                return StepOutcome::stuck_with(stuck(StuckKind::NoRuleApplies, tid, "negation"));
            return StepOutcome::reduced(mk_int(-i->v), "Pure");
        }
        case ExprKind::BinaryOp: {
            const Val& a = as_val(redex->kids[0]);
            const Val& b = as_val(redex->kids[1]);
            switch (redex->bin) {
                case BinOp::Eq: {
                    ValEq eq = value_eq(a, b);
                    if (eq == ValEq::Unsafe)
                        return StepOutcome::stuck_with(stuck(StuckKind::UnsafeValueCompare, tid,
                                                             "= on compare-unsafe values"));
                    return StepOutcome::reduced(mk_bool(eq == ValEq::True), "Pure");
                }
                case BinOp::PtrAdd: {
                    auto* l = a.get<LocV>();
                    auto* z = b.get<IntV>();
                    if (!l || !z)
                        return StepOutcome::stuck_with(
                            stuck(StuckKind::NoRuleApplies, tid, "pointer offset"));
                    return StepOutcome::reduced(mk_val(Val::loc(l->loc + z->v)), "Pure");
                }
                default: {
                    auto* x = a.get<IntV>();
                    auto* y = b.get<IntV>();
                    if (!x || !y)
                        return StepOutcome::stuck_with(
                            stuck(StuckKind::NoRuleApplies, tid, "arithmetic on non-integers"));
                    switch (redex->bin) {
                        case BinOp::Add: return StepOutcome::reduced(mk_int(x->v + y->v), "Pure");
                        case BinOp::Sub: return StepOutcome::reduced(mk_int(x->v - y->v), "Pure");
                        case BinOp::Rem:
                            if (y->v == 0)
                                return StepOutcome::stuck_with(
                                    stuck(StuckKind::NoRuleApplies, tid, "remainder by zero"));
                            return StepOutcome::reduced(mk_int(x->v % y->v), "Pure");
                        case BinOp::Lt: return StepOutcome::reduced(mk_bool(x->v < y->v), "Pure");
                        case BinOp::Le: return StepOutcome::reduced(mk_bool(x->v <= y->v), "Pure");
                        default: break;
                    }
                }
            }
            return StepOutcome::stuck_with(stuck(StuckKind::NoRuleApplies, tid, "binary op"));
        }
        case ExprKind::If: {
            auto* b = as_val(redex->kids[0]).get<BoolV>();
            if (!b)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "if on a non-boolean"));
            return StepOutcome::reduced(redex->kids[b->v ? 1 : 2], "Pure");
        }
        case ExprKind::Fst: {
            auto* p = as_val(redex->kids[0]).get<PairV>();
            if (!p) return StepOutcome::stuck_with(stuck(StuckKind::NoRuleApplies, tid, "fst"));
            return StepOutcome::reduced(mk_val(*p->fst), "Pure");
        }
        case ExprKind::Snd: {
            auto* p = as_val(redex->kids[0]).get<PairV>();
            if (!p) return StepOutcome::stuck_with(stuck(StuckKind::NoRuleApplies, tid, "snd"));
            return StepOutcome::reduced(mk_val(*p->snd), "Pure");
        }
        case ExprKind::Match: {
            auto* inj = as_val(redex->kids[0]).get<InjV>();
            if (!inj)
                return StepOutcome::stuck_with(stuck(StuckKind::NoRuleApplies, tid, "match"));
            ExprPtr arm = redex->kids[inj->right ? 2 : 1];
            bool aux_arm = arm->k == ExprKind::AuxLam ||
                           (arm->k == ExprKind::Value &&
                            arm->val.get<std::shared_ptr<const AuxClosV>>() != nullptr);
            if (aux_arm) return StepOutcome::reduced(mk_auxapp(arm, mk_val(*inj->payload)), "Pure");
            return StepOutcome::reduced(mk_app(arm, mk_val(*inj->payload), {mk_unit()}), "Pure");
        }
        case ExprKind::Let:
            return StepOutcome::reduced(substitute(redex->kids[1], redex->bind, as_val(redex->kids[0])),
                                        "LetS");
        case ExprKind::Var:
            return StepOutcome::stuck_with(
                stuck(StuckKind::NoRuleApplies, tid, "free variable " + redex->var));
        default:
            break;
    }
    (void)eng;
    return StepOutcome::stuck_with(stuck(StuckKind::NoRuleApplies, tid, "no pure rule"));
}

}  // namespace

StepOutcome head_step(const Engine& eng, MachineState& sigma, Tid tid, const ExprPtr& redex,
                      std::uint64_t& budget) {
    switch (redex->k) {
        case ExprKind::App:
            if (!is_value(redex->kids[0]) || !is_value(redex->kids[1]))
                return StepOutcome::stuck_with(stuck(StuckKind::NoRuleApplies, tid, "app operands"));
            return step_beta(eng, sigma, tid, redex, budget);
        case ExprKind::AuxApp: {
            if (eng.mode.plain)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "auxiliary construct in the plain dialect"));
            auto* clos = as_val(redex->kids[0]).get<std::shared_ptr<const AuxClosV>>();
            if (!clos)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "auxiliary application of a non-function"));
            AuxEval arg = eval_aux(eng, sigma, tid, redex->kids[1], budget);
            if (!arg.ok) return propagate_aux_failure(arg.raw);
            ExprPtr body = substitute((*clos)->body, (*clos)->param, arg.value);
            AuxEval res = eval_aux(eng, sigma, tid, body, budget);
            if (!res.ok) return propagate_aux_failure(res.raw);
            return StepOutcome::reduced(mk_val(res.value), "AuxApp");
        }
        case ExprKind::LetAux: {
            if (eng.mode.plain)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "auxiliary construct in the plain dialect"));
            AuxEval rhs = eval_aux(eng, sigma, tid, redex->kids[0], budget);
            if (!rhs.ok) return propagate_aux_failure(rhs.raw);
            return StepOutcome::reduced(substitute(redex->kids[1], redex->bind, rhs.value),
                                        "LetAuxS");
        }
        case ExprKind::Atomic: {
            BigstepResult r = bigstep(eng, sigma, tid, redex->kids[0], budget);
            if (r.kind == BigstepResult::Kind::Value)
                return StepOutcome::reduced(mk_val(r.value), "AtomicBlockS");
            return propagate_aux_failure(r);
        }
        case ExprKind::Finish: {
            if (eng.mode.plain) {
                return StepOutcome::reduced(mk_unit(), "FinishS");
            }
            auto& obl = sigma.obligations[tid];
            if (obl.finished)
                return StepOutcome::stuck_with(
                    stuck(StuckKind::NoRuleApplies, tid, "thread already finished"));
            if (!obl.empty()) {
                std::string detail = "unset signals:";
                for (auto& [sl, k] : obl.entries)
                    detail += " " + std::to_string(sl.first) + "x" + std::to_string(k);
                return StepOutcome::stuck_with(stuck(StuckKind::UnfulfilledObligations, tid, detail));
            }
            obl.finished = true;
            return StepOutcome::reduced(mk_unit(), "FinishS");
        }
        case ExprKind::Abort:
            return StepOutcome::aborted();
        case ExprKind::NewProph:
        case ExprKind::ResolveWith:
            return StepOutcome::stuck_with(stuck(StuckKind::UnsupportedProphecy, tid,
                                                 "prophecy variables are not supported"));
        case ExprKind::Fork:
            return step_fork(eng, sigma, tid, redex);
        case ExprKind::NewSignal:
        case ExprKind::SetSignal:
        case ExprKind::NewExpectPerm:
        case ExprKind::Expect:
        case ExprKind::Lower:
        case ExprKind::CurrentThread:
            return step_ghost(eng, sigma, tid, redex);
        case ExprKind::AllocN:
        case ExprKind::AllocA:
        case ExprKind::Free:
        case ExprKind::Load:
        case ExprKind::Store:
        case ExprKind::LoadA:
        case ExprKind::StoreA:
        case ExprKind::CmpXchg:
        case ExprKind::Xchg:
        case ExprKind::Faa:
            return step_heap(eng, sigma, tid, redex);
        default:
            return step_pure(eng, sigma, tid, redex);
    }
}

BigstepResult bigstep(const Engine& eng, MachineState& sigma, Tid tid, const ExprPtr& e,
                      std::uint64_t& budget) {
    ExprPtr cur = e;
    while (true) {
        auto d = decompose(cur);
        if (!d) {
            BigstepResult r;
            r.kind = BigstepResult::Kind::Value;
            r.value = cur->val;
            return r;
        }
        if (d->redex->k == ExprKind::Fork) {
            BigstepResult r;
            r.kind = BigstepResult::Kind::Stuck;
            r.stuck = stuck(StuckKind::ForkInAtomic, tid, "fork inside big-step evaluation");
            return r;
        }
        if (d->redex->k == ExprKind::Atomic) {
            BigstepResult r;
            r.kind = BigstepResult::Kind::Stuck;
            r.stuck = stuck(StuckKind::NoRuleApplies, tid, "nested atomic block");
            return r;
        }
        if (budget == 0) {
            BigstepResult r;
            r.kind = BigstepResult::Kind::BudgetExceeded;
            return r;
        }
        --budget;
        StepOutcome o = head_step(eng, sigma, tid, d->redex, budget);
        if (o.kind == StepOutcome::Kind::Aborted) {
            BigstepResult r;
            r.kind = BigstepResult::Kind::Aborted;
            return r;
        }
        if (o.kind == StepOutcome::Kind::Stuck) {
            BigstepResult r;
            r.kind = BigstepResult::Kind::Stuck;
            r.stuck = o.stuck;
            return r;
        }
        cur = d->plug(o.expr);
    }
}

namespace {

// Cheap rollback point: the signal map only ever grows (fresh ids from the
// counter) or flips unset->set (journalled in the events), so it is restored
// from the watermark plus the set-journal instead of a full copy.
struct StateSnapshot {
    std::map<Loc, Val> heap;
    std::map<Loc, Val> aux_heap;
    std::map<Tid, Obligations> obligations;
    std::map<Tid, DegreeMultiset> call_perms;
    std::map<Tid, ExpectPerms> expect_perms;
    Loc next_loc;
    std::map<Tid, std::int64_t> aux_counters;
    std::map<Tid, std::int64_t> sig_counters;
};

StateSnapshot take_snapshot(const MachineState& s) {
    return StateSnapshot{s.heap,        s.aux_heap, s.obligations, s.call_perms,
                         s.expect_perms, s.next_loc, s.aux_counters, s.sig_counters};
}

void restore_snapshot(MachineState& s, StateSnapshot&& snap, const StepEvents& ev) {
    s.heap = std::move(snap.heap);
    s.aux_heap = std::move(snap.aux_heap);
    s.obligations = std::move(snap.obligations);
    s.call_perms = std::move(snap.call_perms);
    s.expect_perms = std::move(snap.expect_perms);
    s.next_loc = snap.next_loc;
    for (Sig sg : ev.signals_set) {
        auto it = s.signals.find(sg);
        if (it != s.signals.end()) it->second.set = false;
    }
    // drop signals allocated during the failed step
    for (auto& [t, k] : s.sig_counters) {
        std::int64_t old = 0;
        if (auto it = snap.sig_counters.find(t); it != snap.sig_counters.end()) old = it->second;
        for (std::int64_t i = old; i < k; ++i) s.signals.erase(t * MachineState::kSigStride + i);
    }
    s.aux_counters = std::move(snap.aux_counters);
    s.sig_counters = std::move(snap.sig_counters);
}

}  // namespace

MachineOutcome machine_step(Engine& eng, Config& c, Tid tid) {
    MachineOutcome out;
    const ExprPtr* ep = c.pool.find(tid);
    if (!ep) {
        out.kind = MachineOutcome::Kind::Stuck;
        out.stuck = stuck(StuckKind::NoRuleApplies, tid, "no such thread");
        return out;
    }
    if (is_value(*ep)) {
        out.kind = MachineOutcome::Kind::SelectedThreadComplete;
        return out;
    }
    auto d = decompose(*ep);
    out.redex_summary = pretty_print(d->redex);
    if (out.redex_summary.size() > 80) out.redex_summary = out.redex_summary.substr(0, 77) + "...";
    out.aux_position = d->in_fork_aux || d->redex->k == ExprKind::LetAux;

    StepEvents* outer = eng.events;
    eng.events = &out.events;
    StateSnapshot saved = take_snapshot(c.state);
    std::uint64_t budget = eng.mode.atomic_budget;
    StepOutcome o = head_step(eng, c.state, tid, d->redex, budget);
    eng.events = outer;
    switch (o.kind) {
        case StepOutcome::Kind::Stuck:
            restore_snapshot(c.state, std::move(saved), out.events);
            out.events.clear();
            out.kind = MachineOutcome::Kind::Stuck;
            out.stuck = o.stuck;
            if (out.stuck.tid == 0) out.stuck.tid = tid;
            if (d->redex->loc.line > 0)
                out.stuck.detail += " [source " + d->redex->loc.to_string() + "]";
            return out;
        case StepOutcome::Kind::Aborted:
            for (auto& [t, e] : c.pool.threads) e = mk_unit();
            out.kind = MachineOutcome::Kind::Aborted;
            out.rule = o.rule;
            return out;
        case StepOutcome::Kind::Reduced: {
            c.pool.set(tid, d->plug(o.expr));
            for (auto& [child, body] : o.forks) {
                c.pool.threads.emplace_back(child, body);
                out.forked.push_back(child);
            }
            out.kind = MachineOutcome::Kind::Progressed;
            out.rule = o.rule;
            return out;
        }
    }
    return out;
}

}  // namespace hlt
