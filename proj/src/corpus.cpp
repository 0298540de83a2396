#include "hlt/corpus.hpp"

#include <map>
#include <sstream>

#include "hlt/discipline.hpp"
#include "hlt/parser.hpp"

namespace hlt {

namespace {

// ---------------------------------------------------------------------------
// trace assertions

// critical sections (load ctr .. store ctr) must not overlap, and the final
// counter equals the number of client threads
CorpusEntry::TraceCheck mutex_check(Loc ctr, int n_threads) {
    return [ctr, n_threads](const Execution& ex) -> std::optional<std::string> {
        std::optional<Tid> open;
        for (const auto& ts : ex.steps) {
            for (const auto& ev : ts.heap) {
                if (ev.loc != ctr) continue;
                if (!ev.write) {
                    if (open)
                        return "critical sections overlap: thread " + std::to_string(ev.tid) +
                               " read the counter while thread " + std::to_string(*open) +
                               " was inside";
                    open = ev.tid;
                } else {
                    if (!open || *open != ev.tid)
                        return "counter store outside a critical section by thread " +
                               std::to_string(ev.tid);
                    open.reset();
                }
            }
        }
        auto it = ex.final.state.heap.find(ctr);
        if (it == ex.final.state.heap.end()) return "counter cell missing";
        auto* iv = it->second.get<IntV>();
        if (!iv || iv->v != n_threads)
            return "final counter " + (iv ? std::to_string(iv->v) : "?") + " != " +
                   std::to_string(n_threads);
        return std::nullopt;
    };
}

// lock acquisition order (counter stores) must equal ticket issue order
// (FAA writes on the `next` field)
CorpusEntry::TraceCheck fifo_check(Loc next_field, Loc ctr) {
    return [next_field, ctr](const Execution& ex) -> std::optional<std::string> {
        std::vector<Tid> tickets, sections;
        for (const auto& ts : ex.steps)
            for (const auto& ev : ts.heap) {
                if (ev.write && ev.loc == next_field) tickets.push_back(ev.tid);
                if (ev.write && ev.loc == ctr) sections.push_back(ev.tid);
            }
        if (tickets != sections) {
            std::string a, b;
            for (Tid t : tickets) a += std::to_string(t) + " ";
            for (Tid t : sections) b += std::to_string(t) + " ";
            return "acquisition order [" + b + "] differs from ticket order [" + a + "]";
        }
        return std::nullopt;
    };
}

// consecutive same-cohort critical sections never exceed max+1 (one
// acquisition plus at most max direct handoffs)
CorpusEntry::TraceCheck cohort_run_check(Loc ctr, std::map<Tid, int> cohort_of, int max_handoffs) {
    return [ctr, cohort_of, max_handoffs](const Execution& ex) -> std::optional<std::string> {
        int run = 0;
        int cur_cohort = -1;
        for (const auto& ts : ex.steps)
            for (const auto& ev : ts.heap) {
                if (!ev.write || ev.loc != ctr) continue;
                auto it = cohort_of.find(ev.tid);
                if (it == cohort_of.end()) return "counter store by unknown thread";
                if (it->second == cur_cohort) {
                    ++run;
                } else {
                    cur_cohort = it->second;
                    run = 1;
                }
                if (run > max_handoffs + 1)
                    return "cohort " + std::to_string(cur_cohort) + " held the lock for " +
                           std::to_string(run) + " consecutive sections (MAX=" +
                           std::to_string(max_handoffs) + ")";
            }
        return std::nullopt;
    };
}

// handoff counters stay within MAX
CorpusEntry::TraceCheck handoff_bound_check(Loc handoffs_base, int cohorts, int max_handoffs) {
    return [handoffs_base, cohorts, max_handoffs](const Execution& ex) -> std::optional<std::string> {
        for (const auto& ts : ex.steps)
            for (const auto& ev : ts.heap) {
                if (!ev.write) continue;
                if (ev.loc < handoffs_base || ev.loc >= handoffs_base + cohorts) continue;
                if (ev.new_int && *ev.new_int > max_handoffs)
                    return "handoff counter reached " + std::to_string(*ev.new_int);
            }
        return std::nullopt;
    };
}

// ---------------------------------------------------------------------------
// shared module sources

// The spinlock of Fig. 2(b): the client supplies eta (fuel while blocked)
// and kappa (runs when the CAS takes the lock).
std::string spinlock_module() {
    return R"(let sl_acquire = (rec sl_acquire lk ghost[eta kappa].
  while (let p = atomic { ghost { let held = !lk in if held then eta () else kappa () };
                          CmpXchg(lk, false, true) } in
         let ok = snd p in
         not ok)
  { () }) in
let sl_release = (rec sl_release lk ghost[kappa].
  atomic { ghost { kappa () }; lk := false }) in
)";
}

// Instrumented ticketlock. `prefix` names the instance, `dtl` is the entry
// degree lowered by FAIRNESS into `deta` compensations (one per bypass
// round), `cap` bounds the live ticket window for the kappa slots.
std::string ticketlock_module(const std::string& prefix, const std::string& dtl,
                              const std::string& deta, int cap, bool fairness) {
    std::ostringstream o;
    o << "let " << prefix << "_acquire = (rec " << prefix << "_acquire lk ghost[eta kappa].\n"
      << "  let ow = lk.owner in\n"
      << "  let nx = lk.next in\n"
      << "  let t = atomic {\n"
      << "    ghost {\n"
      << "      let o = !ow in\n"
      << "      let n = !nx in\n"
      << "      let now = n = o in\n"
      << "      if now then kappa ()\n"
      << "      else (\n";
    if (fairness)
        o << "        let k = n - o in\n"
          << "        lower " << dtl << " to k times " << deta << ";\n";
    o << "        let sl = n % " << cap << " in\n"
      << "        let kp = lk.kappas +l sl in\n"
      << "        kp :=g kappa ) };\n"
      << "    FAA(nx, 1) } in\n"
      << "  while atomic {\n"
      << "    ghost { let o = !ow in let mine = o = t in (if mine then () else eta ()) };\n"
      << "    let o2 = !ow in\n"
      << "    o2 != t } { () }) in\n"
      << "let " << prefix << "_release = (rec " << prefix << "_release lk ghost[kappa].\n"
      << "  let ow = lk.owner in\n"
      << "  let nx = lk.next in\n"
      << "  let r = atomic {\n"
      << "    ghost { kappa () };\n"
      << "    let r0 = FAA(ow, 1) in\n"
      << "    ghost {\n"
      << "      let o = !ow in\n"
      << "      let n = !nx in\n"
      << "      let waiters = o < n in\n"
      << "      if waiters then (\n"
      << "        let sl = o % " << cap << " in\n"
      << "        let kp0 = lk.kappas +l sl in\n"
      << "        let kp = !g kp0 in\n"
      << "        kp () )\n"
      << "      else () };\n"
      << "    r0 } in\n"
      << "  ()) in\n"
      << "let " << prefix << "_alone = (rec " << prefix << "_alone lk ghost[_].\n"
      << "  let ow = lk.owner in\n"
      << "  let nx = lk.next in\n"
      << "  let o = !ow in\n"
      << "  let n = !nx in\n"
      << "  let o1 = o + 1 in\n"
      << "  o1 = n) in\n";
    return o.str();
}

// Client-side eta for a ticketlock instance: lazily buys one expect
// permission per observed round for the holder's release signal, then
// expects it. sigs/last are auxiliary cells, me the client's tid.
std::string tl_client_eta(const std::string& me, const std::string& last, int cap,
                          const std::string& dhi, const std::string& dlo) {
    std::ostringstream o;
    o << "(fun _. (\n"
      << "  let rp = lk.owner in\n"
      << "  let r = !rp in\n"
      << "  let lr = !g " << last << " in\n"
      << "  let fresh = r != lr in\n"
      << "  (if fresh then (\n"
      << "     let sl = r % " << cap << " in\n"
      << "     let sp = sigs +l sl in\n"
      << "     let s = !g sp in\n"
      << "     NewExpectPerm " << me << " s " << dhi << " " << dlo << ";\n"
      << "     " << last << " :=g r )\n"
      << "   else ());\n"
      << "  let sl2 = r % " << cap << " in\n"
      << "  let sp2 = sigs +l sl2 in\n"
      << "  let s2 = !g sp2 in\n"
      << "  Expect " << me << " s2 " << dlo << ";\n"
      << "  lower " << dlo << " to 1 times d0 ))";
    return o.str();
}

// acquire-LP kappa: burden myself with the obligation to release, storing
// the round signal under my ticket slot
std::string tl_client_kappa(const std::string& me, int cap, const std::string& lev) {
    std::ostringstream o;
    o << "(fun _. (\n"
      << "  let rp = lk.owner in\n"
      << "  let t = !rp in\n"
      << "  let sl = t % " << cap << " in\n"
      << "  let sp = sigs +l sl in\n"
      << "  let s = NewSignal " << me << " " << lev << " in\n"
      << "  sp :=g s ))";
    return o.str();
}

// release-LP kappa: set my round signal
std::string tl_client_kappa_rel(const std::string& me, int cap) {
    std::ostringstream o;
    o << "(fun _. (\n"
      << "  let rp = lk.owner in\n"
      << "  let t = !rp in\n"
      << "  let sl = t % " << cap << " in\n"
      << "  let sp = sigs +l sl in\n"
      << "  let s = !g sp in\n"
      << "  SetSignal " << me << " s ))";
    return o.str();
}

CorpusEntry make_entry(std::string name, std::string description, std::string source) {
    CorpusEntry e;
    e.name = std::move(name);
    e.description = std::move(description);
    e.source = std::move(source);
    e.prog = parse(e.source);
    return e;
}

}  // namespace

// ---------------------------------------------------------------------------
// flag program (the busy-wait motivating snippet)

namespace {

std::string flag_source(bool with_buy, bool with_set) {
    std::ostringstream o;
    o << "degrees = lexsum(atoms(1), atoms(1))\n"
         "degree dlo = (0, 0)\n"
         "degree dhi = (1, 0)\n"
         "levels = atoms(1)\n"
         "level l0 = 0\n"
         "init_callperms = [dhi, dhi]\n"
         "main =\n"
         "let f = ref true in\n"
         "let ghost s = NewSignal cur l0 in\n";
    if (with_buy) o << "ghost { NewExpectPerm cur s dhi dlo };\n";
    o << "fork [] { while atomic { ghost { let fv = !f in if fv then Expect cur s dlo else () }; "
         "!f } { () } };\n"
         "f := false";
    if (with_set) o << ";\nghost { SetSignal cur s }";
    o << "\n";
    return o.str();
}

}  // namespace

CorpusEntry build_flag_example() {
    CorpusEntry e = make_entry("flag", "busy-wait flag program with one signal and one expect permission",
                               flag_source(true, true));
    e.sound = true;
    e.explore_depth = 200;
    return e;
}

CorpusEntry build_flag_missing_set() {
    CorpusEntry e = make_entry("flag_missing_set",
                               "flag program with the SetSignal removed: the forker finishes "
                               "with an obligation",
                               flag_source(true, false));
    e.expected_stuck = StuckKind::UnfulfilledObligations;
    return e;
}

CorpusEntry build_flag_no_expect_perm() {
    CorpusEntry e = make_entry("flag_noexpectperm",
                               "flag program without NewExpectPerm: the forkee's Expect is bare",
                               flag_source(false, true));
    e.expected_stuck = StuckKind::ExpectWithoutPermission;
    // schedule the forkee eagerly so it expects while the flag is still set
    e.script = record_adversary(e.prog, Mode::sound(), 10000, [](const Config& c) {
        Tid best = 1;
        for (auto& [tid, ex] : c.pool.threads)
            if (!is_value(ex)) best = std::max(best, tid);
        return best;
    });
    return e;
}

// ---------------------------------------------------------------------------
// motivating client (3 threads over the spinlock)

CorpusEntry build_motivating_client() {
    std::ostringstream o;
    o << "degrees = lexsum(atoms(1), atoms(1), atoms(1))\n"
         "degree d3 = (0, 0)\n"
         "degree d2 = (1, 0)\n"
         "degree d1 = (2, 0)\n"
         "levels = lexsum(atoms(1), atoms(1))\n"
         "level l1 = (0, 0)\n"
         "level ltop = (1, 0)\n"
         "init_callperms = [d1, d1, d1]\n"
         "main =\n"
         "ghost { lower d1 to 10 times d0 };\n"
         "ghost { lower d1 to 2 times d2 };\n"
      << spinlock_module()
      << "let lk = ref false in\n"
         "let f = ref true in\n"
         "let ghost l2 = refg 0 in\n"
         "let ghost l3 = refg 0 in\n"
         "let ghost started1 = refg false in\n"
         "let ghost started3 = refg false in\n"
         "ghost let me1 = cur in\n"
         // middle thread: reads the flag once; exits the whole program if the
         // handoff is not ready, otherwise releases the lock on thread 1's behalf
         "fork [] {\n"
         "  let v = !f in\n"
         "  if v then abort\n"
         "  else ( sl_release lk ghost[(fun _. (let me2 = cur in let s = !g l2 in SetSignal me2 "
         "s))] )\n"
         "};\n"
         // right thread: acquires and releases normally, burdening itself
         "fork [] {\n"
         "  ghost let me3 = cur in\n"
         "  sl_acquire lk ghost[\n"
         "    (fun _. (\n"
         "      let st = !g started3 in\n"
         "      (if st then () else (let s = !g l2 in NewExpectPerm me3 s d2 d3; started3 :=g "
         "true));\n"
         "      let s2 = !g l2 in\n"
         "      Expect me3 s2 d3;\n"
         "      lower d3 to 1 times d0 )),\n"
         "    (fun _. (let s = NewSignal me3 l1 in l3 :=g s))];\n"
         "  sl_release lk ghost[(fun _. (let s = !g l3 in SetSignal me3 s))]\n"
         "};\n"
         // left thread (main): acquires, burdening the middle thread instead
         "sl_acquire lk ghost[\n"
         "  (fun _. (\n"
         "    let st = !g started1 in\n"
         "    (if st then () else (let s = !g l3 in NewExpectPerm me1 s d2 d3; started1 :=g "
         "true));\n"
         "    let s3 = !g l3 in\n"
         "    Expect me1 s3 d3;\n"
         "    lower d3 to 1 times d0 )),\n"
         "  (fun _. (let s = NewSignal 2 l1 in l2 :=g s))];\n"
         "f := false\n";
    CorpusEntry e = make_entry("motivating",
                               "3-thread spinlock client with the lock handoff between the left "
                               "and middle thread",
                               o.str());
    e.sound = true;
    e.reconstructed = true;  // thread bodies rebuilt from the figure captions
    // the middle thread exits the whole program when it reads the flag before
    // the handoff is ready, so schedules split between Aborted and AllFinished
    e.may_abort = true;
    e.explore_depth = 400;
    return e;
}

// ---------------------------------------------------------------------------
// ticketlock clients

namespace {

std::string ticketlock_client_source(int n, bool fairness) {
    int cap = n;
    std::ostringstream o;
    o << "degrees = lexsum(lexsum(atoms(2), atoms(1)), atoms(1))\n"
         "degree delo = (0, 0, 0)\n"
         "degree dehi = (0, 0, 1)\n"
         "degree dtl = (0, 1, 0)\n"
         "degree dtop = (1, 0)\n"
         "levels = atoms(1)\n"
         "level lev0 = 0\n"
         "init_callperms = [dtop, dtop]\n"
         "fields owner = 0, next = 1, kappas = 2\n"
         "main =\n"
         "ghost { lower dtop to 8 times d0 };\n"
         "ghost { lower dtop to 1 times dtl };\n"
      << ticketlock_module("tl", "dtl", "dehi", cap, fairness) << "let lk = AllocN(" << 2 + cap
      << ", 0) in\n"
         "let ctr = ref 0 in\n"
         "ghost let sigs = allocg("
      << cap << ", 0) in\n";
    for (int i = 0; i < n; ++i) {
        o << "fork [] {\n"
             "  ghost let me = cur in\n"
             "  ghost let last = refg 1000000 in\n"
             "  tl_acquire lk ghost["
          << tl_client_eta("me", "last", cap, "dehi", "delo") << ",\n"
          << tl_client_kappa("me", cap, "lev0")
          << "];\n"
             "  let c = !ctr in\n"
             "  let c1 = c + 1 in\n"
             "  ctr := c1;\n"
             "  tl_release lk ghost["
          << tl_client_kappa_rel("me", cap) << "]\n};\n";
    }
    o << "()\n";
    return o.str();
}

}  // namespace

CorpusEntry build_ticketlock(int n_threads) {
    CorpusEntry e = make_entry(
        "ticketlock" + std::to_string(n_threads),
        "FIFO ticketlock with " + std::to_string(n_threads) + " acquire-increment-release clients",
        ticketlock_client_source(n_threads, true));
    e.sound = true;
    e.reconstructed = true;  // client glue follows the module listing's contract
    if (n_threads <= 2) e.explore_depth = 400;
    Loc ctr = 2 + n_threads;
    e.trace_checks.push_back(mutex_check(ctr, n_threads));
    e.trace_checks.push_back(fifo_check(1, ctr));
    return e;
}

CorpusEntry build_ticketlock_nofairness(int n_threads) {
    CorpusEntry e = make_entry("ticketlock" + std::to_string(n_threads) + "_nofairness",
                               "ticketlock with the FAIRNESS lowering removed: bypassed waiters "
                               "run out of compensation",
                               ticketlock_client_source(n_threads, false));
    e.expected_stuck = StuckKind::MissingCallPerm;
    e.explore_depth = 400;
    e.reconstructed = true;
    return e;
}


// ---------------------------------------------------------------------------
// distinguishing client (TaDA-Live's fair/unfair separator)

CorpusEntry build_distinguishing_client_ticketlock() {
    int cap = 4;
    std::ostringstream o;
    o << "degrees = lexsum(lexsum(atoms(2), atoms(1)), atoms(3))\n"
         "degree delo = (0, 0, 0)\n"
         "degree dehi = (0, 0, 1)\n"
         "degree dtl = (0, 1, 0)\n"
         "degree dmid = (1, 0)\n"
         "degree diter = (1, 1)\n"
         "degree dtop = (1, 2)\n"
         // round signals live below the done-flag signal: the left thread
         // expects round signals while burdened with setting the flag
         "levels = atoms(2)\n"
         "level lev0 = 0\n"
         "level lev1 = 1\n"
         "init_callperms = [dtop, dtop, dtop]\n"
         "fields owner = 0, next = 1, kappas = 2\n"
         "main =\n"
         "ghost { lower dtop to 14 times d0 };\n"
         "ghost { lower dtop to 1 times dtl };\n"
      << ticketlock_module("tl", "dtl", "dehi", cap, true) << "let lk = AllocN(" << 2 + cap
      << ", 0) in\n"
         "let d = ref false in\n"
         "ghost let sigs = allocg("
      << cap
      << ", 0) in\n"
         "ghost let sd = NewSignal cur lev1 in\n"
         "ghost { NewExpectPerm cur sd dtop diter };\n"
         "ghost let me1 = cur in\n"
         "ghost let last1 = refg 1000000 in\n"
         // right thread: cycles the lock until the flag is set; each blocked
         // flag check converts one expected iteration permission into the
         // budget of a full acquire/release cycle
         "fork [] {\n"
         "  ghost let me2 = cur in\n"
         "  ghost let last2 = refg 1000000 in\n"
         "  while atomic {\n"
         "    ghost { let fv = !d in\n"
         "            if fv then ()\n"
         "            else ( Expect me2 sd diter;\n"
         "                   lower diter to 2 times dmid;\n"
         "                   lower dmid to 1 times dtl;\n"
         "                   lower dmid to 8 times d0 ) };\n"
         "    let g2 = !d in\n"
         "    g2 = false } {\n"
         "    tl_acquire lk ghost["
      << tl_client_eta("me2", "last2", cap, "dehi", "delo") << ",\n"
      << tl_client_kappa("me2", cap, "lev0")
      << "];\n"
         "    tl_release lk ghost["
      << tl_client_kappa_rel("me2", cap)
      << "] }\n"
         "};\n"
         // left thread (main): one acquire, sets the flag, releases
         "tl_acquire lk ghost["
      << tl_client_eta("me1", "last1", cap, "dehi", "delo") << ",\n"
      << tl_client_kappa("me1", cap, "lev0")
      << "];\n"
         "d := true;\n"
         "ghost { SetSignal me1 sd };\n"
         "tl_release lk ghost["
      << tl_client_kappa_rel("me1", cap) << "]\n";
    CorpusEntry e = make_entry("dist_ticketlock",
                               "distinguishing client over the fair ticketlock: the left "
                               "acquire is bypassed at most once",
                               o.str());
    e.sound = true;
    e.reconstructed = true;
    e.explore_depth = 260;
    e.explore_visited = 400000;
    e.explore_may_truncate = true;  // the right thread's loop grows the counters
    return e;
}

CorpusEntry build_distinguishing_client_spinlock() {
    // erased-only demonstration: with an unfair lock the right thread can
    // starve the left one forever
    std::ostringstream o;
    o << "main =\n"
         "let sl_acquire = (rec sl_acquire lk ghost[_ _].\n"
         "  while (let p = CmpXchg(lk, false, true) in\n"
         "         let ok = snd p in\n"
         "         not ok) { () }) in\n"
         "let sl_release = (rec sl_release lk ghost[_]. lk := false) in\n"
         "let lk = ref false in\n"
         "let d = ref false in\n"
         "fork [] {\n"
         "  while (let g2 = !d in g2 = false) {\n"
         "    sl_acquire lk ghost[(), ()];\n"
         "    sl_release lk }\n"
         "};\n"
         "sl_acquire lk ghost[(), ()];\n"
         "d := true;\n"
         "sl_release lk\n";
    CorpusEntry e = make_entry("dist_spinlock_erased",
                               "distinguishing client over the unfair spinlock, plain dialect; "
                               "the recorded schedule starves the left thread",
                               o.str());
    e.mode = Mode::plain_mode();
    e.step_cap = 30000;
    e.reconstructed = true;
    // adversarial schedule: let the left thread step only while the lock is
    // held, so its CAS always fails
    e.script = record_adversary(e.prog, e.mode, e.step_cap, [](const Config& c) {
        bool has2 = c.pool.threads.size() > 1 && !is_value(c.pool.threads[1].second);
        if (!has2) return Tid{1};
        auto it = c.state.heap.find(0);  // lk is the first allocation
        bool held = it != c.state.heap.end() && it->second.is_true();
        return held ? Tid{1} : Tid{2};
    });
    return e;
}

// ---------------------------------------------------------------------------
// cohortlock

CorpusEntry build_cohortlock(int cohorts, int per_cohort, int max_handoffs) {
    const int ct = cohorts;        // top-level ticket window
    const int cl = per_cohort;     // per-cohort ticket window
    const int cc = cohorts * per_cohort;
    const int maxp1 = max_handoffs + 1;

    std::ostringstream o;
    o << "degrees = lexsum(atoms(2), atoms(2), atoms(1), atoms(1), atoms(1), atoms(1))\n"
         "degree cclo = (0, 0)\n"
         "degree cchi = (0, 1)\n"
         "degree lltok = (1, 0)\n"
         "degree lltop = (1, 1)\n"
         "degree tltop = (2, 0)\n"
         "degree dllm = (3, 0)\n"
         "degree dtlm = (4, 0)\n"
         "degree dtop = (5, 0)\n"
         "levels = atoms(2)\n"
         "level levc = 0\n"
         "level levs = 1\n"
         "init_callperms = [dtop, dtop, dtop, dtop]\n"
         "fields owner = 0, next = 1, kappas = 2\n"
         "main =\n"
         "ghost { lower dtop to 12 times d0 };\n"
         "ghost { lower dtop to 1 times dllm };\n"
         "ghost { lower dtop to 1 times dtlm };\n"
      << ticketlock_module("tl", "dtlm", "tltop", ct, true)
      << ticketlock_module("ll", "dllm", "lltop", cl, true);

    // layout
    o << "let tlk = AllocN(" << 2 + ct << ", 0) in\n";
    for (int c = 0; c < cohorts; ++c) o << "let llk" << c << " = AllocN(" << 2 + cl << ", 0) in\n";
    o << "let lls = AllocN(" << cohorts << ", 0) in\n";
    for (int c = 0; c < cohorts; ++c)
        o << "let lsp" << c << " = lls +l " << c << " in lsp" << c << " := llk" << c << ";\n";
    o << "let passing = AllocN(" << cohorts << ", false) in\n"
      << "let handoffs = AllocN(" << cohorts << ", 0) in\n"
      << "let ctr = ref 0 in\n"
      << "ghost let asig = allocg(" << cohorts << ", 0) in\n"
      << "ghost let rsig = allocg(" << cohorts << ", 0) in\n"
      << "ghost let phase = allocg(" << cohorts << ", 0) in\n"
      << "ghost let csigs = allocg(" << cc << ", 0) in\n"
      << "ghost let crnd = refg 0 in\n";

    // cohortlock acquire: take the local lock; either consume a pass of the
    // top-level lock or acquire it
    o << "let co_acquire = (rec co_acquire c ghost[eta_c kappa_c].\n"
         "  ghost let me = cur in\n"
         "  ghost let lastll = refg 1000000 in\n"
         "  ghost let gota = refg 1000000 in\n"
         "  ghost let gotr = refg 1000000 in\n"
         "  ghost let relr = refg 1000000 in\n"
         "  ghost let lasttl = refg 1000000 in\n"
         "  let lp = lls +l c in\n"
         "  let ll = !lp in\n"
         "  let llow = ll.owner in\n"
         "  let pp = passing +l c in\n"
         "  ghost let ap = asig +l c in\n"
         "  ghost let rp = rsig +l c in\n"
         "  ghost let php = phase +l c in\n"
         "  ll_acquire ll ghost[\n"
         // eta for the local lock: the holder is in one of three phases
         "    (fun _. (\n"
         "       let r = !llow in\n"
         "       let lr = !g lastll in\n"
         "       let fresh = r != lr in\n"
         "       (if fresh then (lower lltop to 3 times lltok; lastll :=g r) else ());\n"
         "       let ph = !g php in\n"
         "       let ph0 = ph = 0 in\n"
         "       if ph0 then (\n"
         "         let ga = !g gota in\n"
         "         let need = r != ga in\n"
         "         (if need then (let s = !g ap in NewExpectPerm me s lltok cclo; gota :=g r) "
         "else ());\n"
         "         let s2 = !g ap in\n"
         "         Expect me s2 cclo;\n"
         "         lower cclo to 1 times d0 )\n"
         "       else (\n"
         "         let ph1 = ph = 1 in\n"
         "         if ph1 then (\n"
         "           let rr = !g relr in\n"
         "           let need2 = r != rr in\n"
         "           (if need2 then (lower lltok to 1 times cchi; relr :=g r) else ());\n"
         "           eta_c () )\n"
         "         else (\n"
         "           let gr = !g gotr in\n"
         "           let need3 = r != gr in\n"
         "           (if need3 then (let s3 = !g rp in NewExpectPerm me s3 lltok cclo; gotr :=g "
         "r) else ());\n"
         "           let s4 = !g rp in\n"
         "           Expect me s4 cclo;\n"
         "           lower cclo to 1 times d0 )))),\n"
         // kappa at the local-lock LP: receive a pass (the cohortlock LP) or
         // create the acquire signal
         "    (fun _. (\n"
         "       let pv = !pp in\n"
         "       if pv then (\n"
         "         php :=g 1;\n"
         "         kappa_c () )\n"
         "       else (\n"
         "         php :=g 0;\n"
         "         let s = NewSignal me levs in\n"
         "         ap :=g s )))];\n"
         "  let pv2 = !pp in\n"
         "  if pv2 then ( pp := false )\n"
         "  else (\n"
         "    tl_acquire tlk ghost[\n"
         // eta for the top-level lock: another cohort holds the cohortlock;
         // at most MAX+1 client rounds pass per top-level round
         "      (fun _. (\n"
         "         let tow = tlk.owner in\n"
         "         let r2 = !tow in\n"
         "         let lr2 = !g lasttl in\n"
         "         let fresh2 = r2 != lr2 in\n"
         "         (if fresh2 then (lower tltop to " << maxp1 << " times cchi; lasttl :=g r2) "
         "else ());\n"
         "         eta_c () )),\n"
         // kappa at the top-level LP: discharge the acquire signal, cohortlock LP
         "      (fun _. (\n"
         "         let s5 = !g ap in\n"
         "         SetSignal me s5;\n"
         "         php :=g 1;\n"
         "         kappa_c () ))] )) in\n";

    // cohortlock release
    o << "let co_release = (rec co_release c ghost[kappa_rc].\n"
         "  ghost let me = cur in\n"
         "  let lp = lls +l c in\n"
         "  let ll = !lp in\n"
         "  let hp = handoffs +l c in\n"
         "  let pp = passing +l c in\n"
         "  ghost let rp = rsig +l c in\n"
         "  ghost let php = phase +l c in\n"
         "  let al = ll_alone ll in\n"
         "  let hv = !hp in\n"
         "  let more = hv < " << max_handoffs << " in\n"
         "  let nal = not al in\n"
         "  let pass = nal && more in\n"
         "  if pass then (\n"
         "    let h2 = hv + 1 in\n"
         "    hp := h2;\n"
         "    pp := true;\n"
         "    ll_release ll ghost[(fun _. kappa_rc ())] )\n"
         "  else (\n"
         "    hp := 0;\n"
         "    pp := false;\n"
         "    tl_release tlk ghost[(fun _. (\n"
         "      let s = NewSignal me levs in\n"
         "      rp :=g s;\n"
         "      php :=g 2;\n"
         "      kappa_rc () ))];\n"
         "    ll_release ll ghost[(fun _. (\n"
         "      let s2 = !g rp in\n"
         "      SetSignal me s2 ))] )) in\n";

    // clients: one acquire-increment-release thread per slot
    for (int c = 0; c < cohorts; ++c) {
        for (int p = 0; p < per_cohort; ++p) {
            o << "fork [] {\n"
                 "  ghost let me = cur in\n"
                 "  ghost let lastc = refg 1000000 in\n"
                 "  co_acquire " << c << " ghost[\n"
                 // client eta: expect the current cohortlock round's signal
                 "    (fun _. (\n"
                 "      let cr = !g crnd in\n"
                 "      let lc = !g lastc in\n"
                 "      let sl = cr % " << cc << " in\n"
                 "      let csp = csigs +l sl in\n"
                 "      let cs = !g csp in\n"
                 "      let need = cr != lc in\n"
                 "      (if need then (NewExpectPerm me cs cchi cclo; lastc :=g cr) else ());\n"
                 "      Expect me cs cclo;\n"
                 "      lower cclo to 1 times d0 )),\n"
                 // client kappa at the cohortlock LP: open a round signal
                 "    (fun _. (\n"
                 "      let cr2 = !g crnd in\n"
                 "      let sl2 = cr2 % " << cc << " in\n"
                 "      let csp2 = csigs +l sl2 in\n"
                 "      let cs2 = NewSignal me levc in\n"
                 "      csp2 :=g cs2 ))];\n"
                 "  let x = !ctr in\n"
                 "  let x1 = x + 1 in\n"
                 "  ctr := x1;\n"
                 "  co_release " << c << " ghost[(fun _. (\n"
                 "    let cr3 = !g crnd in\n"
                 "    let sl3 = cr3 % " << cc << " in\n"
                 "    let csp3 = csigs +l sl3 in\n"
                 "    let cs3 = !g csp3 in\n"
                 "    SetSignal me cs3;\n"
                 "    let cr4 = cr3 + 1 in\n"
                 "    crnd :=g cr4 ))]\n"
                 "};\n";
        }
    }
    o << "()\n";

    std::string name = "cohortlock";
    if (per_cohort == 1 && max_handoffs == 1) name = "cohortlock_small";
    CorpusEntry e = make_entry(name,
                               "hierarchical cohortlock over two ticketlock layers (" +
                                   std::to_string(cohorts) + " cohorts x " +
                                   std::to_string(per_cohort) + ", MAX=" +
                                   std::to_string(max_handoffs) + ")",
                               o.str());
    e.sound = true;
    e.reconstructed = true;
    if (cohorts * per_cohort <= 2) e.explore_depth = 700;

    // layout recap for the trace checks
    Loc after_tlk = 2 + ct;
    Loc lls_base = after_tlk + cohorts * (2 + cl);
    Loc passing_base = lls_base + cohorts;
    Loc handoffs_base = passing_base + cohorts;
    Loc ctr = handoffs_base + cohorts;
    std::map<Tid, int> cohort_of;
    for (int c = 0; c < cohorts; ++c)
        for (int p = 0; p < per_cohort; ++p) cohort_of[2 + c * per_cohort + p] = c;
    e.trace_checks.push_back(mutex_check(ctr, cohorts * per_cohort));
    e.trace_checks.push_back(cohort_run_check(ctr, cohort_of, max_handoffs));
    e.trace_checks.push_back(handoff_bound_check(handoffs_base, cohorts, max_handoffs));
    return e;
}

// ---------------------------------------------------------------------------
// livelock counterexample for the unsound Expect rule

CorpusEntry build_unsound_livelock() {
    std::ostringstream o;
    o << "degrees = atoms(1)\n"
         "degree dl = 0\n"
         "levels = atoms(1)\n"
         "level l0 = 0\n"
         "init_callperms = [d0, d0, d0, d0, d0, d0, d0, d0, d0, d0, d0, d0]\n"
         "main =\n"
      << spinlock_module()
      << "let x = ref false in\n"
         "let y = ref false in\n"
         "let gate = ref false in\n"
         "sl_acquire x ghost[(fun _. ()), (fun _. ())];\n"
         "fork [] {\n"
         "  sl_acquire y ghost[(fun _. ()), (fun _. ())];\n"
         "  gate := true;\n"
         // blocked on x forever; fuel juggled via fresh signals burdened on
         // the (never finishing) main thread
         "  sl_acquire x ghost[(fun _. (let s = NewSignal 1 l0 in (Expect cur s dl; SetSignal 1 "
         "s))), (fun _. ())];\n"
         "  sl_release y ghost[(fun _. ())]\n"
         "};\n"
         // wait until the forkee holds y, then block on y forever
         "while atomic { ghost { let gv = !gate in (if gv then () else (let s = NewSignal 2 l0 "
         "in (Expect cur s dl; SetSignal 2 s))) }; let g2 = !gate in g2 = false } { () };\n"
         "sl_acquire y ghost[(fun _. (let s = NewSignal 2 l0 in (Expect cur s dl; SetSignal 2 "
         "s))), (fun _. ())];\n"
         "sl_release x ghost[(fun _. ())]\n";
    CorpusEntry e = make_entry("unsound_livelock",
                               "two spinlocks acquired in opposite order; bare Expect juggles "
                               "obligations to fuel the cycle",
                               o.str());
    e.mode = Mode::unsound();
    e.step_cap = 100000;
    return e;
}

// ---------------------------------------------------------------------------
// negative-rule fixtures

std::vector<CorpusEntry> negative_fixtures() {
    std::vector<CorpusEntry> out;

    {
        CorpusEntry e = make_entry("fix_missing_callperm",
                                   "function application with an empty permission stock",
                                   "degrees = atoms(1)\n"
                                   "init_callperms = []\n"
                                   "main =\n"
                                   "let f = (rec f x ghost[_]. x) in\n"
                                   "f 1\n");
        e.expected_stuck = StuckKind::MissingCallPerm;
        out.push_back(std::move(e));
    }
    {
        CorpusEntry e = make_entry("fix_unfulfilled_obligations",
                                   "a signal is created and never set",
                                   "levels = atoms(1)\n"
                                   "level l0 = 0\n"
                                   "main =\n"
                                   "ghost let s = NewSignal cur l0 in\n"
                                   "()\n");
        e.expected_stuck = StuckKind::UnfulfilledObligations;
        out.push_back(std::move(e));
    }
    out.push_back(build_flag_no_expect_perm());  // ExpectWithoutPermission
    {
        CorpusEntry e = make_entry("fix_expect_on_set_signal",
                                   "the signal is set before it is expected",
                                   "degrees = lexsum(atoms(1), atoms(1))\n"
                                   "degree dlo = (0, 0)\n"
                                   "degree dhi = (1, 0)\n"
                                   "levels = atoms(1)\n"
                                   "level l0 = 0\n"
                                   "init_callperms = [dhi]\n"
                                   "main =\n"
                                   "ghost let s = NewSignal cur l0 in\n"
                                   "ghost { NewExpectPerm cur s dhi dlo };\n"
                                   "ghost { SetSignal cur s };\n"
                                   "ghost { Expect cur s dlo }\n");
        e.expected_stuck = StuckKind::ExpectOnSetSignal;
        out.push_back(std::move(e));
    }
    {
        CorpusEntry e = make_entry("fix_level_not_below",
                                   "a thread expects a signal at the level of its own obligation",
                                   "degrees = lexsum(atoms(1), atoms(1))\n"
                                   "degree dlo = (0, 0)\n"
                                   "degree dhi = (1, 0)\n"
                                   "levels = atoms(1)\n"
                                   "level l0 = 0\n"
                                   "init_callperms = [dhi]\n"
                                   "main =\n"
                                   "ghost let s = NewSignal cur l0 in\n"
                                   "ghost { NewExpectPerm cur s dhi dlo };\n"
                                   "ghost { Expect cur s dlo };\n"
                                   "ghost { SetSignal cur s }\n");
        e.expected_stuck = StuckKind::LevelNotBelowObligations;
        out.push_back(std::move(e));
    }
    {
        CorpusEntry e = make_entry("fix_degree_not_lower",
                                   "lowering to a degree that is not strictly smaller",
                                   "degrees = lexsum(atoms(1), atoms(1))\n"
                                   "degree dlo = (0, 0)\n"
                                   "degree dhi = (1, 0)\n"
                                   "init_callperms = [dlo]\n"
                                   "main =\n"
                                   "ghost { lower dlo to 2 times dhi }\n");
        e.expected_stuck = StuckKind::DegreeNotLower;
        out.push_back(std::move(e));
    }
    {
        CorpusEntry e = make_entry("fix_obligation_not_held_fork",
                                   "forking with a transfer list naming a discharged signal",
                                   "levels = atoms(1)\n"
                                   "level l0 = 0\n"
                                   "main =\n"
                                   "ghost let s = NewSignal cur l0 in\n"
                                   "ghost { SetSignal cur s };\n"
                                   "fork [s] { () }\n");
        e.expected_stuck = StuckKind::ObligationNotHeld;
        out.push_back(std::move(e));
    }
    {
        CorpusEntry e = make_entry("fix_unsafe_value_compare",
                                   "equality test on two pairs",
                                   "main =\n"
                                   "let p = (1, 2) in\n"
                                   "let q = (1, 2) in\n"
                                   "let e = p = q in\n"
                                   "()\n");
        e.expected_stuck = StuckKind::UnsafeValueCompare;
        out.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// discipline-violation fixtures

std::vector<DisciplineFixture> discipline_fixtures() {
    std::vector<DisciplineFixture> out;
    auto add = [&out](std::string name, std::string clause, const std::string& src) {
        out.push_back(DisciplineFixture{std::move(name), std::move(clause), parse(src)});
    };
    add("viol_anf", "anf", "main =\nlet x = (1 + 2) + 3 in\n()\n");
    add("viol_aux_embedding", "aux-embedding",
        "levels = atoms(1)\nlevel l0 = 0\nmain =\nlet s = NewSignal cur l0 in\n()\n");
    add("viol_aux_var_escape", "aux-var-escape",
        "main =\nghost let v = 1 in\nlet w = v + 1 in\n()\n");
    add("viol_real_write_in_aux", "real-write-in-aux",
        "main =\nlet r = ref 0 in\nghost { r := 1 }\n");
    add("viol_atomic_shape", "atomic-shape",
        "main =\nlet a = ref 0 in\nlet b = ref 0 in\nlet v = atomic { let u = !a in !b } in\n()\n");
    add("viol_prophecy", "prophecy", "main =\nlet p = newproph in\n()\n");
    {
        // a real application inside auxiliary code is not expressible in the
        // surface syntax; build the tree directly
        Prog p;
        ExprPtr f = mk_rec(named("f"), named("x"), {anon()}, mk_var("x"));
        ExprPtr call = mk_app(mk_var("g"), mk_int(1), {mk_unit()});
        p.main = mk_let(named("g"), f, mk_letaux(anon(), call, mk_unit()));
        out.push_back(DisciplineFixture{"viol_real_call_in_aux", "real-call-in-aux", std::move(p)});
    }
    {
        // a real function without an auxiliary parameter
        Prog p;
        auto e = std::make_shared<Expr>();
        e->k = ExprKind::Rec;
        e->self = anon();
        e->bind = named("x");
        e->kids = {mk_var("x")};
        p.main = mk_let(named("f"), ExprPtr(e), mk_unit());
        out.push_back(DisciplineFixture{"viol_function_shape", "function-shape", std::move(p)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// registry

std::vector<CorpusEntry> sound_entries() {
    std::vector<CorpusEntry> out;
    out.push_back(build_flag_example());
    out.push_back(build_motivating_client());
    out.push_back(build_ticketlock(2));
    out.push_back(build_ticketlock(3));
    out.push_back(build_distinguishing_client_ticketlock());
    out.push_back(build_cohortlock(2, 1, 1));
    out.push_back(build_cohortlock(2, 2, 2));
    return out;
}

std::vector<CorpusEntry> all_entries() {
    std::vector<CorpusEntry> out = sound_entries();
    out.push_back(build_unsound_livelock());
    out.push_back(build_distinguishing_client_spinlock());
    out.push_back(build_flag_missing_set());
    out.push_back(build_ticketlock_nofairness(2));
    for (auto& e : negative_fixtures()) out.push_back(std::move(e));
    return out;
}

std::optional<CorpusEntry> entry_by_name(const std::string& name) {
    for (auto& e : all_entries())
        if (e.name == name) return e;
    return std::nullopt;
}

std::vector<Tid> record_adversary(const Prog& p, Mode mode, std::uint64_t cap,
                                  const std::function<Tid(const Config&)>& pick) {
    Engine eng(p, mode);
    Config c = init_config(p);
    std::vector<Tid> script;
    for (std::uint64_t i = 0; i < cap; ++i) {
        if (c.pool.all_values()) break;
        Tid t = pick(c);
        script.push_back(t);
        MachineOutcome o = machine_step(eng, c, t);
        if (o.kind == MachineOutcome::Kind::Stuck) break;  // keep the stuck attempt scripted
        if (o.kind == MachineOutcome::Kind::Aborted) break;
        if (o.kind == MachineOutcome::Kind::SelectedThreadComplete)
            throw SchedulerError("adversary picked a complete thread");
    }
    return script;
}

}  // namespace hlt
