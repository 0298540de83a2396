#include "hlt/scheduler.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "hlt/pretty.hpp"

namespace hlt {

namespace {

using ordered_json = nlohmann::ordered_json;

std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<Tid> runnable_tids(const Config& c) {
    std::vector<Tid> out;
    for (auto& [tid, e] : c.pool.threads)
        if (!is_value(e)) out.push_back(tid);
    return out;
}

// Small slices of the pre-step state sufficient to derive the ghost deltas;
// the (append-only) signal map is covered by the allocation watermark plus
// the set-journal in the step events.
struct PreGhost {
    std::map<Tid, Obligations> obligations;
    std::map<Tid, DegreeMultiset> call_perms;
    std::map<Tid, ExpectPerms> expect_perms;
    std::map<Tid, std::int64_t> sig_counters;
};

PreGhost pre_ghost(const MachineState& s) {
    return PreGhost{s.obligations, s.call_perms, s.expect_perms, s.sig_counters};
}

GhostDelta diff_ghost(const PreGhost& pre, const MachineState& post, const StepEvents& ev) {
    GhostDelta d;
    std::vector<Tid> tids;
    for (auto& [t, _] : pre.obligations) tids.push_back(t);
    for (auto& [t, _] : post.obligations)
        if (!pre.obligations.count(t)) tids.push_back(t);
    std::sort(tids.begin(), tids.end());

    for (Tid t : tids) {
        DegreeMultiset preCp, postCp;
        if (auto it = pre.call_perms.find(t); it != pre.call_perms.end()) preCp = it->second;
        if (auto it = post.call_perms.find(t); it != post.call_perms.end()) postCp = it->second;
        DegreeMultiset gained = postCp.difference(preCp);
        DegreeMultiset lost = preCp.difference(postCp);
        for (auto& [deg, k] : gained.elems())
            d.call_perms.emplace_back(t, deg, static_cast<std::int64_t>(k));
        for (auto& [deg, k] : lost.elems())
            d.call_perms.emplace_back(t, deg, -static_cast<std::int64_t>(k));

        Obligations preOb, postOb;
        if (auto it = pre.obligations.find(t); it != pre.obligations.end()) preOb = it->second;
        if (auto it = post.obligations.find(t); it != post.obligations.end()) postOb = it->second;
        for (auto& [sl, k] : postOb.entries) {
            std::uint64_t was = 0;
            if (auto it = preOb.entries.find(sl); it != preOb.entries.end()) was = it->second;
            if (k > was)
                d.obligations.emplace_back(t, sl.first, sl.second,
                                           static_cast<std::int64_t>(k - was));
        }
        for (auto& [sl, k] : preOb.entries) {
            std::uint64_t now = 0;
            if (auto it = postOb.entries.find(sl); it != postOb.entries.end()) now = it->second;
            if (k > now)
                d.obligations.emplace_back(t, sl.first, sl.second,
                                           -static_cast<std::int64_t>(k - now));
        }
        if (!preOb.finished && postOb.finished) d.finished.push_back(t);

        ExpectPerms preEp, postEp;
        if (auto it = pre.expect_perms.find(t); it != pre.expect_perms.end()) preEp = it->second;
        if (auto it = post.expect_perms.find(t); it != post.expect_perms.end()) postEp = it->second;
        for (auto& [sd, k] : postEp) {
            std::uint64_t was = 0;
            if (auto it = preEp.find(sd); it != preEp.end()) was = it->second;
            if (k > was)
                d.expect_perms.emplace_back(t, sd.first, sd.second,
                                            static_cast<std::int64_t>(k - was));
        }
        for (auto& [sd, k] : preEp) {
            std::uint64_t now = 0;
            if (auto it = postEp.find(sd); it != postEp.end()) now = it->second;
            if (k > now)
                d.expect_perms.emplace_back(t, sd.first, sd.second,
                                            -static_cast<std::int64_t>(k - now));
        }
    }
    for (auto& [t, k] : post.sig_counters) {
        std::int64_t old = 0;
        if (auto it = pre.sig_counters.find(t); it != pre.sig_counters.end()) old = it->second;
        for (std::int64_t i = old; i < k; ++i) {
            Sig sg = t * MachineState::kSigStride + i;
            auto it2 = post.signals.find(sg);
            if (it2 != post.signals.end()) d.signals_created.emplace_back(sg, it2->second.level);
        }
    }
    for (Sig sg : ev.signals_set) d.signals_set.push_back(sg);
    return d;
}

struct Picker {
    const SchedulePolicy& pol;
    std::uint64_t rng;
    Tid rr_cursor = 0;
    std::size_t script_pos = 0;

    explicit Picker(const SchedulePolicy& p) : pol(p), rng(p.seed) {}

    // nullopt: script exhausted
    std::optional<Tid> pick(const Config& c, std::uint64_t step_index) {
        std::vector<Tid> run = runnable_tids(c);
        if (run.empty()) return std::nullopt;
        switch (pol.kind) {
            case SchedulePolicy::Kind::RoundRobin: {
                for (Tid t : run)
                    if (t > rr_cursor) {
                        rr_cursor = t;
                        return t;
                    }
                rr_cursor = run.front();
                return run.front();
            }
            case SchedulePolicy::Kind::RandomFair: {
                std::uint64_t r = splitmix64(rng);
                return run[r % run.size()];
            }
            case SchedulePolicy::Kind::Scripted: {
                if (script_pos >= pol.script.size()) return std::nullopt;
                Tid t = pol.script[script_pos++];
                const ExprPtr* e = c.pool.find(t);
                if (!e)
                    throw SchedulerError("replay divergence at step " +
                                         std::to_string(step_index) + ": no thread " +
                                         std::to_string(t));
                if (is_value(*e))
                    throw SchedulerError("replay divergence at step " +
                                         std::to_string(step_index) + ": thread " +
                                         std::to_string(t) + " already complete");
                return t;
            }
        }
        return std::nullopt;
    }
};

std::string terminal_label(RunStatus s, const StuckReason& r) {
    if (s == RunStatus::Stuck) return std::string("Stuck(") + stuck_kind_name(r.kind) + ")";
    return run_status_name(s);
}

}  // namespace

std::string SchedulePolicy::describe() const {
    switch (kind) {
        case Kind::RoundRobin: return "rr";
        case Kind::RandomFair: return "random";
        case Kind::Scripted: return "script";
    }
    return "?";
}

const char* run_status_name(RunStatus s) {
    switch (s) {
        case RunStatus::AllFinished: return "AllFinished";
        case RunStatus::Stuck: return "Stuck";
        case RunStatus::Aborted: return "Aborted";
        case RunStatus::StepCapExceeded: return "StepCapExceeded";
    }
    return "?";
}

std::vector<Tid> Execution::schedule() const {
    std::vector<Tid> out;
    out.reserve(steps.size() + 1);
    for (auto& s : steps) out.push_back(s.tid);
    if (status == RunStatus::Stuck) out.push_back(stuck.tid);
    return out;
}

Execution run(const Prog& p, const SchedulePolicy& policy, const RunOptions& opts) {
    Execution ex;
    ex.prog = std::make_shared<Prog>(p);
    ex.mode = opts.mode;
    ex.policy_desc = policy.describe();
    ex.seed = policy.seed;

    Engine eng(p, opts.mode);
    Config c = init_config(p);
    ex.program_hash = canonical_hash(c);
    ex.status = RunStatus::StepCapExceeded;

    Picker picker(policy);
    for (std::uint64_t i = 0; i < opts.step_cap; ++i) {
        if (c.pool.all_values()) {
            ex.status = RunStatus::AllFinished;
            break;
        }
        auto tid = picker.pick(c, i);
        if (!tid) break;  // scripted schedule exhausted
        PreGhost pre = pre_ghost(c.state);
        MachineOutcome o = machine_step(eng, c, *tid);
        switch (o.kind) {
            case MachineOutcome::Kind::SelectedThreadComplete:
                throw SchedulerError("scheduler picked a complete thread");
            case MachineOutcome::Kind::Stuck:
                ex.status = RunStatus::Stuck;
                ex.stuck = o.stuck;
                if (ex.stuck.tid == 0) ex.stuck.tid = *tid;
                goto done;
            case MachineOutcome::Kind::Aborted:
            case MachineOutcome::Kind::Progressed: {
                TraceStep ts;
                ts.index = i;
                ts.tid = *tid;
                ts.rule = o.rule;
                ts.redex = o.redex_summary;
                ts.aux_position = o.aux_position;
                ts.delta = diff_ghost(pre, c.state, o.events);
                ts.forked = o.forked;
                ts.expects = std::move(o.events.expects);
                ts.heap = std::move(o.events.heap);
                ex.steps.push_back(std::move(ts));
                if (o.kind == MachineOutcome::Kind::Aborted) {
                    ex.status = RunStatus::Aborted;
                    goto done;
                }
                if (opts.validate_each_step) {
                    if (auto err = validate(c))
                        throw SchedulerError("state invariant broken after step " +
                                             std::to_string(i) + ": " + *err);
                }
                break;
            }
        }
        if (c.pool.all_values()) {
            ex.status = RunStatus::AllFinished;
            break;
        }
    }
done:
    if (ex.status == RunStatus::AllFinished) {
        for (auto& [t, ob] : c.state.obligations)
            if (!ob.finished && !ob.empty())
                throw SchedulerError("AllFinished with outstanding obligations at thread " +
                                     std::to_string(t));
    }
    ex.final = std::move(c);
    ex.final_hash = canonical_hash(ex.final);
    return ex;
}

Execution run(const Prog& p, const SchedulePolicy& policy, std::uint64_t step_cap, Mode mode) {
    RunOptions o;
    o.step_cap = step_cap;
    o.mode = mode;
    return run(p, policy, o);
}

Execution replay(const Prog& p, const std::vector<Tid>& tids, Mode mode) {
    RunOptions o;
    o.step_cap = tids.size() + 1;
    o.mode = mode;
    return run(p, SchedulePolicy::scripted(tids), o);
}

// ---------------------------------------------------------------------------
// explore

namespace {

struct Explorer {
    Engine eng;
    std::uint64_t depth_cap;
    std::uint64_t visited_cap;
    std::unordered_set<std::uint64_t> visited;
    ExploreReport rep;
    std::vector<Tid> path;

    void terminal(const std::string& label) {
        rep.terminals[label]++;
        if (!rep.witnesses.count(label)) rep.witnesses[label] = path;
    }

    void dfs(const Config& c, std::uint64_t depth) {
        for (Tid tid : runnable_tids(c)) {
            Config child = c;
            path.push_back(tid);
            MachineOutcome o = machine_step(eng, child, tid);
            switch (o.kind) {
                case MachineOutcome::Kind::SelectedThreadComplete:
                    break;
                case MachineOutcome::Kind::Stuck:
                    terminal(terminal_label(RunStatus::Stuck, o.stuck));
                    break;
                case MachineOutcome::Kind::Aborted:
                    terminal("Aborted");
                    break;
                case MachineOutcome::Kind::Progressed: {
                    if (child.pool.all_values()) {
                        terminal("AllFinished");
                        break;
                    }
                    if (visited.size() >= visited_cap) {
                        rep.truncated = true;
                        break;
                    }
                    std::uint64_t h = canonical_hash(child);
                    if (visited.insert(h).second) {
                        if (depth + 1 >= depth_cap) {
                            rep.truncated = true;
                        } else {
                            dfs(child, depth + 1);
                        }
                    }
                    break;
                }
            }
            path.pop_back();
        }
    }
};

}  // namespace

bool ExploreReport::any_stuck() const {
    for (auto& [label, _] : terminals)
        if (label.rfind("Stuck", 0) == 0) return true;
    return false;
}

std::string ExploreReport::to_string() const {
    std::ostringstream o;
    o << "visited " << visited_states << " states; terminals:";
    for (auto& [label, n] : terminals) o << " " << label << "=" << n;
    if (truncated) o << " (truncated)";
    return o.str();
}

ExploreReport explore(const Prog& p, std::uint64_t depth_cap, std::uint64_t visited_cap,
                      Mode mode) {
    Explorer ex;
    ex.eng = Engine(p, mode);
    ex.depth_cap = depth_cap;
    ex.visited_cap = visited_cap;
    Config c0 = init_config(p);
    ex.visited.insert(canonical_hash(c0));
    ex.dfs(c0, 0);
    ex.rep.visited_states = ex.visited.size();
    return ex.rep;
}

// ---------------------------------------------------------------------------
// path fuel

namespace {

struct FuelInput {
    // per machine step: tid, rule, per-target callperm deltas, expect-perm
    // deltas, expect events
    struct Step {
        Tid tid = 0;
        std::string rule;
        std::vector<std::pair<Degree, std::int64_t>> cp;        // for the checked tid
        std::vector<std::pair<std::pair<Sig, Degree>, std::int64_t>> ep;
        std::vector<std::pair<Sig, Degree>> expects;            // events targeting the tid
        bool creates_tid = false;                               // fork created the checked tid
    };
    std::vector<Step> steps;
    DegreeMultiset init_cp;  // call perms of tid 1
};

PathFuelReport fuel_check_core(const FuelInput& in, Tid tid) {
    PathFuelReport rep;

    // last machine step at which each expect permission is used on the path
    std::map<std::pair<Sig, Degree>, std::uint64_t> last_use;
    for (std::size_t j = 0; j < in.steps.size(); ++j)
        for (auto& sd : in.steps[j].expects) last_use[sd] = j;

    std::size_t first = 0;
    bool alive = tid == 1;
    DegreeMultiset cp;
    std::map<std::pair<Sig, Degree>, std::uint64_t> ep;
    if (tid == 1) cp = in.init_cp;

    std::size_t n = in.steps.size();
    std::vector<DegreeMultiset> pf(n + 1);
    std::vector<bool> defined(n + 1, alive);
    std::vector<bool> beta(n, false);

    for (std::size_t j = 0; j <= n; ++j) {
        if (alive) {
            DegreeMultiset m = cp;
            for (auto& [sd, cnt] : ep) {
                auto it = last_use.find(sd);
                if (it == last_use.end() || it->second + 1 <= j) continue;  // past last use
                std::uint64_t copies = (it->second - j + 1) * cnt;
                m.add(sd.second, copies);
            }
            pf[j] = std::move(m);
            defined[j] = true;
        }
        if (j == n) break;
        const auto& st = in.steps[j];
        if (st.creates_tid && !alive) {
            alive = true;
            first = j + 1;
        }
        beta[j] = (st.rule == "BetaS" && st.tid == tid);
        for (auto& [d, k] : st.cp) {
            if (k > 0) cp.add(d, static_cast<std::uint64_t>(k));
            else
                for (std::int64_t i = 0; i < -k; ++i) cp.remove(d);
        }
        for (auto& [sd, k] : st.ep) {
            if (k > 0) ep[sd] += static_cast<std::uint64_t>(k);
            else {
                std::uint64_t dec = static_cast<std::uint64_t>(-k);
                ep[sd] = ep[sd] > dec ? ep[sd] - dec : 0;
            }
        }
    }

    rep.monotone = true;
    for (std::size_t j = first; j + 1 <= n; ++j) {
        if (!defined[j] || !defined[j + 1]) continue;
        const DegreeMultiset& a = pf[j];
        const DegreeMultiset& b = pf[j + 1];
        bool eq = (a == b);
        bool less = !eq && dm_less_unchecked(b, a);
        if (beta[j]) {
            if (!less) {
                rep.monotone = false;
                rep.violation = "step " + std::to_string(j) +
                                " (BetaS) did not strictly decrease path fuel";
                break;
            }
        } else if (!eq && !less) {
            rep.monotone = false;
            rep.violation = "step " + std::to_string(j) + " increased path fuel";
            break;
        }
    }
    for (std::size_t j = first; j <= n; ++j)
        if (defined[j]) rep.sequence.push_back(pf[j]);
    return rep;
}

}  // namespace

PathFuelReport path_fuel_check(const Execution& ex, Tid thread_path) {
    if (ex.status != RunStatus::AllFinished)
        throw SchedulerError("path_fuel_check needs an AllFinished execution");
    if (!ex.final.state.obligations.count(thread_path))
        throw SchedulerError("thread " + std::to_string(thread_path) + " absent from the run");

    FuelInput in;
    in.init_cp = ex.prog ? ex.prog->init_callperms : DegreeMultiset{};
    for (auto& ts : ex.steps) {
        FuelInput::Step s;
        s.tid = ts.tid;
        s.rule = ts.rule;
        for (auto& [t, d, k] : ts.delta.call_perms)
            if (t == thread_path) s.cp.emplace_back(d, k);
        for (auto& [t, sg, d, k] : ts.delta.expect_perms)
            if (t == thread_path) s.ep.emplace_back(std::make_pair(sg, d), k);
        for (auto& ev : ts.expects)
            if (ev.target == thread_path) s.expects.emplace_back(ev.sig, ev.deg);
        for (Tid f : ts.forked)
            if (f == thread_path) s.creates_tid = true;
        in.steps.push_back(std::move(s));
    }
    return fuel_check_core(in, thread_path);
}

// ---------------------------------------------------------------------------
// trace io

namespace {

std::string deg_str(const Degree& d) { return d.to_string(); }

Degree deg_parse(const std::string& s) {
    if (s == "d0") return Degree::d0();
    std::vector<int> path;
    int cur = 0;
    bool have = false;
    for (char c : s) {
        if (c >= '0' && c <= '9') {
            cur = cur * 10 + (c - '0');
            have = true;
        } else if (c == ',' || c == ')') {
            if (have) path.push_back(cur);
            cur = 0;
            have = false;
        }
    }
    if (have) path.push_back(cur);
    if (path.empty()) throw SchedulerError("malformed degree literal in trace: " + s);
    return Degree::elem(path);
}

ordered_json step_to_json(const TraceStep& ts) {
    ordered_json j;
    j["i"] = ts.index;
    j["tid"] = ts.tid;
    j["rule"] = ts.rule;
    j["redex"] = ts.redex;
    if (ts.aux_position) j["aux"] = true;
    ordered_json cp = ordered_json::array();
    for (auto& [t, d, k] : ts.delta.call_perms) cp.push_back({t, deg_str(d), k});
    if (!cp.empty()) j["cp"] = cp;
    ordered_json ob = ordered_json::array();
    for (auto& [t, s, l, k] : ts.delta.obligations) ob.push_back({t, s, l.to_string(), k});
    if (!ob.empty()) j["ob"] = ob;
    ordered_json ep = ordered_json::array();
    for (auto& [t, s, d, k] : ts.delta.expect_perms) ep.push_back({t, s, deg_str(d), k});
    if (!ep.empty()) j["ep"] = ep;
    ordered_json sc = ordered_json::array();
    for (auto& [s, l] : ts.delta.signals_created) sc.push_back({s, l.to_string()});
    if (!sc.empty()) j["sig"] = sc;
    if (!ts.delta.signals_set.empty()) j["set"] = ts.delta.signals_set;
    if (!ts.delta.finished.empty()) j["fin"] = ts.delta.finished;
    if (!ts.forked.empty()) j["fork"] = ts.forked;
    ordered_json ex = ordered_json::array();
    for (auto& e : ts.expects) ex.push_back({e.target, e.sig, deg_str(e.deg)});
    if (!ex.empty()) j["exp"] = ex;
    return j;
}

}  // namespace

void write_trace(const Execution& ex, std::ostream& out) {
    ordered_json hdr;
    hdr["program"] = ex.program_hash;
    hdr["policy"] = ex.policy_desc;
    hdr["seed"] = ex.seed;
    hdr["mode"] = ex.mode.plain ? "plain"
                : ex.mode.unsound_expect ? "unsound"
                : ex.mode.strict_beta ? "strict"
                                      : "sound";
    ordered_json init = ordered_json::array();
    if (ex.prog)
        for (auto& [d, k] : ex.prog->init_callperms.elems())
            for (std::uint64_t i = 0; i < k; ++i) init.push_back(deg_str(d));
    hdr["init_cp"] = init;
    out << hdr.dump() << "\n";
    for (auto& ts : ex.steps) out << step_to_json(ts).dump() << "\n";
    ordered_json tail;
    tail["status"] = run_status_name(ex.status);
    if (ex.status == RunStatus::Stuck) {
        tail["stuck"] = stuck_kind_name(ex.stuck.kind);
        tail["stuck_tid"] = ex.stuck.tid;
        tail["detail"] = ex.stuck.detail;
    }
    tail["final_hash"] = ex.final_hash;
    out << tail.dump() << "\n";
}

std::string trace_to_string(const Execution& ex) {
    std::ostringstream o;
    write_trace(ex, o);
    return o.str();
}

namespace {

std::vector<ordered_json> read_trace_lines(std::istream& in) {
    std::vector<ordered_json> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            lines.push_back(ordered_json::parse(line));
        } catch (const std::exception& e) {
            throw SchedulerError(std::string("malformed trace line: ") + e.what());
        }
    }
    if (lines.size() < 2) throw SchedulerError("malformed trace: missing header or status line");
    return lines;
}

}  // namespace

PathFuelReport fuel_from_trace(std::istream& in, Tid thread_path) {
    auto lines = read_trace_lines(in);
    FuelInput fin;
    const auto& hdr = lines.front();
    if (!hdr.contains("init_cp")) throw SchedulerError("malformed trace: no init_cp in header");
    for (auto& d : hdr["init_cp"]) fin.init_cp.add(deg_parse(d.get<std::string>()));

    bool seen = thread_path == 1;
    for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
        const auto& j = lines[i];
        FuelInput::Step s;
        s.tid = j.at("tid").get<Tid>();
        if (s.tid == thread_path) seen = true;
        s.rule = j.at("rule").get<std::string>();
        if (j.contains("cp"))
            for (auto& e : j["cp"]) {
                Tid t = e[0].get<Tid>();
                if (t == thread_path)
                    s.cp.emplace_back(deg_parse(e[1].get<std::string>()), e[2].get<std::int64_t>());
            }
        if (j.contains("ep"))
            for (auto& e : j["ep"]) {
                Tid t = e[0].get<Tid>();
                if (t == thread_path)
                    s.ep.emplace_back(
                        std::make_pair(e[1].get<Sig>(), deg_parse(e[2].get<std::string>())),
                        e[3].get<std::int64_t>());
            }
        if (j.contains("exp"))
            for (auto& e : j["exp"]) {
                if (e[0].get<Tid>() == thread_path)
                    s.expects.emplace_back(e[1].get<Sig>(), deg_parse(e[2].get<std::string>()));
            }
        if (j.contains("fork"))
            for (auto& f : j["fork"]) {
                if (f.get<Tid>() == thread_path) s.creates_tid = true;
                if (f.get<Tid>() == thread_path) seen = true;
            }
        fin.steps.push_back(std::move(s));
    }
    if (!seen)
        throw SchedulerError("thread " + std::to_string(thread_path) + " absent from the trace");
    return fuel_check_core(fin, thread_path);
}

std::vector<Tid> schedule_from_trace(std::istream& in) {
    auto lines = read_trace_lines(in);
    std::vector<Tid> out;
    for (std::size_t i = 1; i + 1 < lines.size(); ++i) out.push_back(lines[i].at("tid").get<Tid>());
    return out;
}

}  // namespace hlt
