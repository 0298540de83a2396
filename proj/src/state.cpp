#include "hlt/state.hpp"

#include <sstream>

#include "hlt/pretty.hpp"

namespace hlt {

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t x) {
    h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    std::uint64_t z = h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t hash_path(const std::vector<int>& p) {
    std::uint64_t h = 17;
    for (int x : p) h = mix(h, static_cast<std::uint64_t>(x) + 1);
    return h;
}

std::uint64_t hash_degree(const Degree& d) {
    return d.bottom ? 3 : mix(5, hash_path(d.path));
}

}  // namespace

Config init_config(const Prog& p) {
    Config c;
    ExprPtr main_finish = mk_seq(p.main, mk(ExprKind::Finish));
    c.pool.threads.emplace_back(1, main_finish);
    c.state.obligations[1] = Obligations{};
    c.state.call_perms[1] = p.init_callperms;
    c.state.expect_perms[1] = ExpectPerms{};
    return c;
}

std::pair<Config, Tid> spawn_thread(const Config& c, Tid parent,
                                    const std::vector<Sig>& transferred, const ExprPtr& body) {
    Config out = c;
    auto pit = out.state.obligations.find(parent);
    if (pit == out.state.obligations.end() || pit->second.finished)
        throw StateError("spawn_thread: parent " + std::to_string(parent) + " not alive");

    // tids are never reused, so min-unused equals a counter over known tids
    Tid child = 1;
    for (auto& [t, _] : out.state.obligations)
        if (t >= child) child = t + 1;

    Obligations child_obl;
    for (Sig s : transferred) {
        auto sit = out.state.signals.find(s);
        if (sit == out.state.signals.end())
            throw StateError("ObligationNotHeld: signal " + std::to_string(s) + " unallocated");
        const Level& lev = sit->second.level;
        if (!pit->second.remove(s, lev))
            throw StateError("ObligationNotHeld: signal " + std::to_string(s) +
                             " is not an obligation of thread " + std::to_string(parent));
        child_obl.add(s, lev);
    }
    out.state.obligations[child] = std::move(child_obl);
    out.state.call_perms[child] = out.state.call_perms[parent];
    out.state.expect_perms[child] = out.state.expect_perms[parent];
    out.pool.threads.emplace_back(child, mk_seq(body, mk(ExprKind::Finish)));
    return {std::move(out), child};
}

std::uint64_t canonical_hash(const Config& c) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto& [tid, e] : c.pool.threads) {
        h = mix(h, static_cast<std::uint64_t>(tid));
        h = mix(h, expr_hash(*e));
    }
    h = mix(h, 0xb7e15162ULL);
    for (auto& [l, v] : c.state.heap) {
        h = mix(h, static_cast<std::uint64_t>(l));
        h = mix(h, val_hash(v));
    }
    h = mix(h, 0x8aed2a6aULL);
    for (auto& [l, v] : c.state.aux_heap) {
        h = mix(h, static_cast<std::uint64_t>(l));
        h = mix(h, val_hash(v));
    }
    h = mix(h, 0x13198a2eULL);
    for (auto& [s, st] : c.state.signals) {
        h = mix(h, static_cast<std::uint64_t>(s));
        h = mix(h, hash_path(st.level.path));
        h = mix(h, st.set ? 2 : 1);
    }
    h = mix(h, 0x03707344ULL);
    for (auto& [t, ob] : c.state.obligations) {
        h = mix(h, static_cast<std::uint64_t>(t));
        h = mix(h, ob.finished ? 2 : 1);
        for (auto& [sl, k] : ob.entries) {
            h = mix(h, static_cast<std::uint64_t>(sl.first));
            h = mix(h, hash_path(sl.second.path));
            h = mix(h, k);
        }
    }
    h = mix(h, 0xa4093822ULL);
    for (auto& [t, cp] : c.state.call_perms) {
        h = mix(h, static_cast<std::uint64_t>(t));
        for (auto& [d, k] : cp.elems()) {
            h = mix(h, hash_degree(d));
            h = mix(h, k);
        }
    }
    h = mix(h, 0x299f31d0ULL);
    for (auto& [t, ep] : c.state.expect_perms) {
        h = mix(h, static_cast<std::uint64_t>(t));
        for (auto& [sd, k] : ep) {
            h = mix(h, static_cast<std::uint64_t>(sd.first));
            h = mix(h, hash_degree(sd.second));
            h = mix(h, k);
        }
    }
    h = mix(h, static_cast<std::uint64_t>(c.state.next_loc));
    for (auto& [t, k] : c.state.aux_counters) {
        h = mix(h, static_cast<std::uint64_t>(t));
        h = mix(h, static_cast<std::uint64_t>(k));
    }
    h = mix(h, 0xf12c7f99ULL);
    for (auto& [t, k] : c.state.sig_counters) {
        h = mix(h, static_cast<std::uint64_t>(t));
        h = mix(h, static_cast<std::uint64_t>(k));
    }
    return h;
}

std::string to_canonical_text(const Config& c) {
    std::ostringstream o;
    o << "threads:\n";
    for (auto& [tid, e] : c.pool.threads)
        o << "  " << tid << ": " << pretty_print(e) << "\n";
    o << "heap:\n";
    for (auto& [l, v] : c.state.heap) o << "  " << l << " -> " << to_string(v) << "\n";
    o << "aux_heap:\n";
    for (auto& [l, v] : c.state.aux_heap) o << "  " << l << " -> " << to_string(v) << "\n";
    o << "signals:\n";
    for (auto& [s, st] : c.state.signals)
        o << "  " << s << " -> (" << st.level.to_string() << ", " << (st.set ? "set" : "unset")
          << ")\n";
    o << "obligations:\n";
    for (auto& [t, ob] : c.state.obligations) {
        o << "  " << t << " -> ";
        if (ob.finished) {
            o << "Finished\n";
            continue;
        }
        o << "{";
        bool first = true;
        for (auto& [sl, k] : ob.entries)
            for (std::uint64_t i = 0; i < k; ++i) {
                if (!first) o << ", ";
                o << "(" << sl.first << ", " << sl.second.to_string() << ")";
                first = false;
            }
        o << "}\n";
    }
    o << "call_perms:\n";
    for (auto& [t, cp] : c.state.call_perms) o << "  " << t << " -> " << cp.to_string() << "\n";
    o << "expect_perms:\n";
    for (auto& [t, ep] : c.state.expect_perms) {
        o << "  " << t << " -> {";
        bool first = true;
        for (auto& [sd, k] : ep)
            for (std::uint64_t i = 0; i < k; ++i) {
                if (!first) o << ", ";
                o << "(" << sd.first << ", " << sd.second.to_string() << ")";
                first = false;
            }
        o << "}\n";
    }
    o << "next_loc: " << c.state.next_loc << "\n";
    o << "aux_counters:";
    for (auto& [t, k] : c.state.aux_counters) o << " " << t << ":" << k;
    o << "\nsig_counters:";
    for (auto& [t, k] : c.state.sig_counters) o << " " << t << ":" << k;
    o << "\n";
    return o.str();
}

std::optional<std::string> validate(const Config& c) {
    const MachineState& s = c.state;
    for (auto& [t, _] : s.obligations) {
        if (!s.call_perms.count(t)) return "tid " + std::to_string(t) + " missing call_perms";
        if (!s.expect_perms.count(t)) return "tid " + std::to_string(t) + " missing expect_perms";
    }
    if (s.call_perms.size() != s.obligations.size() || s.expect_perms.size() != s.obligations.size())
        return "permission map domains differ from obligation domain";
    for (auto& [t, ob] : s.obligations) {
        for (auto& [sl, _] : ob.entries) {
            auto it = s.signals.find(sl.first);
            if (it == s.signals.end())
                return "obligation references unallocated signal " + std::to_string(sl.first);
            if (!(it->second.level == sl.second))
                return "obligation level mismatch for signal " + std::to_string(sl.first);
        }
    }
    for (auto& [t, ep] : s.expect_perms)
        for (auto& [sd, _] : ep)
            if (!s.signals.count(sd.first))
                return "expect permission references unallocated signal " +
                       std::to_string(sd.first);
    for (auto& [l, _] : s.heap)
        if (l >= s.next_loc) return "heap location beyond allocation counter";
    for (auto& [l, _] : s.aux_heap) {
        if (l < s.next_loc) continue;  // shadow of a real allocation
        if (l < MachineState::kAuxBase) return "aux heap location beyond allocation counters";
        Tid t = (l - MachineState::kAuxBase) / MachineState::kAuxStride;
        std::int64_t off = (l - MachineState::kAuxBase) % MachineState::kAuxStride;
        auto it = s.aux_counters.find(t);
        if (it == s.aux_counters.end() || off >= it->second)
            return "aux heap location beyond its thread counter";
    }
    for (auto& [sg, _] : s.signals) {
        Tid t = sg / MachineState::kSigStride;
        std::int64_t off = sg % MachineState::kSigStride;
        auto it = s.sig_counters.find(t);
        if (it == s.sig_counters.end() || off >= it->second)
            return "signal id beyond its thread counter";
    }
    Tid prev = 0;
    for (auto& [tid, _] : c.pool.threads) {
        if (tid <= prev) return "pool tids not strictly increasing";
        prev = tid;
        if (!s.obligations.count(tid))
            return "pool tid " + std::to_string(tid) + " missing from state maps";
    }
    return std::nullopt;
}

bool config_equal(const Config& a, const Config& b) {
    if (a.pool.threads.size() != b.pool.threads.size()) return false;
    for (std::size_t i = 0; i < a.pool.threads.size(); ++i) {
        if (a.pool.threads[i].first != b.pool.threads[i].first) return false;
        if (!expr_equal(a.pool.threads[i].second, b.pool.threads[i].second)) return false;
    }
    const MachineState &x = a.state, &y = b.state;
    auto val_maps_equal = [](const std::map<Loc, Val>& m, const std::map<Loc, Val>& n) {
        if (m.size() != n.size()) return false;
        auto it = n.begin();
        for (auto& [l, v] : m) {
            if (it->first != l || !val_equal(it->second, v)) return false;
            ++it;
        }
        return true;
    };
    return val_maps_equal(x.heap, y.heap) && val_maps_equal(x.aux_heap, y.aux_heap) &&
           x.signals == y.signals && x.obligations == y.obligations &&
           x.call_perms == y.call_perms && x.expect_perms == y.expect_perms &&
           x.next_loc == y.next_loc && x.aux_counters == y.aux_counters &&
           x.sig_counters == y.sig_counters;
}

}  // namespace hlt
