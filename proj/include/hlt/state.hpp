#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hlt/syntax.hpp"

namespace hlt {

using Tid = std::int64_t;
using Loc = std::int64_t;
using Sig = std::int64_t;

struct SignalState {
    Level level;
    bool set = false;
    bool operator==(const SignalState& o) const { return level == o.level && set == o.set; }
};

// A thread's obligations: a multiset of (signal, level), or Finished.
struct Obligations {
    bool finished = false;
    std::map<std::pair<Sig, Level>, std::uint64_t> entries;

    void add(Sig s, const Level& l) { entries[{s, l}]++; }
    bool remove(Sig s, const Level& l) {
        auto it = entries.find({s, l});
        if (it == entries.end()) return false;
        if (--it->second == 0) entries.erase(it);
        return true;
    }
    bool empty() const { return entries.empty(); }
    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (auto& [_, k] : entries) n += k;
        return n;
    }
    bool operator==(const Obligations& o) const {
        return finished == o.finished && entries == o.entries;
    }
};

using ExpectPerms = std::map<std::pair<Sig, Degree>, std::uint64_t>;

// The six-component machine state sigma plus allocation counters.
struct MachineState {
    std::map<Loc, Val> heap;
    std::map<Loc, Val> aux_heap;
    std::map<Sig, SignalState> signals;
    std::map<Tid, Obligations> obligations;
    std::map<Tid, DegreeMultiset> call_perms;
    std::map<Tid, ExpectPerms> expect_perms;
    // Real allocations count up from zero (aux shadows share these
    // addresses). Aux-only allocations and signals draw from per-thread id
    // spaces so fresh names do not depend on the schedule; the step rules
    // only require freshness.
    Loc next_loc = 0;
    std::map<Tid, std::int64_t> aux_counters;   // aux cell index per allocating thread
    std::map<Tid, std::int64_t> sig_counters;   // signal index per burdened thread

    static constexpr Loc kAuxBase = 1LL << 40;
    static constexpr Loc kAuxStride = 1LL << 20;
    static constexpr Sig kSigStride = 1LL << 20;

    Loc alloc_aux(Tid tid, std::int64_t cells) {
        std::int64_t& k = aux_counters[tid];
        Loc base = kAuxBase + tid * kAuxStride + k;
        k += cells;
        return base;
    }
    Sig alloc_signal(Tid target) {
        std::int64_t& k = sig_counters[target];
        return target * kSigStride + k++;
    }

    bool thread_known(Tid t) const { return obligations.count(t) != 0; }
};

struct ThreadPool {
    // tids strictly increasing in spawn order; tid 1 is the main thread
    std::vector<std::pair<Tid, ExprPtr>> threads;

    const ExprPtr* find(Tid t) const {
        for (auto& [tid, e] : threads)
            if (tid == t) return &e;
        return nullptr;
    }
    void set(Tid t, ExprPtr e) {
        for (auto& [tid, ex] : threads)
            if (tid == t) {
                ex = std::move(e);
                return;
            }
    }
    bool all_values() const {
        for (auto& [_, e] : threads)
            if (!is_value(e)) return false;
        return true;
    }
};

struct Config {
    ThreadPool pool;
    MachineState state;
};

class StateError : public std::runtime_error {
public:
    explicit StateError(const std::string& w) : std::runtime_error(w) {}
};

// Initial configuration: one thread (tid 1) running `main ; Finish`, empty
// heaps and signals, the program's initial call-permission stock.
Config init_config(const Prog& p);

// Spawns a thread: new tid is the smallest positive tid never used,
// transferred obligations move from parent to child, call and expect
// permissions are copied, forkee runs `body ; Finish`.
// Throws StateError("ObligationNotHeld ...") when a transferred signal is not
// one of the parent's obligations (duplicates need multiplicity).
std::pair<Config, Tid> spawn_thread(const Config& c, Tid parent,
                                    const std::vector<Sig>& transferred, const ExprPtr& body);

// Structural 64-bit digest over a canonical ordering of all maps.
std::uint64_t canonical_hash(const Config& c);

// Canonical text form of a configuration, for golden tests.
std::string to_canonical_text(const Config& c);

// Checks the documented MachineState/Config invariants; returns an error
// description or nullopt.
std::optional<std::string> validate(const Config& c);

bool config_equal(const Config& a, const Config& b);

}  // namespace hlt
