// Command-line front end: run, erase, check, explore, fuel, corpus.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hlt/corpus.hpp"
#include "hlt/discipline.hpp"
#include "hlt/erasure.hpp"
#include "hlt/parser.hpp"
#include "hlt/pretty.hpp"
#include "hlt/scheduler.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStuck = 2;
constexpr int kExitCap = 3;
constexpr int kExitBadInput = 4;
constexpr int kExitTruncated = 5;
constexpr int kExitIo = 10;

struct LoadedProgram {
    hlt::Prog prog;
    std::optional<hlt::CorpusEntry> entry;
    std::string display;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

LoadedProgram load_program(const std::string& spec) {
    LoadedProgram lp;
    lp.display = spec;
    if (spec.rfind("corpus:", 0) == 0) {
        std::string name = spec.substr(7);
        const char* dir = std::getenv("GHOSTLANG_CORPUS_DIR");
        if (dir && *dir) {
            std::string path = std::string(dir) + "/" + name + ".hlt";
            lp.prog = hlt::parse(read_file(path));
            lp.display = path;
            // still pick up the entry metadata (mode, script, caps) if known
            lp.entry = hlt::entry_by_name(name);
            return lp;
        }
        auto e = hlt::entry_by_name(name);
        if (!e) throw std::invalid_argument("unknown corpus entry '" + name + "'");
        lp.prog = e->prog;
        lp.entry = std::move(e);
        return lp;
    }
    lp.prog = hlt::parse(read_file(spec));
    return lp;
}

hlt::Mode parse_mode(const std::string& m) {
    if (m == "sound") return hlt::Mode::sound();
    if (m == "unsound") return hlt::Mode::unsound();
    if (m == "plain") return hlt::Mode::plain_mode();
    if (m == "strict") return hlt::Mode::strict();
    throw std::invalid_argument("unknown mode '" + m + "'");
}

std::vector<hlt::Tid> read_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    std::vector<hlt::Tid> tids;
    long long t;
    while (in >> t) tids.push_back(t);
    return tids;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
    out << content;
}

int exit_code_for(const hlt::Execution& ex) {
    switch (ex.status) {
        case hlt::RunStatus::AllFinished:
        case hlt::RunStatus::Aborted:
            return kExitOk;
        case hlt::RunStatus::Stuck:
            return kExitStuck;
        case hlt::RunStatus::StepCapExceeded:
            return kExitCap;
    }
    return kExitBadInput;
}

void print_summary(const hlt::Execution& ex) {
    switch (ex.status) {
        case hlt::RunStatus::AllFinished:
            std::cout << "AllFinished in " << ex.steps.size() << " steps\n";
            break;
        case hlt::RunStatus::Aborted:
            std::cout << "Aborted after " << ex.steps.size() << " steps\n";
            break;
        case hlt::RunStatus::StepCapExceeded:
            std::cout << "StepCapExceeded after " << ex.steps.size() << " steps\n";
            break;
        case hlt::RunStatus::Stuck:
            std::cout << "Stuck after " << ex.steps.size() << " steps: " << ex.stuck.to_string()
                      << "\n";
            break;
    }
    std::cout << "final hash: " << ex.final_hash << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HeapLangLT interpreter, fair-schedule runner, interleaving explorer and eraser"};
    app.require_subcommand(1);

    std::string prog_spec, policy = "rr", mode_str, trace_path, out_path, script_path;
    std::uint64_t seed = 0, cap = 0, depth = 0, visited = 0;
    long long fuel_tid = 0;
    std::string corpus_cmd = "list", corpus_out = "corpus";

    auto* c_run = app.add_subcommand("run", "run a program to completion under a schedule");
    c_run->add_option("program", prog_spec, "path to a .hlt file or corpus:<name>")->required();
    c_run->add_option("--policy", policy, "rr|random|script:<file>");
    c_run->add_option("--seed", seed, "seed for the random policy");
    c_run->add_option("--cap", cap, "step cap (default 100000 or the entry's cap)");
    c_run->add_option("--mode", mode_str, "sound|unsound|plain|strict");
    c_run->add_option("--trace", trace_path, "write the JSON trace here");

    auto* c_erase = app.add_subcommand("erase", "erase a program to the plain dialect");
    c_erase->add_option("program", prog_spec)->required();
    c_erase->add_option("--out", out_path, "output .hlt path (default: stdout)");

    auto* c_check = app.add_subcommand("check", "check the erasability discipline");
    c_check->add_option("program", prog_spec)->required();

    auto* c_explore = app.add_subcommand("explore", "bounded exhaustive interleaving exploration");
    c_explore->add_option("program", prog_spec)->required();
    c_explore->add_option("--depth", depth, "path depth cap");
    c_explore->add_option("--visited", visited, "visited-state cap");
    c_explore->add_option("--mode", mode_str, "sound|unsound|plain|strict");
    c_explore->add_option("--trace", trace_path, "write a stuck witness trace here");

    auto* c_fuel = app.add_subcommand("fuel", "path-fuel diagnostic over a recorded trace");
    c_fuel->add_option("trace", trace_path, "trace file from run --trace")->required();
    c_fuel->add_option("tid", fuel_tid, "thread path to check")->required();

    auto* c_corpus = app.add_subcommand("corpus", "list, show or export the built-in corpus");
    c_corpus->add_option("action", corpus_cmd, "list|show <name>|export");
    c_corpus->add_option("name", prog_spec, "entry name for 'show'");
    c_corpus->add_option("--out", corpus_out, "directory for 'export'");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_run->parsed()) {
            LoadedProgram lp = load_program(prog_spec);
            hlt::RunOptions opts;
            opts.step_cap = cap        ? cap
                            : lp.entry ? lp.entry->step_cap
                                       : 100000;
            if (!mode_str.empty()) opts.mode = parse_mode(mode_str);
            else if (lp.entry) opts.mode = lp.entry->mode;
            hlt::SchedulePolicy pol = hlt::SchedulePolicy::round_robin();
            if (policy == "random") pol = hlt::SchedulePolicy::random_fair(seed);
            else if (policy.rfind("script:", 0) == 0)
                pol = hlt::SchedulePolicy::scripted(read_script(policy.substr(7)));
            else if (policy == "rr" && lp.entry && !lp.entry->script.empty())
                pol = hlt::SchedulePolicy::scripted(lp.entry->script);
            hlt::Execution ex = hlt::run(lp.prog, pol, opts);
            print_summary(ex);
            if (!trace_path.empty()) write_file(trace_path, hlt::trace_to_string(ex));
            return exit_code_for(ex);
        }
        if (c_erase->parsed()) {
            LoadedProgram lp = load_program(prog_spec);
            hlt::Prog erased = hlt::erase_prog(lp.prog);
            std::string text = hlt::pretty_print(erased);
            if (out_path.empty()) std::cout << text;
            else write_file(out_path, text);
            return kExitOk;
        }
        if (c_check->parsed()) {
            LoadedProgram lp = load_program(prog_spec);
            auto rep = hlt::check_aux_discipline(lp.prog);
            if (rep.ok()) {
                std::cout << "ok\n";
                return kExitOk;
            }
            std::cout << rep.to_string();
            return kExitBadInput;
        }
        if (c_explore->parsed()) {
            LoadedProgram lp = load_program(prog_spec);
            std::uint64_t d = depth     ? depth
                              : lp.entry && lp.entry->explore_depth ? lp.entry->explore_depth
                                                                    : 400;
            std::uint64_t v = visited   ? visited
                              : lp.entry ? lp.entry->explore_visited
                                         : 1000000;
            hlt::Mode m;
            if (!mode_str.empty()) m = parse_mode(mode_str);
            else if (lp.entry) m = lp.entry->mode;
            hlt::ExploreReport rep = hlt::explore(lp.prog, d, v, m);
            std::cout << rep.to_string() << "\n";
            if (rep.any_stuck()) {
                for (auto& [label, sched] : rep.witnesses) {
                    if (label.rfind("Stuck", 0) != 0) continue;
                    std::cout << "witness (" << label << "):";
                    for (hlt::Tid t : sched) std::cout << " " << t;
                    std::cout << "\n";
                    if (!trace_path.empty()) {
                        hlt::Execution wex = hlt::replay(lp.prog, sched, m);
                        write_file(trace_path, hlt::trace_to_string(wex));
                    }
                    break;
                }
                return kExitStuck;
            }
            if (rep.truncated) return kExitTruncated;
            return kExitOk;
        }
        if (c_fuel->parsed()) {
            std::ifstream in(trace_path);
            if (!in) throw std::ios_base::failure("cannot open " + trace_path);
            hlt::PathFuelReport rep = hlt::fuel_from_trace(in, fuel_tid);
            std::cout << "path fuel for tid " << fuel_tid << ": " << rep.sequence.size()
                      << " configurations, monotone=" << (rep.monotone ? "true" : "false") << "\n";
            if (!rep.monotone) {
                std::cout << rep.violation << "\n";
                return kExitStuck;
            }
            return kExitOk;
        }
        if (c_corpus->parsed()) {
            if (corpus_cmd == "list") {
                for (auto& e : hlt::all_entries())
                    std::cout << e.name << "  -  " << e.description << "\n";
                return kExitOk;
            }
            if (corpus_cmd == "show") {
                auto e = hlt::entry_by_name(prog_spec);
                if (!e) throw std::invalid_argument("unknown corpus entry '" + prog_spec + "'");
                std::cout << e->source;
                return kExitOk;
            }
            if (corpus_cmd == "export") {
                for (auto& e : hlt::all_entries())
                    write_file(corpus_out + "/" + e.name + ".hlt", e.source);
                std::cout << "exported to " << corpus_out << "\n";
                return kExitOk;
            }
            throw std::invalid_argument("unknown corpus action '" + corpus_cmd + "'");
        }
    } catch (const hlt::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const hlt::EraseError& e) {
        std::cerr << e.what() << "\n";
        return kExitBadInput;
    } catch (const hlt::SchedulerError& e) {
        std::cerr << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    }
    return kExitBadInput;
}
