#include "secgraph/bench.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <numeric>
#include <optional>
#include <random>
#include <set>

#include "secgraph/accumulator.hpp"
#include "secgraph/graph.hpp"
#include "secgraph/store.hpp"

namespace secgraph {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// capacity is a slot budget; buckets hold 4 slots and must be a power of two.
uint32_t bucket_count_for(unsigned capacity) {
    auto buckets = static_cast<uint64_t>((capacity + 3) / 4);
    return static_cast<uint32_t>(std::bit_ceil(std::max<uint64_t>(buckets, 1)));
}

TrustedConfig trusted_config_for(const BenchConfig& cfg, Protocol proto, size_t digest_cache,
                                 unsigned pad) {
    TrustedConfig t;
    t.protocol = proto;
    t.filter_params.bucket_count = bucket_count_for(cfg.capacity);
    t.acc_group_capacity = cfg.group_size;
    t.seed = cfg.seed;
    t.id_pad_width = pad;
    if (proto == Protocol::kVSecGraphA) t.digest_cache_capacity = digest_cache;
    return t;
}

// Store + optional adversary + transport + trusted core, wired for one
// benchmark pass. The transport tap counts every boundary round trip.
struct BenchRig {
    TrustedConfig tcfg;
    Server server;
    std::optional<TamperingEndpoint> tamper;
    DirectTransport tx;
    TrustedCore core;
    uint64_t boundary_calls = 0;

    BenchRig(const BenchConfig& cfg, Protocol proto, size_t digest_cache,
             std::optional<TamperMode> mode, unsigned pad = 0)
        : tcfg(trusted_config_for(cfg, proto, digest_cache, pad)),
          server(proto == Protocol::kSecGraph ? StoreMode::kServerFilters
                                              : StoreMode::kBlobFilters,
                 tcfg.filter_params,
                 proto == Protocol::kVSecGraphA
                     ? std::optional<AccumulatorPublic>([&] {
                           AccumulatorKey k =
                               AccumulatorKey::generate(tcfg.acc_modulus_bits, tcfg.seed);
                           return AccumulatorPublic{k.n, k.g};
                       }())
                     : std::nullopt),
          tamper(mode ? std::optional<TamperingEndpoint>(std::in_place, server, *mode,
                                                         cfg.seed ^ 0x7ad5u)
                      : std::nullopt),
          tx(tamper ? static_cast<Endpoint&>(*tamper) : static_cast<Endpoint&>(server)),
          core(tcfg, tx) {
        tx.tap = [this](const Bytes&, const Bytes&) { ++boundary_calls; };
    }

    uint64_t splits() const {
        return tcfg.protocol == Protocol::kSecGraph
                   ? server.split_count()
                   : static_cast<uint64_t>(server.filter_count()) - 1;
    }
};

// Synthesized search workload: cfg.n keyword families of exactly cfg.c ids
// each, sharing a controlled block so any conjunction of two or more
// families intersects to the shared ids alone.
struct Families {
    std::vector<std::string> keywords;
    std::vector<uint64_t> shared;
    std::vector<std::vector<uint64_t>> fillers;  // per keyword, disjoint across keywords
    uint64_t next_fresh = 0;
};

Families build_families(TrustedCore& core, const BenchConfig& cfg) {
    Families f;
    unsigned shared = std::max(1u, cfg.c / 10);
    for (uint64_t s = 1; s <= shared; ++s) f.shared.push_back(s);
    for (unsigned i = 0; i < cfg.n; ++i) {
        std::string w = "f" + std::to_string(i) + ":bench";
        f.keywords.push_back(w);
        std::vector<uint64_t> mine;
        uint64_t base = 1'000'000 + static_cast<uint64_t>(i) * cfg.c;
        for (unsigned j = 0; shared + j < cfg.c; ++j) mine.push_back(base + 1 + j);
        for (uint64_t id : f.shared) core.update({w, id, 1, UpdateOp::kInsert, false});
        for (uint64_t id : mine) core.update({w, id, 1, UpdateOp::kInsert, false});
        f.fillers.push_back(std::move(mine));
    }
    f.next_fresh = 500'000'000;
    return f;
}

// Swap one filler of the driving family for a fresh id. The live counter is
// unchanged, so the next search issues byte-identical load requests whose
// honest answers have moved: exactly the window a stale replay needs.
void mutate_driving_family(TrustedCore& core, Families& f) {
    std::vector<uint64_t>& mine = f.fillers.front();
    if (mine.empty()) return;  // c == 1: no filler to swap without changing results
    const std::string& w = f.keywords.front();
    core.update({w, mine.back(), 0, UpdateOp::kDelete, false});
    mine.pop_back();
    uint64_t fresh = f.next_fresh++;
    core.update({w, fresh, 1, UpdateOp::kInsert, false});
    mine.push_back(fresh);
}

// What an honest conjunction of the first k families returns right now.
std::vector<uint64_t> oracle_ids(const Families& f, unsigned k) {
    std::vector<uint64_t> ids = f.shared;
    if (k == 1) ids.insert(ids.end(), f.fillers.front().begin(), f.fillers.front().end());
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<std::string> first_keywords(const Families& f, unsigned k) {
    return {f.keywords.begin(), f.keywords.begin() + k};
}

void write_elapsed(std::ostream& out, double ms) {
    out << std::fixed << std::setprecision(3) << ms << std::defaultfloat;
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        log << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        log << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return 1;
    }
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write output file: " + path);
    return out;
}

}  // namespace

void validate_config(const BenchConfig& cfg) {
    if (!(cfg.fraction > 0.0) || cfg.fraction > 1.0)
        throw std::invalid_argument("fraction must be in (0, 1]");
    if (cfg.n < 1 || cfg.n > 10) throw std::invalid_argument("n must be in [1, 10]");
    if (cfg.c == 0) throw std::invalid_argument("c must be positive");
    if (cfg.capacity == 0) throw std::invalid_argument("capacity must be positive");
    if (cfg.fp_bits != 16) throw std::invalid_argument("fp-bits must be 16");
    if (cfg.group_size == 0) throw std::invalid_argument("group-size must be positive");
    parse_protocol(cfg.protocol);
    parse_adversary(cfg.adversary);
    if (parse_protocol(cfg.protocol) == Protocol::kVSecGraphA && cfg.seed == 0)
        throw std::invalid_argument("vsecgraph-a requires a nonzero seed");
}

Protocol parse_protocol(const std::string& name) {
    if (name == "secgraph") return Protocol::kSecGraph;
    if (name == "vsecgraph") return Protocol::kVSecGraph;
    if (name == "vsecgraph-a" || name == "vsecgraph_a") return Protocol::kVSecGraphA;
    throw std::invalid_argument("unknown protocol: " + name);
}

TamperMode parse_adversary(const std::string& name) {
    if (name == "honest") return TamperMode::kHonest;
    if (name == "tamper-tset" || name == "tamper_tset") return TamperMode::kTamperTset;
    if (name == "tamper-xset" || name == "tamper_xset") return TamperMode::kTamperXset;
    if (name == "drop-entry" || name == "drop_entry") return TamperMode::kDropEntry;
    if (name == "stale-replay" || name == "stale_replay") return TamperMode::kStaleReplay;
    throw std::invalid_argument("unknown adversary mode: " + name);
}

std::string resolve_output(const BenchConfig& cfg, const std::string& verb) {
    std::filesystem::path path =
        cfg.output.empty() ? std::filesystem::path(verb + ".csv")
                           : std::filesystem::path(cfg.output);
    if (const char* dir = std::getenv("SECGRAPH_OUTPUT_DIR"); dir && *dir)
        return (std::filesystem::path(dir) / path.filename()).string();
    return path.string();
}

std::vector<BuildRow> run_build(const BenchConfig& cfg) {
    validate_config(cfg);
    Protocol proto = parse_protocol(cfg.protocol);

    std::ifstream in(cfg.dataset);
    if (!in) throw IoError("cannot open dataset: " + cfg.dataset);
    PlainGraph g = parse_edge_list(in);

    std::vector<Edge> stream = g.edges();
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(stream.begin(), stream.end(), rng);

    std::vector<double> grid;
    for (double f : {0.2, 0.4, 0.6, 0.8, 1.0})
        if (f <= cfg.fraction + 1e-9) grid.push_back(f);
    if (grid.empty() || grid.back() < cfg.fraction - 1e-9) grid.push_back(cfg.fraction);

    std::vector<BuildRow> rows;
    for (double f : grid) {
        auto take = static_cast<size_t>(f * static_cast<double>(stream.size()) + 1e-9);
        // One verified digest per distinct keyword; keep them all resident so
        // accumulator witnesses are fetched at most once per keyword.
        BenchRig rig(cfg, proto, 2 * take + 64, std::nullopt);

        uint64_t before = rig.boundary_calls;
        auto t0 = Clock::now();
        for (size_t i = 0; i < take; ++i) {
            const Edge& e = stream[i];
            rig.core.update({rig.core.format_id(e.u) + ":friend", e.v, e.weight,
                             UpdateOp::kInsert, false});
            rig.core.update({rig.core.format_id(e.v) + ":friend", e.u, e.weight,
                             UpdateOp::kInsert, false});
        }

        BuildRow row;
        row.fraction = f;
        row.edges = take;
        row.elapsed_ms = ms_since(t0);
        row.splits = rig.splits();
        row.boundary_calls = rig.boundary_calls - before;
        rows.push_back(row);
    }
    return rows;
}

std::vector<SearchRow> run_search(const BenchConfig& cfg) {
    validate_config(cfg);
    Protocol proto = parse_protocol(cfg.protocol);
    BenchRig rig(cfg, proto, 0, std::nullopt);
    Families fam = build_families(rig.core, cfg);

    std::vector<SearchRow> rows;
    for (unsigned k = 1; k <= cfg.n; ++k) {
        std::vector<std::string> ws = first_keywords(fam, k);
        SearchRow row;
        row.n = k;
        row.c = cfg.c;
        std::vector<double> samples;
        for (unsigned rep = 0; rep < kBenchReps; ++rep) {
            uint64_t before = rig.boundary_calls;
            auto t0 = Clock::now();
            SearchResult r = rig.core.search_conjunctive(ws);
            samples.push_back(ms_since(t0));
            if (rep == 0) {
                row.result_size = r.ids.size();
                row.membership_checks = r.stats.membership_checks;
                row.subfilters_loaded = r.stats.subfilters_loaded;
                row.boundary_calls = rig.boundary_calls - before;
            }
        }
        row.elapsed_ms = median_of(samples);
        row.mean_ms = mean_of(samples);
        rows.push_back(row);
    }
    return rows;
}

std::vector<SearchRow> run_verify(const BenchConfig& cfg) {
    validate_config(cfg);
    Protocol proto = parse_protocol(cfg.protocol);
    TamperMode mode = parse_adversary(cfg.adversary);
    BenchRig rig(cfg, proto, 0, mode);
    Families fam = build_families(rig.core, cfg);

    std::vector<SearchRow> rows;
    for (unsigned k = 1; k <= cfg.n; ++k) {
        std::vector<std::string> ws = first_keywords(fam, k);
        SearchRow row;
        row.n = k;
        row.c = cfg.c;

        // Honest baseline: latency plus the work counters.
        rig.tamper->disarm();
        std::vector<double> honest_ms;
        std::vector<uint64_t> honest_ids;
        for (unsigned rep = 0; rep < kBenchReps; ++rep) {
            uint64_t before = rig.boundary_calls;
            auto t0 = Clock::now();
            SearchResult r = rig.core.search_conjunctive(ws);
            honest_ms.push_back(ms_since(t0));
            if (rep == 0) {
                honest_ids = r.ids;
                row.result_size = r.ids.size();
                row.membership_checks = r.stats.membership_checks;
                row.subfilters_loaded = r.stats.subfilters_loaded;
                row.boundary_calls = rig.boundary_calls - before;
            }
        }
        row.elapsed_ms = median_of(honest_ms);
        row.mean_ms = mean_of(honest_ms);

        // Armed rounds: the adversary deviates at most once per repetition.
        // A deviation either raises a violation (detection) or slips through;
        // a slip whose result still matches the honest answer is a collision.
        std::vector<double> armed_ms;
        for (unsigned rep = 0; rep < kBenchReps; ++rep) {
            std::vector<uint64_t> expected = honest_ids;
            if (mode == TamperMode::kStaleReplay) {
                rig.tamper->disarm();
                mutate_driving_family(rig.core, fam);
                expected = oracle_ids(fam, k);
            }
            rig.tamper->arm();
            bool detected = false;
            std::optional<std::vector<uint64_t>> got;
            auto t0 = Clock::now();
            try {
                got = rig.core.search_conjunctive(ws).ids;
            } catch (const IntegrityViolation&) {
                detected = true;
            } catch (const ProtocolError&) {
                detected = true;
            }
            armed_ms.push_back(ms_since(t0));
            if (rig.tamper->deviated()) {
                if (detected)
                    ++row.detections;
                else if (got && *got == expected)
                    ++row.collisions;
            }
            rig.tamper->disarm();
        }
        row.verify_ms = median_of(armed_ms);
        rows.push_back(row);
    }
    return rows;
}

void write_build_csv(std::ostream& out, const std::vector<BuildRow>& rows) {
    out << "fraction,edges,elapsed_ms,splits,boundary_calls\n";
    for (const BuildRow& r : rows) {
        out << r.fraction << ',' << r.edges << ',';
        write_elapsed(out, r.elapsed_ms);
        out << ',' << r.splits << ',' << r.boundary_calls << '\n';
    }
}

void write_search_csv(std::ostream& out, const std::vector<SearchRow>& rows) {
    out << "n,c,elapsed_ms,result_size,membership_checks,subfilters_loaded,"
           "boundary_calls,verify_ms,detections,collisions,mean_ms\n";
    for (const SearchRow& r : rows) {
        out << r.n << ',' << r.c << ',';
        write_elapsed(out, r.elapsed_ms);
        out << ',' << r.result_size << ',' << r.membership_checks << ','
            << r.subfilters_loaded << ',' << r.boundary_calls << ',';
        write_elapsed(out, r.verify_ms);
        out << ',' << r.detections << ',' << r.collisions << ',';
        write_elapsed(out, r.mean_ms);
        out << '\n';
    }
}

int cmd_build(const BenchConfig& cfg, std::ostream& log) {
    return guarded(log, [&] {
        std::vector<BuildRow> rows = run_build(cfg);
        std::string path = resolve_output(cfg, "build");
        std::ofstream out = open_output(path);
        write_build_csv(out, rows);
        for (const BuildRow& r : rows)
            log << "build fraction " << r.fraction << ": " << r.edges << " edges, "
                << r.splits << " splits, " << r.boundary_calls << " round trips, "
                << r.elapsed_ms << " ms\n";
        log << "wrote " << path << "\n";
        return 0;
    });
}

int cmd_search(const BenchConfig& cfg, std::ostream& log) {
    return guarded(log, [&] {
        std::vector<SearchRow> rows = run_search(cfg);
        std::string path = resolve_output(cfg, "search");
        std::ofstream out = open_output(path);
        write_search_csv(out, rows);
        for (const SearchRow& r : rows)
            log << "search n=" << r.n << ": " << r.result_size << " ids, "
                << r.membership_checks << " membership checks, median " << r.elapsed_ms
                << " ms\n";
        log << "wrote " << path << "\n";
        return 0;
    });
}

int cmd_verify(const BenchConfig& cfg, std::ostream& log) {
    return guarded(log, [&] {
        std::vector<SearchRow> rows = run_verify(cfg);
        std::string path = resolve_output(cfg, "verify");
        std::ofstream out = open_output(path);
        write_search_csv(out, rows);
        for (const SearchRow& r : rows)
            log << "verify n=" << r.n << " (" << cfg.adversary << "): " << r.detections
                << " detections, " << r.collisions << " collisions over " << kBenchReps
                << " armed rounds\n";
        log << "wrote " << path << "\n";
        return 0;
    });
}

int cmd_selftest(const BenchConfig& cfg, std::ostream& log) {
    return guarded(log, [&] {
        int fails = run_selftest(log, cfg.seed == 0 ? 1 : cfg.seed);
        log << (fails == 0 ? "selftest passed\n" : "selftest FAILED\n");
        return fails == 0 ? 0 : 1;
    });
}

int run_selftest(std::ostream& log, uint64_t seed) {
    int fails = 0;
    auto check = [&](const std::string& name, bool ok, const std::string& detail = "") {
        log << (ok ? "PASS " : "FAIL ") << name;
        if (!detail.empty()) log << " (" << detail << ")";
        log << "\n";
        if (!ok) ++fails;
    };

    BenchConfig base;
    base.seed = seed;
    base.capacity = 4096;
    const Protocol kAll[] = {Protocol::kSecGraph, Protocol::kVSecGraph,
                             Protocol::kVSecGraphA};
    auto proto_name = [](Protocol p) {
        return p == Protocol::kSecGraph ? "secgraph"
               : p == Protocol::kVSecGraph ? "vsecgraph"
                                           : "vsecgraph-a";
    };

    // Worked example: the two friend queries and the name split.
    for (Protocol proto : kAll) {
        BenchRig rig(base, proto, 64, std::nullopt, 3);
        load_graph(rig.core, toy_graph(), "friend");
        load_names(rig.core, toy_names());
        auto conj = rig.core.search_conjunctive({"003:friend", "005:friend"});
        check(std::string("toy conjunction (") + proto_name(proto) + ")",
              conj.ids == std::vector<uint64_t>{2});
        auto hop = rig.core.search_single("003:friend", 2);
        bool has5 = std::count(hop.ids.begin(), hop.ids.end(), 5) == 1;
        std::set<uint64_t> want = oracle_khop(toy_graph(), 3, 2);
        check(std::string("toy 2-hop (") + proto_name(proto) + ")",
              has5 && std::set<uint64_t>(hop.ids.begin(), hop.ids.end()) == want);
        auto [anchor, grams] = substring_query("Harry");
        auto fz = rig.core.search_fuzzy(anchor, grams);
        check(std::string("toy fuzzy (") + proto_name(proto) + ")",
              fz.ids == std::vector<uint64_t>{1});
    }

    // Oracle equivalence over random graphs: conjunctions never lose an id
    // and k-hop expansion matches the plaintext walk.
    for (Protocol proto : kAll) {
        std::mt19937_64 rng(seed + 7);
        bool conj_ok = true;
        bool hop_ok = true;
        std::string detail;
        for (int gi = 0; gi < 3 && conj_ok && hop_ok; ++gi) {
            PlainGraph g = random_graph(40, 90, seed + 11 * gi);
            BenchRig rig(base, proto, 256, std::nullopt);
            load_graph(rig.core, g, "friend");
            std::vector<uint64_t> ids = g.vertex_ids();
            for (int q = 0; q < 20 && conj_ok; ++q) {
                unsigned width = 1 + static_cast<unsigned>(rng() % 3);
                std::vector<std::string> ws;
                std::set<uint64_t> oracle;
                for (unsigned j = 0; j < width; ++j) {
                    uint64_t u = ids[rng() % ids.size()];
                    ws.push_back(rig.core.format_id(u) + ":friend");
                    std::set<uint64_t> nb;
                    for (const auto& kv : g.neighbors(u)) nb.insert(kv.first);
                    if (j == 0)
                        oracle = nb;
                    else {
                        std::set<uint64_t> both;
                        std::set_intersection(oracle.begin(), oracle.end(), nb.begin(),
                                              nb.end(), std::inserter(both, both.begin()));
                        oracle = both;
                    }
                }
                auto got = rig.core.search_conjunctive(ws);
                for (uint64_t v : oracle)
                    if (!std::count(got.ids.begin(), got.ids.end(), v)) {
                        conj_ok = false;
                        detail = "lost vertex " + std::to_string(v);
                    }
                if (got.ids.size() > oracle.size() + 2) {
                    conj_ok = false;
                    detail = "result grew past the filter bound";
                }
            }
            for (int q = 0; q < 5 && hop_ok; ++q) {
                uint64_t u = ids[rng() % ids.size()];
                unsigned hops = 1 + static_cast<unsigned>(rng() % 3);
                auto got = rig.core.search_single(rig.core.format_id(u) + ":friend", hops);
                std::set<uint64_t> want2 = oracle_khop(g, u, hops);
                if (std::set<uint64_t>(got.ids.begin(), got.ids.end()) != want2) {
                    hop_ok = false;
                    detail = "hop expansion diverged";
                }
            }
        }
        check(std::string("oracle equivalence (") + proto_name(proto) + ")",
              conj_ok && hop_ok, detail);
    }

    // Dynamic churn against a plaintext oracle, ending in drain and reinsert.
    {
        BenchRig rig(base, Protocol::kVSecGraph, 0, std::nullopt);
        std::mt19937_64 rng(seed + 23);
        std::set<uint64_t> live;
        bool ok = true;
        for (int step = 0; step < 80 && ok; ++step) {
            unsigned roll = rng() % 3;
            if (roll == 0 || live.empty()) {
                uint64_t id = 1 + rng() % 40;
                if (live.insert(id).second)
                    rig.core.update({"churn:test", id, 1, UpdateOp::kInsert, false});
            } else if (roll == 1) {
                uint64_t id = *live.begin();
                rig.core.update({"churn:test", id, 0, UpdateOp::kDelete, false});
                live.erase(id);
            } else {
                auto got = rig.core.search_single("churn:test", 1);
                ok = std::set<uint64_t>(got.ids.begin(), got.ids.end()) == live;
            }
        }
        for (uint64_t id : live)
            rig.core.update({"churn:test", id, 0, UpdateOp::kDelete, false});
        ok = ok && rig.core.search_single("churn:test", 1).ids.empty();
        rig.core.update({"churn:test", 7, 1, UpdateOp::kInsert, false});
        ok = ok && rig.core.search_single("churn:test", 1).ids ==
                       std::vector<uint64_t>{7};
        check("dynamic churn tracks the oracle", ok);
    }

    // Tamper spot checks: each adversary mode must abort a verified search.
    for (TamperMode mode : {TamperMode::kTamperTset, TamperMode::kTamperXset,
                            TamperMode::kDropEntry, TamperMode::kStaleReplay}) {
        for (Protocol proto : {Protocol::kVSecGraph, Protocol::kVSecGraphA}) {
            BenchRig rig(base, proto, 0, mode);
            Families fam = [&] {
                BenchConfig small = base;
                small.n = 2;
                small.c = 8;
                return build_families(rig.core, small);
            }();
            std::vector<std::string> ws = first_keywords(fam, 2);
            auto honest = rig.core.search_conjunctive(ws);
            bool honest_ok = honest.ids == oracle_ids(fam, 2);
            if (mode == TamperMode::kStaleReplay) mutate_driving_family(rig.core, fam);
            rig.tamper->arm();
            bool detected = false;
            std::string named;
            try {
                rig.core.search_conjunctive(ws);
            } catch (const IntegrityViolation& e) {
                detected = true;
                named = e.what();
            }
            rig.tamper->disarm();
            check(std::string(tamper_mode_name(mode)) + " detected (" +
                      proto_name(proto) + ")",
                  honest_ok && detected && rig.tamper->deviated(), named);
        }
    }

    // Completeness: an honest wrapper never trips verification.
    {
        BenchRig rig(base, Protocol::kVSecGraphA, 0, TamperMode::kHonest);
        Families fam = [&] {
            BenchConfig small = base;
            small.n = 2;
            small.c = 12;
            return build_families(rig.core, small);
        }();
        bool ok = true;
        for (int rep = 0; rep < 20 && ok; ++rep) {
            rig.tamper->arm();
            try {
                ok = rig.core.search_conjunctive(first_keywords(fam, 2)).ids ==
                     oracle_ids(fam, 2);
            } catch (const std::exception&) {
                ok = false;
            }
        }
        check("honest rounds stay clean", ok && rig.tamper->deviation_count() == 0);
    }

    return fails;
}

}  // namespace secgraph
