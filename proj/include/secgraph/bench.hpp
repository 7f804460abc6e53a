#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "secgraph/adversary.hpp"
#include "secgraph/enclave.hpp"

namespace secgraph {

// One benchmark invocation. CLI flags mirror these field names; validate()
// rejects out-of-range values before any work starts.
struct BenchConfig {
    std::string dataset;                 // --dataset: edge-list path (build)
    std::string names;                   // --names: optional "id,name" corpus
    double fraction = 1.0;               // --fraction: edge-stream prefix, (0, 1]
    std::string protocol = "vsecgraph";  // --protocol: secgraph | vsecgraph | vsecgraph-a
    unsigned n = 2;                      // --n: max conjunction width, rows sweep 1..n
    unsigned c = 130;                    // --c: posting-list size per keyword family
    unsigned capacity = 10000;           // --capacity: sub-filter slot budget
    unsigned fp_bits = 16;               // --fp-bits: fingerprint width (fixed)
    unsigned group_size = 200;           // --group-size: accumulator group capacity
    std::string adversary = "honest";    // --adversary: honest | tamper-tset |
                                         //   tamper-xset | drop-entry | stale-replay
    std::string output;                  // --output: CSV path (verb default otherwise)
    uint64_t seed = 1;                   // --seed
};

// A dataset or output file could not be opened.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Throws std::invalid_argument on any violated range.
void validate_config(const BenchConfig& cfg);

Protocol parse_protocol(const std::string& name);
TamperMode parse_adversary(const std::string& name);

// Output path resolution: explicit --output wins; otherwise
// "<verb>.csv" inside $SECGRAPH_OUTPUT_DIR (or the working directory).
std::string resolve_output(const BenchConfig& cfg, const std::string& verb);

struct BuildRow {
    double fraction = 0;
    size_t edges = 0;
    double elapsed_ms = 0;
    uint64_t splits = 0;
    uint64_t boundary_calls = 0;
};

struct SearchRow {
    unsigned n = 0;
    unsigned c = 0;
    double elapsed_ms = 0;  // median over the repetitions
    size_t result_size = 0;
    size_t membership_checks = 0;
    size_t subfilters_loaded = 0;
    size_t boundary_calls = 0;
    double verify_ms = 0;  // median armed-round latency (verify runs only)
    unsigned detections = 0;
    unsigned collisions = 0;
    double mean_ms = 0;  // mean over the same repetitions
};

// Build: one fresh encrypted database per fraction step (0.2 grid up to
// cfg.fraction), streaming every update token through the trusted core.
std::vector<BuildRow> run_build(const BenchConfig& cfg);

// Search: synthesized keyword families of exactly c ids with a controlled
// shared intersection; one row per conjunction width 1..n, each timed over
// kBenchReps repetitions.
std::vector<SearchRow> run_search(const BenchConfig& cfg);

// Verify: the search workload against a store wrapped in the configured
// adversary; armed rounds count detections and fp-masked collisions.
std::vector<SearchRow> run_verify(const BenchConfig& cfg);

// Desk-scale correctness pass; prints one line per check, returns the number
// of failed checks.
int run_selftest(std::ostream& log, uint64_t seed = 1);

inline constexpr unsigned kBenchReps = 20;

void write_build_csv(std::ostream& out, const std::vector<BuildRow>& rows);
void write_search_csv(std::ostream& out, const std::vector<SearchRow>& rows);

// Verb entry points used by the CLI: run, write the CSV, log a summary.
// Exit codes: 0 success, 1 failed invariant or invalid config, 2 IO/parse.
int cmd_build(const BenchConfig& cfg, std::ostream& log);
int cmd_search(const BenchConfig& cfg, std::ostream& log);
int cmd_verify(const BenchConfig& cfg, std::ostream& log);
int cmd_selftest(const BenchConfig& cfg, std::ostream& log);

}  // namespace secgraph
