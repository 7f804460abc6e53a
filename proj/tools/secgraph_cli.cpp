#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "secgraph/bench.hpp"

namespace {

void add_common_flags(CLI::App* cmd, secgraph::BenchConfig& cfg) {
    cmd->add_option("--protocol", cfg.protocol,
                    "secgraph | vsecgraph | vsecgraph-a")
        ->capture_default_str();
    cmd->add_option("--n", cfg.n, "max conjunction width; rows sweep 1..n")
        ->capture_default_str();
    cmd->add_option("--c", cfg.c, "posting-list size per keyword family")
        ->capture_default_str();
    cmd->add_option("--capacity", cfg.capacity, "sub-filter slot budget")
        ->capture_default_str();
    cmd->add_option("--fp-bits", cfg.fp_bits, "fingerprint width (must be 16)")
        ->capture_default_str();
    cmd->add_option("--group-size", cfg.group_size,
                    "keywords per accumulator group (vsecgraph-a)")
        ->capture_default_str();
    cmd->add_option("--output", cfg.output,
                    "CSV path; defaults to <verb>.csv, directory overridable "
                    "via SECGRAPH_OUTPUT_DIR");
    cmd->add_option("--seed", cfg.seed, "deterministic key and workload seed")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Encrypted dynamic graph search benchmark"};
    app.require_subcommand(1);

    secgraph::BenchConfig cfg;

    CLI::App* build = app.add_subcommand(
        "build", "Stream a dataset's edges through the trusted core per fraction step");
    build->add_option("--dataset", cfg.dataset, "edge-list file (\"u v [weight]\" lines)")
        ->required();
    build->add_option("--fraction", cfg.fraction, "largest edge-stream fraction, in (0, 1]")
        ->capture_default_str();
    build->add_option("--names", cfg.names, "optional \"id,name\" corpus (unused by build)");
    add_common_flags(build, cfg);

    CLI::App* search = app.add_subcommand(
        "search", "Time conjunctive searches over synthesized keyword families");
    add_common_flags(search, cfg);

    CLI::App* verify = app.add_subcommand(
        "verify", "Run the search workload against an adversarial store");
    verify->add_option("--adversary", cfg.adversary,
                       "honest | tamper-tset | tamper-xset | drop-entry | stale-replay")
        ->capture_default_str();
    add_common_flags(verify, cfg);

    CLI::App* selftest = app.add_subcommand(
        "selftest", "Desk-scale correctness and tamper-detection pass");
    selftest->add_option("--seed", cfg.seed, "deterministic seed")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (build->parsed()) return secgraph::cmd_build(cfg, std::cout);
    if (search->parsed()) return secgraph::cmd_search(cfg, std::cout);
    if (verify->parsed()) return secgraph::cmd_verify(cfg, std::cout);
    if (selftest->parsed()) return secgraph::cmd_selftest(cfg, std::cout);
    return 1;
}
