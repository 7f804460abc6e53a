#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "secgraph/enclave.hpp"

namespace secgraph {

struct ParseError : std::runtime_error {
    ParseError(size_t line_no, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
          line(line_no) {}
    size_t line;
};

struct ParseStats {
    size_t duplicate_edges = 0;
    size_t self_loops = 0;
};

struct Edge {
    uint64_t u = 0;
    uint64_t v = 0;
    uint64_t weight = 1;

    bool operator==(const Edge&) const = default;
};

// Undirected simple graph; the first weight seen for an edge wins.
class PlainGraph {
public:
    // False when the edge already exists or u == v.
    bool add_edge(uint64_t u, uint64_t v, uint64_t weight = 1);
    bool has_edge(uint64_t u, uint64_t v) const;
    const std::map<uint64_t, uint64_t>& neighbors(uint64_t u) const;  // v -> weight

    size_t vertex_count() const { return adj_.size(); }
    size_t edge_count() const { return edge_count_; }
    std::vector<uint64_t> vertex_ids() const;
    std::vector<Edge> edges() const;  // one row per edge, u < v, ordered
    const std::map<uint64_t, std::map<uint64_t, uint64_t>>& adjacency() const { return adj_; }

private:
    std::map<uint64_t, std::map<uint64_t, uint64_t>> adj_;
    size_t edge_count_ = 0;
};

// Whitespace-separated "u v [weight]" lines; '#' starts a comment; weight
// defaults to 1. Duplicate edges and self-loops are dropped and counted.
// Anything unparseable raises ParseError with its 1-based line number.
PlainGraph parse_edge_list(std::istream& in, ParseStats* stats = nullptr);

// One "u v weight" line per edge, parse_edge_list-compatible.
void write_edge_list(std::ostream& out, const PlainGraph& g);

// "id,name" lines; '#' starts a comment. Raises ParseError on bad rows.
std::map<uint64_t, std::string> parse_name_csv(std::istream& in);

// Heavy-tailed random simple graph over vertex ids 1..nodes, weights 1..100.
// Deterministic in the seed.
PlainGraph random_graph(size_t nodes, size_t edges, uint64_t seed);

// BFS over plain adjacency, mirroring the trusted core's multi-hop search:
// every vertex encountered within the hop budget, start excluded unless a
// cycle reaches back to it.
std::set<uint64_t> oracle_khop(const PlainGraph& g, uint64_t start, unsigned hops);

// Name handling for fuzzy search. Names are decorated "#name'" before the
// 2-gram split so prefix and suffix queries can anchor on the markers.
std::string decorate_name(const std::string& name);
std::vector<std::pair<std::string, uint32_t>> name_tokens(const std::string& name);

// Ids whose decorated name contains q; the plain oracle for substring search.
std::set<uint64_t> oracle_substring(const std::map<uint64_t, std::string>& names,
                                    const std::string& q);

// Pronounceable random names for fuzzy workloads, deterministic in the rng.
std::string random_name(std::mt19937_64& rng);

// Inserts every directed posting ("<u>:<type>" -> v, weight) for the
// undirected graph; vertex ids go through core.format_id. Returns the number
// of update tokens applied (2 per edge).
size_t load_graph(TrustedCore& core, const PlainGraph& g, const std::string& type);

// Inserts one positional gram pair per name token. Returns tokens applied.
size_t load_names(TrustedCore& core, const std::map<uint64_t, std::string>& names);

// The worked example: vertices 001, 002, 003, 005; edges 001-002 (weight 5),
// 002-003, 002-005, 001-003; names Harry (001) and Hanna (005).
PlainGraph toy_graph();
std::map<uint64_t, std::string> toy_names();

}  // namespace secgraph
