#include "secgraph/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <string_view>

namespace secgraph {
namespace {

const std::map<uint64_t, uint64_t> kNoNeighbors;

uint64_t parse_u64(std::string_view tok, size_t line_no, const char* what) {
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(line_no, std::string("expected an unsigned integer ") + what +
                                      ", got \"" + std::string(tok) + "\"");
    return v;
}

}  // namespace

bool PlainGraph::add_edge(uint64_t u, uint64_t v, uint64_t weight) {
    if (u == v) return false;
    auto [it, fresh] = adj_[u].try_emplace(v, weight);
    if (!fresh) return false;
    adj_[v].emplace(u, weight);
    ++edge_count_;
    return true;
}

bool PlainGraph::has_edge(uint64_t u, uint64_t v) const {
    auto it = adj_.find(u);
    return it != adj_.end() && it->second.count(v);
}

const std::map<uint64_t, uint64_t>& PlainGraph::neighbors(uint64_t u) const {
    auto it = adj_.find(u);
    return it == adj_.end() ? kNoNeighbors : it->second;
}

std::vector<uint64_t> PlainGraph::vertex_ids() const {
    std::vector<uint64_t> out;
    out.reserve(adj_.size());
    for (const auto& [id, nbrs] : adj_) out.push_back(id);
    return out;
}

std::vector<Edge> PlainGraph::edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (const auto& [u, nbrs] : adj_)
        for (const auto& [v, w] : nbrs)
            if (u < v) out.push_back(Edge{u, v, w});
    return out;
}

PlainGraph parse_edge_list(std::istream& in, ParseStats* stats) {
    PlainGraph g;
    ParseStats local;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv(line);
        if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);

        std::vector<std::string_view> fields;
        size_t pos = 0;
        while (pos < sv.size()) {
            while (pos < sv.size() && std::isspace(static_cast<unsigned char>(sv[pos]))) ++pos;
            size_t start = pos;
            while (pos < sv.size() && !std::isspace(static_cast<unsigned char>(sv[pos]))) ++pos;
            if (pos > start) fields.push_back(sv.substr(start, pos - start));
        }
        if (fields.empty()) continue;
        if (fields.size() < 2) throw ParseError(line_no, "expected \"u v [weight]\"");
        if (fields.size() > 3) throw ParseError(line_no, "too many fields");

        uint64_t u = parse_u64(fields[0], line_no, "vertex id");
        uint64_t v = parse_u64(fields[1], line_no, "vertex id");
        uint64_t w = fields.size() == 3 ? parse_u64(fields[2], line_no, "edge weight") : 1;
        if (u == v) {
            ++local.self_loops;
        } else if (!g.add_edge(u, v, w)) {
            ++local.duplicate_edges;
        }
    }
    if (stats) *stats = local;
    return g;
}

void write_edge_list(std::ostream& out, const PlainGraph& g) {
    for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << ' ' << e.weight << '\n';
}

std::map<uint64_t, std::string> parse_name_csv(std::istream& in) {
    std::map<uint64_t, std::string> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv(line);
        if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
        while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.back())))
            sv.remove_suffix(1);
        while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.front())))
            sv.remove_prefix(1);
        if (sv.empty()) continue;
        auto comma = sv.find(',');
        if (comma == std::string_view::npos)
            throw ParseError(line_no, "expected \"id,name\"");
        uint64_t id = parse_u64(sv.substr(0, comma), line_no, "vertex id");
        std::string_view name = sv.substr(comma + 1);
        while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front())))
            name.remove_prefix(1);
        if (name.empty()) throw ParseError(line_no, "empty name");
        if (!out.emplace(id, std::string(name)).second)
            throw ParseError(line_no, "duplicate vertex id");
    }
    return out;
}

PlainGraph random_graph(size_t nodes, size_t edges, uint64_t seed) {
    if (nodes < 2) throw std::invalid_argument("need at least two vertices");
    if (edges > nodes * (nodes - 1) / 2)
        throw std::invalid_argument("edge count exceeds the simple-graph maximum");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<uint64_t> uniform(1, nodes);
    PlainGraph g;
    std::vector<uint64_t> pool;  // one entry per edge endpoint: degree-proportional
    size_t stalled = 0;
    uint64_t sweep_u = 1;
    while (g.edge_count() < edges) {
        uint64_t u = (!pool.empty() && (rng() & 3) != 0) ? pool[rng() % pool.size()]
                                                         : uniform(rng);
        uint64_t v = uniform(rng);
        uint64_t w = 1 + rng() % 100;
        if (u != v && g.add_edge(u, v, w)) {
            pool.push_back(u);
            pool.push_back(v);
            stalled = 0;
            continue;
        }
        // Near saturation random pairs keep colliding; sweep for a free slot.
        if (++stalled > 64) {
            for (; sweep_u <= nodes && g.edge_count() < edges; ++sweep_u)
                for (uint64_t sv = sweep_u + 1; sv <= nodes; ++sv)
                    if (g.add_edge(sweep_u, sv, 1 + rng() % 100) && g.edge_count() >= edges)
                        break;
            stalled = 0;
        }
    }
    return g;
}

std::set<uint64_t> oracle_khop(const PlainGraph& g, uint64_t start, unsigned hops) {
    std::set<uint64_t> found;
    std::set<uint64_t> expanded{start};
    std::vector<uint64_t> frontier{start};
    for (unsigned hop = 0; hop < hops && !frontier.empty(); ++hop) {
        std::vector<uint64_t> next;
        for (uint64_t u : frontier) {
            for (const auto& [v, w] : g.neighbors(u)) {
                found.insert(v);
                if (expanded.insert(v).second) next.push_back(v);
            }
        }
        frontier = std::move(next);
    }
    return found;
}

std::string decorate_name(const std::string& name) { return "#" + name + "'"; }

std::vector<std::pair<std::string, uint32_t>> name_tokens(const std::string& name) {
    std::string dec = decorate_name(name);
    std::vector<std::pair<std::string, uint32_t>> out;
    out.reserve(dec.size() - 1);
    for (size_t i = 0; i + 1 < dec.size(); ++i)
        out.emplace_back(dec.substr(i, 2), static_cast<uint32_t>(i + 1));
    return out;
}

std::set<uint64_t> oracle_substring(const std::map<uint64_t, std::string>& names,
                                    const std::string& q) {
    std::set<uint64_t> out;
    for (const auto& [id, name] : names)
        if (decorate_name(name).find(q) != std::string::npos) out.insert(id);
    return out;
}

std::string random_name(std::mt19937_64& rng) {
    static const char* kSyllables[] = {"ha", "na", "ri", "ro", "mi", "ka", "lu", "be",
                                       "so", "ta", "el", "in", "da", "vi", "mo", "sa"};
    constexpr size_t kCount = sizeof(kSyllables) / sizeof(kSyllables[0]);
    size_t syllables = 2 + rng() % 3;
    std::string name;
    for (size_t i = 0; i < syllables; ++i) name += kSyllables[rng() % kCount];
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    return name;
}

size_t load_graph(TrustedCore& core, const PlainGraph& g, const std::string& type) {
    size_t applied = 0;
    for (const auto& [u, nbrs] : g.adjacency()) {
        std::string w1 = core.format_id(u) + ":" + type;
        for (const auto& [v, weight] : nbrs) {
            core.update(UpdateToken{w1, v, weight, UpdateOp::kInsert});
            ++applied;
        }
    }
    return applied;
}

size_t load_names(TrustedCore& core, const std::map<uint64_t, std::string>& names) {
    size_t applied = 0;
    for (const auto& [id, name] : names) {
        for (const auto& [gram, pos] : name_tokens(name)) {
            core.update(UpdateToken{gram, id, pos, UpdateOp::kInsert, /*positional=*/true});
            ++applied;
        }
    }
    return applied;
}

PlainGraph toy_graph() {
    PlainGraph g;
    g.add_edge(1, 2, 5);
    g.add_edge(2, 3, 1);
    g.add_edge(2, 5, 1);
    g.add_edge(1, 3, 1);
    return g;
}

std::map<uint64_t, std::string> toy_names() {
    return {{1, "Harry"}, {5, "Hanna"}};
}

}  // namespace secgraph
