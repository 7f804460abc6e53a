#include "doctest.h"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "secgraph/adversary.hpp"
#include "secgraph/enclave.hpp"
#include "secgraph/store.hpp"
#include "secgraph/transport.hpp"

using namespace secgraph;

namespace {

constexpr Protocol kAllProtocols[] = {Protocol::kSecGraph, Protocol::kVSecGraph,
                                      Protocol::kVSecGraphA};

const char* proto_name(Protocol p) {
    switch (p) {
        case Protocol::kSecGraph: return "secgraph";
        case Protocol::kVSecGraph: return "vsecgraph";
        case Protocol::kVSecGraphA: return "vsecgraph_a";
    }
    return "?";
}

TrustedConfig make_cfg(Protocol proto, uint64_t seed, const FilterParams& fp = FilterParams{},
                       CacheMode cache = CacheMode::kPerSearch) {
    TrustedConfig cfg;
    cfg.protocol = proto;
    cfg.filter_params = fp;
    cfg.cache_mode = cache;
    cfg.seed = seed;
    cfg.acc_modulus_bits = 256;  // unit-test sized; the CLI default stays at 1024
    return cfg;
}

std::optional<AccumulatorPublic> acc_public(const TrustedConfig& cfg) {
    if (cfg.protocol != Protocol::kVSecGraphA) return std::nullopt;
    AccumulatorKey key = AccumulatorKey::generate(cfg.acc_modulus_bits, cfg.seed);
    return AccumulatorPublic{key.n, key.g};
}

StoreMode store_mode(Protocol proto) {
    return proto == Protocol::kSecGraph ? StoreMode::kServerFilters : StoreMode::kBlobFilters;
}

struct Rig {
    TrustedConfig cfg;
    Server server;
    DirectTransport tx;
    TrustedCore core;

    explicit Rig(Protocol proto, uint64_t seed = 7, const FilterParams& fp = FilterParams{},
                 CacheMode cache = CacheMode::kPerSearch)
        : cfg(make_cfg(proto, seed, fp, cache)),
          server(store_mode(proto), fp, acc_public(cfg)),
          tx(server),
          core(cfg, tx) {}

    void insert(const std::string& w, uint64_t id, uint64_t aux = 1, bool positional = false) {
        core.update(UpdateToken{w, id, aux, UpdateOp::kInsert, positional});
    }
    void erase(const std::string& w, uint64_t id, uint64_t aux = 0, bool positional = false) {
        core.update(UpdateToken{w, id, aux, UpdateOp::kDelete, positional});
    }
    std::vector<uint64_t> posting(const std::string& w) { return core.search_single(w, 1).ids; }
};

// Same stack with a tampering wrapper between transport and store.
struct TamperRig {
    TrustedConfig cfg;
    Server server;
    TamperingEndpoint tamper;
    DirectTransport tx;
    TrustedCore core;

    TamperRig(Protocol proto, TamperMode mode, uint64_t seed)
        : cfg(make_cfg(proto, seed)),
          server(store_mode(proto), cfg.filter_params, acc_public(cfg)),
          tamper(server, mode, seed ^ 0x5eedf00dULL),
          tx(tamper),
          core(cfg, tx) {}
};

std::vector<uint64_t> sorted(std::vector<uint64_t> v) {
    std::sort(v.begin(), v.end());
    return v;
}

bool contains_bytes(const Bytes& haystack, const Token& needle) {
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
           haystack.end();
}

}  // namespace

TEST_CASE("posting lists round-trip through update and search in every protocol") {
    for (Protocol proto : kAllProtocols) {
        CAPTURE(proto_name(proto));
        Rig rig(proto, 101);
        for (uint64_t id : {5u, 9u, 2u, 14u, 7u}) rig.insert("a:p", id, id * 10);
        CHECK(rig.core.update_count("a:p") == 5);
        CHECK(rig.core.keyword_count() == 1);
        CHECK(rig.server.tset_size() == 5);
        CHECK(rig.server.itset_size() == 5);

        auto res = rig.core.search_single("a:p", 1);
        CHECK(res.ids == std::vector<uint64_t>{2, 5, 7, 9, 14});
        CHECK(res.stats.decryptions == 5);
        CHECK(res.stats.membership_checks == 0);
        CHECK(res.stats.rounds == 1);  // one list load, no filters touched

        // Single-keyword conjunction degenerates to the same list.
        auto conj = rig.core.search_conjunctive({"a:p"});
        CHECK(conj.ids == res.ids);

        // Unknown keyword: empty result without any boundary round.
        auto nothing = rig.core.search_single("zz:p", 1);
        CHECK(nothing.ids.empty());
        CHECK(nothing.stats.rounds == 0);
    }
}

TEST_CASE("conjunctive search intersects posting lists through the filter set") {
    for (Protocol proto : kAllProtocols) {
        CAPTURE(proto_name(proto));
        Rig rig(proto, 202);
        std::set<uint64_t> w1, w2, w3;
        for (uint64_t id = 0; id < 24; ++id) {
            rig.insert("w1:t", id);
            w1.insert(id);
            if (id % 2 == 0) {
                rig.insert("w2:t", id);
                w2.insert(id);
            }
            if (id % 3 == 0) {
                rig.insert("w3:t", id);
                w3.insert(id);
            }
        }
        std::vector<uint64_t> expect;
        for (uint64_t id : w1)
            if (w2.count(id) && w3.count(id)) expect.push_back(id);

        auto res = rig.core.search_conjunctive({"w1:t", "w2:t", "w3:t"});
        CHECK(res.ids == expect);
        CHECK(res.stats.decryptions == w1.size());
        CHECK(res.stats.membership_checks <= w1.size() * 2);

        // Order of the driving keyword changes the work, not the result.
        auto res2 = rig.core.search_conjunctive({"w3:t", "w2:t", "w1:t"});
        CHECK(res2.ids == expect);
        CHECK(res2.stats.decryptions == w3.size());
    }
}

TEST_CASE("multi-hop search expands through derived vertex keywords") {
    for (Protocol proto : kAllProtocols) {
        CAPTURE(proto_name(proto));
        TrustedConfig cfg = make_cfg(proto, 303);
        cfg.id_pad_width = 3;
        Server server(store_mode(proto), cfg.filter_params, acc_public(cfg));
        DirectTransport tx(server);
        TrustedCore core(cfg, tx);

        // 1 -> {2, 3}, 2 -> {4}, 4 -> {5}; all edges typed "friend".
        auto link = [&](uint64_t from, uint64_t to) {
            core.update(UpdateToken{core.format_id(from) + ":friend", to, 1, UpdateOp::kInsert});
        };
        link(1, 2);
        link(1, 3);
        link(2, 4);
        link(4, 5);

        CHECK(core.search_single("001:friend", 1).ids == std::vector<uint64_t>{2, 3});
        CHECK(core.search_single("001:friend", 2).ids == std::vector<uint64_t>{2, 3, 4});
        CHECK(core.search_single("001:friend", 3).ids == std::vector<uint64_t>{2, 3, 4, 5});
        // Saturation: no growth once the reachable set is exhausted.
        CHECK(core.search_single("001:friend", 9).ids == std::vector<uint64_t>{2, 3, 4, 5});
        CHECK_THROWS_AS(core.search_single("001:friend", 0), ContractViolation);
    }
}

TEST_CASE("deleting from the middle relocates the tail entry") {
    for (Protocol proto : kAllProtocols) {
        CAPTURE(proto_name(proto));
        Rig rig(proto, 404);
        for (uint64_t id = 1; id <= 6; ++id) rig.insert("w:t", id, id);
        rig.erase("w:t", 3);
        CHECK(rig.core.update_count("w:t") == 5);
        CHECK(rig.server.tset_size() == 5);
        CHECK(rig.server.itset_size() == 5);
        CHECK(rig.posting("w:t") == std::vector<uint64_t>{1, 2, 4, 5, 6});

        // id 6 now lives in the vacated slot; deleting it exercises the
        // relocated inverse-map entry.
        rig.erase("w:t", 6);
        CHECK(rig.posting("w:t") == std::vector<uint64_t>{1, 2, 4, 5});

        // Tail delete collapses without relocation.
        rig.erase("w:t", 5);
        CHECK(rig.posting("w:t") == std::vector<uint64_t>{1, 2, 4});
        CHECK(rig.server.tset_size() == 3);
        CHECK(rig.server.itset_size() == 3);
    }
}

TEST_CASE("duplicate inserts and unknown deletes are contract violations") {
    for (Protocol proto : kAllProtocols) {
        CAPTURE(proto_name(proto));
        Rig rig(proto, 505);
        rig.insert("w:t", 1);
        rig.insert("w:t", 2);
        CHECK_THROWS_AS(rig.insert("w:t", 1), ContractViolation);
        CHECK(rig.core.update_count("w:t") == 2);  // rejected insert left no trace
        CHECK(rig.server.tset_size() == 2);

        CHECK_THROWS_AS(rig.erase("w:t", 9), ContractViolation);
        CHECK_THROWS_AS(rig.erase("v:t", 1), ContractViolation);

        // Delete to zero, then the same pair can be inserted again.
        rig.erase("w:t", 1);
        rig.erase("w:t", 2);
        CHECK(rig.core.update_count("w:t") == 0);
        CHECK(rig.server.tset_size() == 0);
        rig.insert("w:t", 1);
        CHECK(rig.posting("w:t") == std::vector<uint64_t>{1});

        CHECK_THROWS_AS(rig.core.search_conjunctive({}), ContractViolation);
        CHECK_THROWS_AS(rig.insert("big:t", 3, uint64_t{1} << 40), ContractViolation);
        CHECK_THROWS_AS(rig.insert("", 3), ContractViolation);
    }
}

TEST_CASE("random churn tracks a plain oracle across protocols") {
    for (Protocol proto : kAllProtocols) {
        CAPTURE(proto_name(proto));
        Rig rig(proto, 606);
        std::mt19937_64 rng(1234);
        std::map<std::string, std::set<uint64_t>> oracle;
        std::vector<std::string> kws;
        for (int i = 0; i < 8; ++i) kws.push_back("k" + std::to_string(i) + ":t");

        auto verify_all = [&] {
            size_t total = 0;
            for (const auto& w : kws) {
                std::vector<uint64_t> expect(oracle[w].begin(), oracle[w].end());
                CHECK(rig.posting(w) == expect);
                CHECK(rig.core.update_count(w) == oracle[w].size());
                total += oracle[w].size();
            }
            CHECK(rig.server.tset_size() == total);
            CHECK(rig.server.itset_size() == total);
        };

        for (int step = 0; step < 240; ++step) {
            const std::string& w = kws[rng() % kws.size()];
            uint64_t id = rng() % 30;
            bool ins = (rng() % 100) < 65;
            if (ins && !oracle[w].count(id)) {
                rig.insert(w, id, id + 1);
                oracle[w].insert(id);
            } else if (!ins && oracle[w].count(id)) {
                rig.erase(w, id);
                oracle[w].erase(id);
            }
            if (step % 60 == 59) verify_all();
        }
        verify_all();

        // Drain everything; the store must return to empty.
        for (const auto& w : kws)
            for (uint64_t id : std::set<uint64_t>(oracle[w]))
                rig.erase(w, id);
        CHECK(rig.server.tset_size() == 0);
        CHECK(rig.server.itset_size() == 0);
        CHECK(rig.core.keyword_count() == 0);
        if (proto == Protocol::kVSecGraphA) CHECK(rig.server.digest_count() == 0);
    }
}

TEST_CASE("positional grams answer substring queries") {
    for (Protocol proto : kAllProtocols) {
        CAPTURE(proto_name(proto));
        Rig rig(proto, 707);
        // Names decorated "#...'" and split into 2-grams with 1-based
        // positions: Harry -> #H Ha ar rr ry y'
        auto add_name = [&](uint64_t id, const std::string& name) {
            std::string dec = "#" + name + "'";
            for (size_t i = 0; i + 1 < dec.size(); ++i)
                rig.insert(dec.substr(i, 2), id, static_cast<uint32_t>(i + 1), true);
        };
        add_name(1, "Harry");
        add_name(2, "Hanna");
        add_name(3, "Barry");

        auto fuzzy = [&](const std::string& q) {
            auto [anchor, grams] = substring_query(q);
            return rig.core.search_fuzzy(anchor, grams).ids;
        };

        CHECK(fuzzy("Ha") == std::vector<uint64_t>{1, 2});
        CHECK(fuzzy("arr") == std::vector<uint64_t>{1, 3});
        CHECK(fuzzy("arry") == std::vector<uint64_t>{1, 3});
        CHECK(fuzzy("Harry") == std::vector<uint64_t>{1});
        CHECK(fuzzy("anna") == std::vector<uint64_t>{2});
        CHECK(fuzzy("#Ha") == std::vector<uint64_t>{1, 2});   // anchored prefix
        CHECK(fuzzy("ry'") == std::vector<uint64_t>{1, 3});   // anchored suffix
        CHECK(fuzzy("xq").empty());
        CHECK(fuzzy("Hann") == std::vector<uint64_t>{2});
        CHECK_THROWS_AS(substring_query("H"), ContractViolation);

        // Same gram at different positions stays one pair per position.
        // "anana" holds "an" twice and "na" twice.
        add_name(4, "Banana");
        CHECK(fuzzy("anan") == std::vector<uint64_t>{4});
        CHECK(fuzzy("nana") == std::vector<uint64_t>{4});
        CHECK(fuzzy("Bana") == std::vector<uint64_t>{4});
    }
}

TEST_CASE("registered clients get isolated keyword spaces") {
    for (Protocol proto : kAllProtocols) {
        CAPTURE(proto_name(proto));
        Rig rig(proto, 808);
        rig.core.register_client(10);
        rig.core.register_client(20);
        rig.core.register_client(10);  // idempotent

        rig.core.update(UpdateToken{"w:t", 1, 1, UpdateOp::kInsert});
        rig.core.update(UpdateToken{"w:t", 2, 1, UpdateOp::kInsert});
        rig.core.update(UpdateToken{"w:t", 3, 1, UpdateOp::kInsert}, 10);
        rig.core.update(UpdateToken{"v:t", 3, 1, UpdateOp::kInsert}, 10);

        CHECK(rig.core.search_single("w:t", 1).ids == std::vector<uint64_t>{1, 2});
        CHECK(rig.core.search_single("w:t", 1, 10).ids == std::vector<uint64_t>{3});
        CHECK(rig.core.search_single("w:t", 1, 20).ids.empty());
        CHECK(rig.core.update_count("w:t") == 2);
        CHECK(rig.core.update_count("w:t", 10) == 1);

        // Conjunctions stay inside one client's xtag space.
        CHECK(rig.core.search_conjunctive({"w:t", "v:t"}, 10).ids ==
              std::vector<uint64_t>{3});
        CHECK(rig.core.search_conjunctive({"w:t", "v:t"}).ids.empty());

        CHECK_THROWS_AS(rig.core.search_single("w:t", 1, 99), AccessDenied);
        CHECK_THROWS_AS(
            rig.core.update(UpdateToken{"w:t", 9, 1, UpdateOp::kInsert}, 99),
            AccessDenied);
    }
}

TEST_CASE("search work obeys the protocol bounds") {
    for (Protocol proto : {Protocol::kVSecGraph, Protocol::kVSecGraphA}) {
        CAPTURE(proto_name(proto));
        Rig rig(proto, 909);
        constexpr size_t kC = 40;
        for (uint64_t id = 0; id < kC; ++id) rig.insert("w1:t", id);
        for (uint64_t id = 0; id < kC; id += 2) rig.insert("w2:t", id);
        for (uint64_t id = 0; id < kC; id += 4) rig.insert("w3:t", id);

        auto res = rig.core.search_conjunctive({"w1:t", "w2:t", "w3:t"});
        CHECK(res.stats.decryptions == kC);
        CHECK(res.stats.membership_checks <= kC * 2);
        // Every distinct sub-filter is fetched at most once per search, and
        // rounds decompose into one list load plus those fetches.
        CHECK(res.stats.subfilters_loaded <= rig.server.filter_count());
        CHECK(res.stats.rounds == 1 + res.stats.subfilters_loaded);
    }
}

TEST_CASE("lru cache reuses verified sub-filters across searches") {
    Rig rig(Protocol::kVSecGraph, 1010, FilterParams{}, CacheMode::kLru);
    for (uint64_t id = 0; id < 30; ++id) rig.insert("w1:t", id);
    for (uint64_t id = 0; id < 30; id += 3) rig.insert("w2:t", id);

    rig.core.drop_caches();  // updates prime the cache; start cold
    auto first = rig.core.search_conjunctive({"w1:t", "w2:t"});
    auto second = rig.core.search_conjunctive({"w1:t", "w2:t"});
    CHECK(second.ids == first.ids);
    CHECK(first.stats.subfilters_loaded >= 1);
    CHECK(second.stats.subfilters_loaded == 0);  // warm cache
    CHECK(second.stats.rounds == 1);

    rig.core.drop_caches();
    auto third = rig.core.search_conjunctive({"w1:t", "w2:t"});
    CHECK(third.ids == first.ids);
    CHECK(third.stats.subfilters_loaded == first.stats.subfilters_loaded);

    // Per-search mode reloads every time.
    Rig cold(Protocol::kVSecGraph, 1010);
    for (uint64_t id = 0; id < 30; ++id) cold.insert("w1:t", id);
    for (uint64_t id = 0; id < 30; id += 3) cold.insert("w2:t", id);
    auto c1 = cold.core.search_conjunctive({"w1:t", "w2:t"});
    auto c2 = cold.core.search_conjunctive({"w1:t", "w2:t"});
    CHECK(c1.stats.subfilters_loaded == c2.stats.subfilters_loaded);
    CHECK(c2.stats.subfilters_loaded >= 1);
}

TEST_CASE("sub-filter splits stay transparent to every protocol") {
    FilterParams fp;
    fp.bucket_count = 64;  // capacity 256, so ~300 xtags force splits
    for (Protocol proto : kAllProtocols) {
        CAPTURE(proto_name(proto));
        Rig rig(proto, 1111, fp);
        std::set<uint64_t> both;
        for (uint64_t id = 0; id < 150; ++id) {
            rig.insert("w1:t", id);
            rig.insert("w2:t", id * 2);
            if (id % 2 == 0) both.insert(id);
        }
        CHECK(rig.server.filter_count() > 1);  // at least one split happened

        std::vector<uint64_t> expect(both.begin(), both.end());
        CHECK(rig.core.search_conjunctive({"w1:t", "w2:t"}).ids == expect);

        // Deletes keep working after the split.
        rig.erase("w1:t", 0);
        rig.erase("w2:t", 0);
        expect.erase(expect.begin());
        CHECK(rig.core.search_conjunctive({"w1:t", "w2:t"}).ids == expect);
    }
}

TEST_CASE("fresh update tokens never appeared in earlier traffic") {
    Rig rig(Protocol::kVSecGraph, 1212);
    std::vector<Bytes> history;
    rig.tx.tap = [&](const Bytes& req, const Bytes& resp) {
        history.push_back(req);
        history.push_back(resp);
    };
    for (uint64_t id = 0; id < 12; ++id) rig.insert("w:t", id);
    rig.posting("w:t");
    rig.core.search_conjunctive({"w:t", "w:t"});
    size_t prior = history.size();

    rig.insert("w:t", 99);    // extends a searched keyword
    rig.insert("w2:t", 1);    // brand-new keyword
    REQUIRE(history.size() > prior);

    size_t updates_seen = 0;
    for (size_t i = prior; i < history.size(); ++i) {
        Frame f;
        try {
            f = decode_frame(as_span(history[i]));
        } catch (const DecodeError&) {
            continue;
        }
        if (f.kind != MsgKind::kUpdateInsert) continue;
        ++updates_seen;
        auto msg = UpdateInsertMsg::decode(as_span(f.payload));
        for (size_t j = 0; j < prior; ++j) {
            CAPTURE(j);
            CHECK(!contains_bytes(history[j], msg.stag));
            CHECK(!contains_bytes(history[j], msg.ind));
        }
    }
    CHECK(updates_seen == 2);
}

TEST_CASE("searches after a delete never touch the retired tail slot") {
    Rig rig(Protocol::kVSecGraph, 1313);
    std::vector<Token> insert_stags;
    rig.tx.tap = [&](const Bytes& req, const Bytes&) {
        Frame f;
        try {
            f = decode_frame(as_span(req));
        } catch (const DecodeError&) {
            return;
        }
        if (f.kind == MsgKind::kUpdateInsert)
            insert_stags.push_back(UpdateInsertMsg::decode(as_span(f.payload)).stag);
    };
    for (uint64_t id = 1; id <= 5; ++id) rig.insert("w:t", id);
    REQUIRE(insert_stags.size() == 5);

    rig.erase("w:t", 2);

    std::vector<Token> searched;
    rig.tx.tap = [&](const Bytes& req, const Bytes&) {
        Frame f;
        try {
            f = decode_frame(as_span(req));
        } catch (const DecodeError&) {
            return;
        }
        if (f.kind == MsgKind::kLoadList)
            searched = LoadListMsg::decode(as_span(f.payload)).stags;
    };
    auto res = rig.posting("w:t");
    CHECK(res == std::vector<uint64_t>{1, 3, 4, 5});
    REQUIRE(searched.size() == 4);
    for (size_t i = 0; i < 4; ++i) CHECK(searched[i] == insert_stags[i]);
    // The fifth stag is retired; relocation reuses the vacated slot instead.
    CHECK(std::find(searched.begin(), searched.end(), insert_stags[4]) == searched.end());
}

TEST_CASE("tampered responses abort verified rounds and leave state intact") {
    for (Protocol proto : {Protocol::kVSecGraph, Protocol::kVSecGraphA}) {
        for (TamperMode mode : {TamperMode::kTamperTset, TamperMode::kDropEntry}) {
            CAPTURE(proto_name(proto));
            CAPTURE(tamper_mode_name(mode));
            TamperRig rig(proto, mode, 1414);
            std::vector<uint64_t> expect;
            for (uint64_t id = 0; id < 10; ++id) {
                rig.core.update(UpdateToken{"w:t", id, 1, UpdateOp::kInsert});
                expect.push_back(id);
            }
            rig.tamper.arm();
            CHECK_THROWS_AS(rig.core.search_single("w:t", 1), IntegrityViolation);
            CHECK(rig.tamper.deviation_count() == 1);
            rig.tamper.disarm();
            CHECK(rig.core.search_single("w:t", 1).ids == expect);
            // The aborted round left counters untouched: updates still work.
            rig.core.update(UpdateToken{"w:t", 77, 1, UpdateOp::kInsert});
            rig.core.update(UpdateToken{"w:t", 77, 1, UpdateOp::kDelete});
            CHECK(rig.core.search_single("w:t", 1).ids == expect);
        }
    }
}

TEST_CASE("tampered sub-filter bytes are caught by the digest check") {
    for (Protocol proto : {Protocol::kVSecGraph, Protocol::kVSecGraphA}) {
        CAPTURE(proto_name(proto));
        TamperRig rig(proto, TamperMode::kTamperXset, 1515);
        for (uint64_t id = 0; id < 10; ++id) {
            rig.core.update(UpdateToken{"w1:t", id, 1, UpdateOp::kInsert});
            if (id % 2 == 0) rig.core.update(UpdateToken{"w2:t", id, 1, UpdateOp::kInsert});
        }
        rig.tamper.arm();
        CHECK_THROWS_AS(rig.core.search_conjunctive({"w1:t", "w2:t"}), IntegrityViolation);
        CHECK(rig.tamper.deviation_count() == 1);
        rig.tamper.disarm();
        CHECK(rig.core.search_conjunctive({"w1:t", "w2:t"}).ids ==
              std::vector<uint64_t>{0, 2, 4, 6, 8});
    }
}

TEST_CASE("stale replays of list and position loads are rejected") {
    for (Protocol proto : {Protocol::kVSecGraph, Protocol::kVSecGraphA}) {
        CAPTURE(proto_name(proto));
        TamperRig rig(proto, TamperMode::kStaleReplay, 1616);

        // List replay needs a byte-identical repeated request, so the counter
        // must return to its old value: delete one pair and insert another.
        for (uint64_t id = 0; id < 5; ++id)
            rig.core.update(UpdateToken{"w:t", id, 1, UpdateOp::kInsert});
        rig.core.search_single("w:t", 1);  // caches the honest 5-entry reply
        rig.core.update(UpdateToken{"w:t", 0, 1, UpdateOp::kDelete});
        rig.core.update(UpdateToken{"w:t", 9, 1, UpdateOp::kInsert});
        rig.tamper.arm();
        CHECK_THROWS_AS(rig.core.search_single("w:t", 1), IntegrityViolation);
        rig.tamper.disarm();
        CHECK(rig.core.search_single("w:t", 1).ids ==
              std::vector<uint64_t>{1, 2, 3, 4, 9});

        // Position replay: capture ind(B) while B sits at slot 2 (via a
        // rejected duplicate insert probe), relocate B to slot 1, then replay
        // the stale position during a delete.
        rig.core.update(UpdateToken{"v:t", 100, 1, UpdateOp::kInsert});  // slot 1
        rig.core.update(UpdateToken{"v:t", 200, 1, UpdateOp::kInsert});  // slot 2
        CHECK_THROWS_AS(rig.core.update(UpdateToken{"v:t", 200, 1, UpdateOp::kInsert}),
                        ContractViolation);
        rig.core.update(UpdateToken{"v:t", 100, 1, UpdateOp::kDelete});  // 200 -> slot 1
        rig.tamper.arm();
        CHECK_THROWS_AS(rig.core.update(UpdateToken{"v:t", 200, 1, UpdateOp::kDelete}),
                        IntegrityViolation);
        CHECK(rig.tamper.deviated());
        rig.tamper.disarm();
        rig.core.update(UpdateToken{"v:t", 200, 1, UpdateOp::kDelete});
        CHECK(rig.core.update_count("v:t") == 0);
    }
}

TEST_CASE("the unverified protocol accepts plausible tampering silently") {
    TamperRig rig(Protocol::kSecGraph, TamperMode::kTamperTset, 1717);
    for (uint64_t id = 0; id < 10; ++id)
        rig.core.update(UpdateToken{"w:t", id, 1, UpdateOp::kInsert});
    rig.tamper.arm();
    std::vector<uint64_t> ids;
    CHECK_NOTHROW(ids = rig.core.search_single("w:t", 1).ids);
    CHECK(rig.tamper.deviation_count() == 1);  // the flip went through undetected
    CHECK(ids.size() == 10);
}

TEST_CASE("accumulator groups fill, overflow, and drain") {
    TrustedConfig cfg = make_cfg(Protocol::kVSecGraphA, 1818);
    cfg.acc_group_capacity = 3;
    Server server(StoreMode::kBlobFilters, cfg.filter_params, acc_public(cfg));
    DirectTransport tx(server);
    TrustedCore core(cfg, tx);

    std::vector<std::string> kws;
    for (int i = 0; i < 10; ++i) {
        std::string w = "k" + std::to_string(i) + ":t";
        kws.push_back(w);
        core.update(UpdateToken{w, 1, 1, UpdateOp::kInsert});
        core.update(UpdateToken{w, 2, 1, UpdateOp::kInsert});
    }
    CHECK(server.digest_count() == 10);
    CHECK(core.group_count() >= 4);  // 10 keywords, at most 3 per group
    CHECK(core.group_count() <= 10);

    // Every keyword still verifies against its group product.
    for (const auto& w : kws)
        CHECK(core.search_single(w, 1).ids == std::vector<uint64_t>{1, 2});

    // Drain half; digests leave their groups exactly.
    for (int i = 0; i < 5; ++i) {
        core.update(UpdateToken{kws[i], 1, 1, UpdateOp::kDelete});
        core.update(UpdateToken{kws[i], 2, 1, UpdateOp::kDelete});
    }
    CHECK(server.digest_count() == 5);
    for (int i = 0; i < 5; ++i) CHECK(core.search_single(kws[i], 1).ids.empty());
    for (int i = 5; i < 10; ++i)
        CHECK(core.search_single(kws[i], 1).ids == std::vector<uint64_t>{1, 2});

    // Drain the rest; every group product returns to the identity.
    for (int i = 5; i < 10; ++i) {
        core.update(UpdateToken{kws[i], 1, 1, UpdateOp::kDelete});
        core.update(UpdateToken{kws[i], 2, 1, UpdateOp::kDelete});
    }
    CHECK(server.digest_count() == 0);
    for (uint32_t g = 0; g < core.group_count(); ++g)
        CHECK(server.group_product_value(g) == 1);

    // Reinsert after a full drain: fresh digest, possibly a fresh group.
    core.update(UpdateToken{kws[0], 7, 1, UpdateOp::kInsert});
    CHECK(core.search_single(kws[0], 1).ids == std::vector<uint64_t>{7});
}

TEST_CASE("the verified digest cache skips repeat witness fetches") {
    TrustedConfig cfg = make_cfg(Protocol::kVSecGraphA, 1919);
    cfg.digest_cache_capacity = 16;
    Server server(StoreMode::kBlobFilters, cfg.filter_params, acc_public(cfg));
    DirectTransport tx(server);
    TrustedCore core(cfg, tx);

    for (uint64_t id = 0; id < 6; ++id)
        core.update(UpdateToken{"w:t", id, 1, UpdateOp::kInsert});

    size_t digest_queries = 0;
    tx.tap = [&](const Bytes& req, const Bytes&) {
        Frame f;
        try {
            f = decode_frame(as_span(req));
        } catch (const DecodeError&) {
            return;
        }
        if (f.kind == MsgKind::kLoadList &&
            LoadListMsg::decode(as_span(f.payload)).digest_query)
            ++digest_queries;
    };
    auto r1 = core.search_single("w:t", 1);
    auto r2 = core.search_single("w:t", 1);
    CHECK(r1.ids == r2.ids);
    CHECK(digest_queries == 0);  // the cache was primed by the updates themselves

    core.drop_caches();
    auto r3 = core.search_single("w:t", 1);
    CHECK(r3.ids == r1.ids);
    CHECK(digest_queries == 1);  // one cold fetch, riding the list load
    CHECK(r3.stats.rounds == r1.stats.rounds);  // no extra round for the digest
}

TEST_CASE("a socket transport serves a full verified session") {
    TrustedConfig cfg = make_cfg(Protocol::kVSecGraph, 2020);
    Server direct_server(StoreMode::kBlobFilters, cfg.filter_params, std::nullopt);
    DirectTransport direct_tx(direct_server);
    TrustedCore direct_core(cfg, direct_tx);

    Server socket_server(StoreMode::kBlobFilters, cfg.filter_params, std::nullopt);
    SocketServer listener(socket_server);
    SocketTransport socket_tx(listener.port());
    TrustedCore socket_core(cfg, socket_tx);

    auto drive = [](TrustedCore& core) {
        for (uint64_t id = 0; id < 20; ++id)
            core.update(UpdateToken{"w1:t", id, id + 1, UpdateOp::kInsert});
        for (uint64_t id = 0; id < 20; id += 2)
            core.update(UpdateToken{"w2:t", id, 1, UpdateOp::kInsert});
        core.update(UpdateToken{"w1:t", 4, 0, UpdateOp::kDelete});
        return core.search_conjunctive({"w1:t", "w2:t"}).ids;
    };
    auto direct_ids = drive(direct_core);
    auto socket_ids = drive(socket_core);
    CHECK(socket_ids == direct_ids);
    CHECK(socket_server.state_digest() == direct_server.state_digest());
    listener.stop();
}

TEST_CASE("identical seeds replay identical stores") {
    auto run = [](uint64_t seed) {
        Rig rig(Protocol::kVSecGraphA, seed);
        for (uint64_t id = 0; id < 15; ++id)
            rig.insert("w:t", id, id * 3 + 1);
        rig.erase("w:t", 7);
        rig.erase("w:t", 14);
        return rig.server.state_digest();
    };
    CHECK(run(42) == run(42));
    CHECK(run(42) != run(43));
}
