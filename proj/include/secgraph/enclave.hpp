#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "secgraph/accumulator.hpp"
#include "secgraph/bytes.hpp"
#include "secgraph/crypto.hpp"
#include "secgraph/ldcf.hpp"
#include "secgraph/multiset_hash.hpp"
#include "secgraph/transport.hpp"
#include "secgraph/wire.hpp"

namespace secgraph {

// secgraph: plain encrypted search, the store maintains the filters itself.
// vsecgraph: every load is verified (multiset hashes, embedded counters,
//   sub-filter digests); filters are mutated inside the trusted core and
//   replaced at the store as opaque blobs.
// vsecgraph_a: vsecgraph with per-keyword multiset hashes offloaded to the
//   store, authenticated through grouped RSA accumulators.
enum class Protocol { kSecGraph, kVSecGraph, kVSecGraphA };

// Per-search caches drop loaded sub-filters when the operation ends; the LRU
// cache keeps verified filters across operations up to a capacity.
enum class CacheMode { kPerSearch, kLru };

enum class UpdateOp { kInsert, kDelete };

struct TrustedConfig {
    Protocol protocol = Protocol::kVSecGraph;
    FilterParams filter_params{};
    FieldCodec codec{};
    CacheMode cache_mode = CacheMode::kPerSearch;
    size_t filter_cache_capacity = 64;   // kLru only
    size_t digest_cache_capacity = 0;    // vsecgraph_a verified-digest cache; 0 disables
    uint32_t acc_group_capacity = 200;   // keywords per accumulator group
    unsigned acc_modulus_bits = 1024;
    uint64_t seed = 0;                   // 0 samples keys from OS randomness
    unsigned id_pad_width = 0;           // zero-pad ids in derived keywords; 0 = plain decimal
};

// One (keyword, vertex) pair. aux carries the edge weight, or the gram
// position when positional is set (name grams may repeat per vertex, so the
// position is part of the pair identity).
struct UpdateToken {
    std::string w;
    uint64_t id_in = 0;
    uint64_t aux = 0;
    UpdateOp op = UpdateOp::kInsert;
    bool positional = false;
};

struct SearchStats {
    size_t decryptions = 0;         // posting-list records decrypted
    size_t membership_checks = 0;   // sub-filter lookups
    size_t subfilters_loaded = 0;   // filters fetched from the store this op
    size_t rounds = 0;              // boundary round trips this op
};

struct SearchResult {
    std::vector<uint64_t> ids;  // sorted, unique
    SearchStats stats;
};

// A verification check failed; the round was aborted with trusted state
// untouched.
struct IntegrityViolation : std::runtime_error {
    explicit IntegrityViolation(const std::string& what) : std::runtime_error(what) {}
};

// The store answered outside the protocol (error frame, malformed reply).
struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// The caller broke the API contract (empty conjunction, duplicate insert,
// deleting an unknown pair).
struct ContractViolation : std::invalid_argument {
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

struct AccessDenied : std::runtime_error {
    explicit AccessDenied(const std::string& what) : std::runtime_error(what) {}
};

// The trusted core: holds the secret keys, per-keyword counters, and the
// verification state the active protocol calls for. Talks to the untrusted
// store exclusively through the supplied transport, one request frame per
// round. Operations are serialized internally; concurrent callers take turns
// at round granularity.
class TrustedCore {
public:
    TrustedCore(const TrustedConfig& config, Transport& transport);

    // Derives per-client keys. Updates and searches passing this id operate
    // in the client's own keyword space; unknown ids are rejected.
    void register_client(uint32_t id_u);

    void update(const UpdateToken& token, std::optional<uint32_t> id_u = std::nullopt);

    // Breadth-first K-hop expansion: load PL(w1), then recurse through
    // derived keywords "<id>:<type>" of the hit vertices. hops == 1 returns
    // exactly PL(w1).
    SearchResult search_single(const std::string& w1, unsigned hops,
                               std::optional<uint32_t> id_u = std::nullopt);

    // ws[0] drives the posting-list load; every further keyword is tested
    // per candidate against the filter set, stopping at the first miss.
    SearchResult search_conjunctive(const std::vector<std::string>& ws,
                                    std::optional<uint32_t> id_u = std::nullopt);

    // w1 is the anchor gram; grams are (gram, position delta) constraints
    // relative to each (id, pos) candidate in PL(w1).
    SearchResult search_fuzzy(const std::string& w1,
                              const std::vector<std::pair<std::string, uint32_t>>& grams,
                              std::optional<uint32_t> id_u = std::nullopt);

    // Introspection for tests and benchmarks.
    uint32_t update_count(const std::string& w,
                          std::optional<uint32_t> id_u = std::nullopt) const;
    size_t keyword_count() const;
    uint32_t group_count() const;  // vsecgraph_a accumulator groups so far
    const TrustedConfig& config() const { return config_; }
    std::string format_id(uint64_t id) const;
    const mpz_class& accumulator_modulus() const { return acc_key_.n; }
    const mpz_class& accumulator_base() const { return acc_key_.g; }
    // Clears cached filters and verified digests (tamper harnesses pin cache
    // behavior per round with this).
    void drop_caches();

private:
    struct ClientCtx {
        SecretKeys keys;
        std::string ckey_prefix;        // namespaces all per-keyword state
        std::optional<uint32_t> id_u;   // appended to xtags and digest labels
    };

    struct KeywordRef {
        const ClientCtx* ctx;
        std::string w;
        std::string ckey;
    };

    // Filter staging for one verified update: mutations happen on copies and
    // are committed only after every check has passed.
    struct FilterStage {
        std::map<std::string, SubFilter> staged;
        std::vector<std::string> split_parents;
        std::vector<Bytes> messages;  // replace frames, in send order
    };

    const ClientCtx& ctx_for(std::optional<uint32_t> id_u) const;
    KeywordRef kw(const std::string& w, std::optional<uint32_t> id_u) const;

    bool verifying() const { return config_.protocol != Protocol::kSecGraph; }
    bool accumulating() const { return config_.protocol == Protocol::kVSecGraphA; }

    // PRF material.
    Token stag_for(const KeywordRef& k, uint32_t counter) const;
    Token ind_for(const KeywordRef& k, uint64_t id, std::optional<uint32_t> pos) const;
    PrfBlock record_mask(const KeywordRef& k) const;
    Bytes xtag_bytes(const KeywordRef& k, uint64_t id, std::optional<uint32_t> pos) const;
    Digest32 digest_label(const KeywordRef& k) const;  // H4 accumulator label

    // Record codecs. Posting records carry (id, aux[, counter]); position
    // records carry (counter[, id]). The two slices of one per-keyword mask
    // never overlap.
    Bytes encrypt_record(const PrfBlock& mask, uint64_t id, uint64_t aux,
                         uint32_t counter) const;
    void decrypt_record(const PrfBlock& mask, ByteSpan ct, uint64_t& id, uint64_t& aux,
                        uint32_t& counter) const;
    Bytes encrypt_posrec(const PrfBlock& mask, uint32_t counter, uint64_t id) const;
    void decrypt_posrec(const PrfBlock& mask, ByteSpan ct, uint32_t& counter,
                        uint64_t& id) const;
    size_t record_width() const;
    size_t posrec_width() const;

    // Boundary rounds.
    Bytes roundtrip(const Bytes& frame, SearchStats* stats) const;
    void expect_ack(const Bytes& frame, SearchStats* stats,
                    std::vector<std::string>* splits = nullptr);

    // Filter plane.
    const SubFilter& acquire_filter(const std::string& label, SearchStats* stats);
    void cache_insert(const std::string& label, SubFilter filter);
    void cache_drop(const std::string& label);
    void begin_op_cache();
    void apply_server_splits(const std::vector<std::string>& parents);
    FilterStage stage_filter_mutation(const std::string& label, uint16_t delta, uint64_t mu,
                                      bool insert, SearchStats* stats);
    void commit_filter_stage(FilterStage& stage);

    // Verified posting-list load. Returns (id, aux) rows in counter order
    // after every check for the active protocol has passed.
    std::vector<std::pair<uint64_t, uint64_t>> load_posting_list(const KeywordRef& k,
                                                                 uint32_t cnt,
                                                                 SearchStats& stats);

    // vsecgraph_a digest plane.
    MultisetHash fetch_verified_mh(const KeywordRef& k, SearchStats* stats);
    const MultisetHash& require_mh(const KeywordRef& k) const;
    mpz_class prime_for(const Digest32& h4w, const Digest32& h_w) const;
    uint32_t assign_group(const Digest32& h4w);
    void digest_cache_put(const std::string& ckey, const MultisetHash& mh);
    const MultisetHash* digest_cache_get(const std::string& ckey);
    void digest_cache_erase(const std::string& ckey);

    void do_update(const KeywordRef& k, const UpdateToken& token);
    void do_insert(const KeywordRef& k, const UpdateToken& token);
    void do_delete(const KeywordRef& k, const UpdateToken& token);

    std::vector<std::pair<uint64_t, uint64_t>> checked_list(const KeywordRef& k,
                                                            SearchStats& stats);

    TrustedConfig config_;
    Transport* transport_;
    ClientCtx owner_;
    std::unordered_map<uint32_t, ClientCtx> clients_;

    std::unordered_map<std::string, uint32_t> update_cnt_;
    std::unordered_map<std::string, MultisetHash> mh_;  // vsecgraph only

    IndexTree tree_;
    std::map<std::string, SubFilter> filter_cache_;
    std::list<std::string> filter_lru_;  // front = most recent

    // vsecgraph_a: grouped accumulator state.
    AccumulatorKey acc_key_;
    std::map<uint32_t, mpz_class> group_ac_;
    std::unordered_map<std::string, uint32_t> acc_assign_;  // ckey -> group
    std::map<uint32_t, uint32_t> group_live_;
    uint32_t group_count_ = 0;
    // Digest LRU: the list orders keys, the map pins each key's list node so
    // touches splice in O(1). Caches can hold tens of thousands of keywords.
    std::unordered_map<std::string, MultisetHash> digest_cache_;
    std::list<std::string> digest_lru_;
    std::unordered_map<std::string, std::list<std::string>::iterator> digest_lru_pos_;

    mutable std::mutex op_mu_;
};

// Splits a plain substring query into the anchor gram plus positional
// constraints; requires at least one full gram (|q| >= 2).
std::pair<std::string, std::vector<std::pair<std::string, uint32_t>>> substring_query(
    const std::string& q);

}  // namespace secgraph
