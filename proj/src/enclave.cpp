#include "secgraph/enclave.hpp"

#include <algorithm>
#include <set>

namespace secgraph {
namespace {

// Decodes a response frame into the expected message; error frames surface
// as ProtocolError with the store's message.
template <typename M>
M expect(const Bytes& frame) {
    Frame f;
    try {
        f = decode_frame(as_span(frame));
    } catch (const DecodeError& e) {
        throw ProtocolError(std::string("malformed reply: ") + e.what());
    }
    if (f.kind == MsgKind::kError) {
        ErrorMsg err = ErrorMsg::decode(as_span(f.payload));
        throw ProtocolError("store error: " + err.message);
    }
    if (f.kind != M::kKind) throw ProtocolError("unexpected reply kind");
    try {
        return M::decode(as_span(f.payload));
    } catch (const DecodeError& e) {
        throw ProtocolError(std::string("malformed reply: ") + e.what());
    }
}

// kOneResult -> payload bytes, kNotFound -> nullopt.
std::optional<Bytes> expect_one_or_absent(const Bytes& frame) {
    Frame f;
    try {
        f = decode_frame(as_span(frame));
    } catch (const DecodeError& e) {
        throw ProtocolError(std::string("malformed reply: ") + e.what());
    }
    if (f.kind == MsgKind::kError)
        throw ProtocolError("store error: " + ErrorMsg::decode(as_span(f.payload)).message);
    if (f.kind == MsgKind::kNotFound) return std::nullopt;
    if (f.kind != MsgKind::kOneResult) throw ProtocolError("unexpected reply kind");
    try {
        return OneResultMsg::decode(as_span(f.payload)).bytes;
    } catch (const DecodeError& e) {
        throw ProtocolError(std::string("malformed reply: ") + e.what());
    }
}

uint64_t low64(const Digest32& d) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(d[i]) << (8 * i);
    return v;
}

}  // namespace

std::pair<std::string, std::vector<std::pair<std::string, uint32_t>>> substring_query(
    const std::string& q) {
    if (q.size() < 2) throw ContractViolation("substring query needs at least one full gram");
    std::pair<std::string, std::vector<std::pair<std::string, uint32_t>>> out;
    out.first = q.substr(0, 2);
    for (size_t i = 1; i + 1 < q.size(); ++i)
        out.second.emplace_back(q.substr(i, 2), static_cast<uint32_t>(i));
    return out;
}

TrustedCore::TrustedCore(const TrustedConfig& config, Transport& transport)
    : config_(config), transport_(&transport) {
    if (record_width() > 16 || 16 + posrec_width() > std::tuple_size_v<PrfBlock>)
        throw ContractViolation("record layout exceeds the per-keyword mask");
    owner_.keys = config_.seed ? SecretKeys::derive(config_.seed) : SecretKeys::sample();
    owner_.ckey_prefix = std::string(1, '\x00');
    owner_.id_u = std::nullopt;
    if (accumulating()) {
        if (config_.seed == 0)
            throw ContractViolation("accumulator protocol requires a deterministic seed");
        acc_key_ = AccumulatorKey::generate(config_.acc_modulus_bits, config_.seed);
    }
    if (verifying())
        tree_.set_digest("", hash_h3(as_span(SubFilter(config_.filter_params, "").serialize())));
}

void TrustedCore::register_client(uint32_t id_u) {
    std::lock_guard<std::mutex> lock(op_mu_);
    if (clients_.count(id_u)) return;
    ClientCtx ctx;
    ctx.keys = owner_.keys.derive_client(id_u);
    ctx.ckey_prefix.push_back('\x01');
    for (int i = 0; i < 4; ++i)
        ctx.ckey_prefix.push_back(static_cast<char>((id_u >> (8 * i)) & 0xff));
    ctx.id_u = id_u;
    clients_.emplace(id_u, std::move(ctx));
}

const TrustedCore::ClientCtx& TrustedCore::ctx_for(std::optional<uint32_t> id_u) const {
    if (!id_u) return owner_;
    auto it = clients_.find(*id_u);
    if (it == clients_.end()) throw AccessDenied("unregistered client id");
    return it->second;
}

TrustedCore::KeywordRef TrustedCore::kw(const std::string& w,
                                        std::optional<uint32_t> id_u) const {
    const ClientCtx& ctx = ctx_for(id_u);
    return KeywordRef{&ctx, w, ctx.ckey_prefix + w};
}

std::string TrustedCore::format_id(uint64_t id) const {
    std::string s = std::to_string(id);
    while (s.size() < config_.id_pad_width) s.insert(s.begin(), '0');
    return s;
}

size_t TrustedCore::record_width() const {
    return config_.codec.id_width + config_.codec.weight_width +
           (verifying() ? config_.codec.counter_width : 0);
}

size_t TrustedCore::posrec_width() const {
    return config_.codec.counter_width + (verifying() ? config_.codec.id_width : 0);
}

Token TrustedCore::stag_for(const KeywordRef& k, uint32_t counter) const {
    Bytes in = to_bytes(k.w);
    put_u32(in, counter);
    return prf(k.ctx->keys.k_t, as_span(in));
}

Token TrustedCore::ind_for(const KeywordRef& k, uint64_t id,
                           std::optional<uint32_t> pos) const {
    Bytes in = to_bytes(k.w);
    put_u64(in, id);
    if (pos) put_u32(in, *pos);
    return prf(k.ctx->keys.k_x, as_span(in));
}

PrfBlock TrustedCore::record_mask(const KeywordRef& k) const {
    return prf(k.ctx->keys.k_z, as_span(k.w));
}

Bytes TrustedCore::xtag_bytes(const KeywordRef& k, uint64_t id,
                              std::optional<uint32_t> pos) const {
    Bytes out = to_bytes(k.w);
    put_u64(out, id);
    if (pos) put_u32(out, *pos);
    if (k.ctx->id_u) put_u32(out, *k.ctx->id_u);
    return out;
}

Digest32 TrustedCore::digest_label(const KeywordRef& k) const {
    Bytes in = to_bytes(k.w);
    if (k.ctx->id_u) put_u32(in, *k.ctx->id_u);
    return hash_h4(as_span(in));
}

Bytes TrustedCore::encrypt_record(const PrfBlock& mask, uint64_t id, uint64_t aux,
                                  uint32_t counter) const {
    Bytes pt;
    config_.codec.put_id(pt, id);
    config_.codec.put_weight(pt, aux);
    if (verifying()) config_.codec.put_counter(pt, counter);
    for (size_t i = 0; i < pt.size(); ++i) pt[i] ^= mask[i];
    return pt;
}

void TrustedCore::decrypt_record(const PrfBlock& mask, ByteSpan ct, uint64_t& id,
                                 uint64_t& aux, uint32_t& counter) const {
    if (ct.size() != record_width()) throw DecodeError("posting record width");
    Bytes pt(ct.begin(), ct.end());
    for (size_t i = 0; i < pt.size(); ++i) pt[i] ^= mask[i];
    ByteReader r(as_span(pt));
    id = config_.codec.get_id(r);
    aux = config_.codec.get_weight(r);
    counter = verifying() ? static_cast<uint32_t>(config_.codec.get_counter(r)) : 0;
}

Bytes TrustedCore::encrypt_posrec(const PrfBlock& mask, uint32_t counter,
                                  uint64_t id) const {
    Bytes pt;
    config_.codec.put_counter(pt, counter);
    if (verifying()) config_.codec.put_id(pt, id);
    for (size_t i = 0; i < pt.size(); ++i) pt[i] ^= mask[16 + i];
    return pt;
}

void TrustedCore::decrypt_posrec(const PrfBlock& mask, ByteSpan ct, uint32_t& counter,
                                 uint64_t& id) const {
    if (ct.size() != posrec_width()) throw DecodeError("position record width");
    Bytes pt(ct.begin(), ct.end());
    for (size_t i = 0; i < pt.size(); ++i) pt[i] ^= mask[16 + i];
    ByteReader r(as_span(pt));
    counter = static_cast<uint32_t>(config_.codec.get_counter(r));
    id = verifying() ? config_.codec.get_id(r) : 0;
}

Bytes TrustedCore::roundtrip(const Bytes& frame, SearchStats* stats) const {
    if (stats) ++stats->rounds;
    return transport_->round_trip(frame);
}

void TrustedCore::expect_ack(const Bytes& frame, SearchStats* stats,
                             std::vector<std::string>* splits) {
    AckMsg ack = expect<AckMsg>(roundtrip(frame, stats));
    if (splits) *splits = std::move(ack.splits);
}

void TrustedCore::begin_op_cache() {
    if (config_.cache_mode == CacheMode::kPerSearch) {
        filter_cache_.clear();
        filter_lru_.clear();
    }
}

void TrustedCore::drop_caches() {
    std::lock_guard<std::mutex> lock(op_mu_);
    filter_cache_.clear();
    filter_lru_.clear();
    digest_cache_.clear();
    digest_lru_.clear();
    digest_lru_pos_.clear();
}

void TrustedCore::cache_insert(const std::string& label, SubFilter filter) {
    if (config_.cache_mode == CacheMode::kLru) {
        filter_lru_.remove(label);
        while (!filter_lru_.empty() && filter_cache_.size() >= config_.filter_cache_capacity &&
               !filter_cache_.count(label)) {
            filter_cache_.erase(filter_lru_.back());
            filter_lru_.pop_back();
        }
        filter_lru_.push_front(label);
    }
    auto it = filter_cache_.find(label);
    if (it == filter_cache_.end()) {
        filter_cache_.emplace(label, std::move(filter));
    } else {
        it->second = std::move(filter);
    }
}

void TrustedCore::cache_drop(const std::string& label) {
    filter_cache_.erase(label);
    if (config_.cache_mode == CacheMode::kLru) filter_lru_.remove(label);
}

const SubFilter& TrustedCore::acquire_filter(const std::string& label, SearchStats* stats) {
    auto it = filter_cache_.find(label);
    if (it != filter_cache_.end()) {
        if (config_.cache_mode == CacheMode::kLru) {
            filter_lru_.remove(label);
            filter_lru_.push_front(label);
        }
        return it->second;
    }
    LoadFilterMsg q;
    q.label = label;
    if (stats) ++stats->subfilters_loaded;
    Bytes resp = roundtrip(pack(q), stats);
    FilterResultMsg r = expect<FilterResultMsg>(resp);
    if (verifying()) {
        const Digest32* want = tree_.digest(label);
        if (!want) throw std::logic_error("sub-filter digest not tracked");
        if (hash_h3(as_span(r.bytes)) != *want)
            throw IntegrityViolation("sub-filter digest mismatch");
    }
    SubFilter filter = [&] {
        try {
            return SubFilter::deserialize(as_span(r.bytes), config_.filter_params, label);
        } catch (const DecodeError& e) {
            if (verifying()) throw IntegrityViolation(std::string("sub-filter rejected: ") + e.what());
            throw ProtocolError(std::string("sub-filter rejected: ") + e.what());
        }
    }();
    cache_insert(label, std::move(filter));
    return filter_cache_.at(label);
}

void TrustedCore::apply_server_splits(const std::vector<std::string>& parents) {
    for (const std::string& parent : parents) {
        tree_.split_leaf(parent);
        cache_drop(parent);
    }
}

TrustedCore::FilterStage TrustedCore::stage_filter_mutation(const std::string& label,
                                                            uint16_t delta, uint64_t mu,
                                                            bool insert,
                                                            SearchStats* stats) {
    FilterStage st;
    st.staged.emplace(label, acquire_filter(label, stats));
    if (!insert) {
        SubFilter& f = st.staged.at(label);
        if (!f.remove(delta, mu))
            throw IntegrityViolation("fingerprint missing from sub-filter");
        ReplaceFilterMsg msg;
        msg.label = label;
        msg.bytes = f.serialize();
        st.messages.push_back(pack(msg));
        return st;
    }
    std::string cur = label;
    uint16_t cur_fp = delta;
    uint64_t cur_mu = mu;
    for (;;) {
        auto homeless = st.staged.at(cur).insert(cur_fp, cur_mu);
        if (!homeless) break;
        auto [left, right] = st.staged.at(cur).split();
        st.split_parents.push_back(cur);
        ReplaceChildrenMsg rc;
        rc.parent = cur;
        rc.left = left.serialize();
        rc.right = right.serialize();
        st.messages.push_back(pack(rc));
        st.staged.erase(cur);
        std::string left_label = left.label();
        std::string right_label = right.label();
        unsigned child_level = left_label.size();
        st.staged.emplace(std::move(left_label), std::move(left));
        st.staged.emplace(std::move(right_label), std::move(right));
        cur_fp = homeless->fp;
        cur_mu = homeless->bucket;  // bucket indices survive splits
        cur.push_back(((cur_fp >> (16u - child_level)) & 1u) ? '1' : '0');
    }
    ReplaceFilterMsg fin;
    fin.label = cur;
    fin.bytes = st.staged.at(cur).serialize();
    st.messages.push_back(pack(fin));
    return st;
}

void TrustedCore::commit_filter_stage(FilterStage& stage) {
    for (const std::string& parent : stage.split_parents) {
        tree_.split_leaf(parent);
        tree_.erase_digest(parent);
        cache_drop(parent);
    }
    for (auto& [label, filter] : stage.staged) {
        tree_.set_digest(label, hash_h3(as_span(filter.serialize())));
        cache_insert(label, std::move(filter));
    }
}

const MultisetHash& TrustedCore::require_mh(const KeywordRef& k) const {
    auto it = mh_.find(k.ckey);
    if (it == mh_.end()) throw std::logic_error("live keyword without multiset hash");
    return it->second;
}

mpz_class TrustedCore::prime_for(const Digest32& h4w, const Digest32& h_w) const {
    Bytes label;
    put_bytes(label, as_span(h4w));
    put_bytes(label, as_span(h_w));
    return hash_to_prime(as_span(label));
}

void TrustedCore::digest_cache_put(const std::string& ckey, const MultisetHash& mh) {
    if (config_.digest_cache_capacity == 0) return;
    auto pos = digest_lru_pos_.find(ckey);
    if (pos != digest_lru_pos_.end()) {
        digest_lru_.splice(digest_lru_.begin(), digest_lru_, pos->second);
    } else {
        while (!digest_lru_.empty() &&
               digest_cache_.size() >= config_.digest_cache_capacity) {
            digest_cache_.erase(digest_lru_.back());
            digest_lru_pos_.erase(digest_lru_.back());
            digest_lru_.pop_back();
        }
        digest_lru_.push_front(ckey);
        digest_lru_pos_[ckey] = digest_lru_.begin();
    }
    digest_cache_[ckey] = mh;
}

const MultisetHash* TrustedCore::digest_cache_get(const std::string& ckey) {
    auto it = digest_cache_.find(ckey);
    if (it == digest_cache_.end()) return nullptr;
    digest_lru_.splice(digest_lru_.begin(), digest_lru_, digest_lru_pos_.at(ckey));
    return &it->second;
}

void TrustedCore::digest_cache_erase(const std::string& ckey) {
    auto pos = digest_lru_pos_.find(ckey);
    if (pos == digest_lru_pos_.end()) return;
    digest_lru_.erase(pos->second);
    digest_lru_pos_.erase(pos);
    digest_cache_.erase(ckey);
}

uint32_t TrustedCore::assign_group(const Digest32& h4w) {
    if (group_count_ == 0) return 0;
    uint32_t g = static_cast<uint32_t>(low64(h4w) % group_count_);
    auto it = group_live_.find(g);
    if (it != group_live_.end() && it->second >= config_.acc_group_capacity)
        return group_count_;  // target full: open the next group
    return g;
}

// Checks a (h_w, witness) pair against the trusted group accumulator and
// returns the verified multiset hash.
MultisetHash TrustedCore::fetch_verified_mh(const KeywordRef& k, SearchStats* stats) {
    if (const MultisetHash* hit = digest_cache_get(k.ckey)) return *hit;
    LoadListMsg q;
    q.digest_query = digest_label(k);
    ListResultMsg r = expect<ListResultMsg>(roundtrip(pack(q), stats));
    if (!r.digest) throw IntegrityViolation("keyword digest missing from response");
    Digest32 h4w = *q.digest_query;
    mpz_class prime = prime_for(h4w, r.digest->first);
    auto git = acc_assign_.find(k.ckey);
    if (git == acc_assign_.end()) throw std::logic_error("live keyword without group");
    mpz_class wit = mpz_from_bytes(as_span(r.digest->second));
    if (!verify_witness(acc_key_.n, wit, prime, group_ac_.at(git->second)))
        throw IntegrityViolation("keyword digest witness rejected");
    MultisetHash mh = MultisetHash::from_bytes(as_span(r.digest->first));
    digest_cache_put(k.ckey, mh);
    return mh;
}

std::vector<std::pair<uint64_t, uint64_t>> TrustedCore::load_posting_list(
    const KeywordRef& k, uint32_t cnt, SearchStats& stats) {
    LoadListMsg q;
    q.stags.reserve(cnt);
    for (uint32_t j = 1; j <= cnt; ++j) q.stags.push_back(stag_for(k, j));

    MultisetHash expected;
    bool have_expected = false;
    bool digest_rides = false;
    if (verifying()) {
        if (accumulating()) {
            if (const MultisetHash* hit = digest_cache_get(k.ckey)) {
                expected = *hit;
                have_expected = true;
            } else {
                q.digest_query = digest_label(k);
                digest_rides = true;
            }
        } else {
            expected = require_mh(k);
            have_expected = true;
        }
    }

    ListResultMsg r = expect<ListResultMsg>(roundtrip(pack(q), &stats));
    if (verifying() && r.entries.size() != cnt)
        throw IntegrityViolation("posting list length mismatch");

    if (digest_rides) {
        if (!r.digest) throw IntegrityViolation("keyword digest missing from response");
        Digest32 h4w = *q.digest_query;
        mpz_class prime = prime_for(h4w, r.digest->first);
        auto git = acc_assign_.find(k.ckey);
        if (git == acc_assign_.end()) throw std::logic_error("live keyword without group");
        mpz_class wit = mpz_from_bytes(as_span(r.digest->second));
        if (!verify_witness(acc_key_.n, wit, prime, group_ac_.at(git->second)))
            throw IntegrityViolation("keyword digest witness rejected");
        expected = MultisetHash::from_bytes(as_span(r.digest->first));
        have_expected = true;
        digest_cache_put(k.ckey, expected);
    }

    PrfBlock mask = record_mask(k);
    std::vector<std::pair<uint64_t, uint64_t>> rows;
    std::vector<uint32_t> counters;
    rows.reserve(r.entries.size());
    counters.reserve(r.entries.size());
    MultisetHash recomputed;
    for (const Bytes& ct : r.entries) {
        uint64_t id = 0, aux = 0;
        uint32_t c = 0;
        try {
            decrypt_record(mask, as_span(ct), id, aux, c);
        } catch (const DecodeError& e) {
            if (verifying())
                throw IntegrityViolation(std::string("posting record rejected: ") + e.what());
            throw ProtocolError(std::string("posting record rejected: ") + e.what());
        }
        ++stats.decryptions;
        rows.emplace_back(id, aux);
        counters.push_back(c);
        if (verifying()) {
            Bytes elem;
            config_.codec.put_id(elem, id);
            config_.codec.put_weight(elem, aux);
            recomputed.add(as_span(elem));
        }
    }
    if (verifying()) {
        // Content first (multiset hash), then per-slot counters; together they
        // pin both the set of records and their order.
        if (!have_expected || !(recomputed == expected))
            throw IntegrityViolation("posting list multiset hash mismatch");
        for (size_t j = 0; j < counters.size(); ++j)
            if (counters[j] != j + 1)
                throw IntegrityViolation("posting record counter mismatch");
    }
    return rows;
}

std::vector<std::pair<uint64_t, uint64_t>> TrustedCore::checked_list(const KeywordRef& k,
                                                                     SearchStats& stats) {
    auto it = update_cnt_.find(k.ckey);
    if (it == update_cnt_.end() || it->second == 0) return {};
    return load_posting_list(k, it->second, stats);
}

void TrustedCore::update(const UpdateToken& token, std::optional<uint32_t> id_u) {
    std::lock_guard<std::mutex> lock(op_mu_);
    KeywordRef k = kw(token.w, id_u);
    if (token.w.empty()) throw ContractViolation("empty keyword");
    if (!FieldCodec::fits(token.aux, config_.codec.weight_width))
        throw ContractViolation("weight or position out of range");
    if (!FieldCodec::fits(token.id_in, config_.codec.id_width))
        throw ContractViolation("vertex id out of range");
    begin_op_cache();
    do_update(k, token);
}

void TrustedCore::do_update(const KeywordRef& k, const UpdateToken& token) {
    if (token.op == UpdateOp::kInsert) {
        do_insert(k, token);
    } else {
        do_delete(k, token);
    }
}

void TrustedCore::do_insert(const KeywordRef& k, const UpdateToken& token) {
    uint32_t cnt = 0;
    if (auto it = update_cnt_.find(k.ckey); it != update_cnt_.end()) cnt = it->second;
    if (!FieldCodec::fits(static_cast<uint64_t>(cnt) + 1, config_.codec.counter_width))
        throw ContractViolation("keyword counter exhausted");
    uint32_t new_cnt = cnt + 1;
    std::optional<uint32_t> pos =
        token.positional ? std::optional<uint32_t>(static_cast<uint32_t>(token.aux))
                         : std::nullopt;

    // Phase 1: loads and checks only; trusted state stays untouched.
    MultisetHash old_mh;
    if (verifying()) {
        if (accumulating()) {
            if (cnt > 0) old_mh = fetch_verified_mh(k, nullptr);
        } else if (cnt > 0) {
            old_mh = require_mh(k);
        }
    }

    Token ind = ind_for(k, token.id_in, pos);
    if (cnt > 0) {
        auto probe = expect_one_or_absent(roundtrip(pack(LoadPosMsg{ind}), nullptr));
        if (probe) {
            if (verifying()) {
                uint32_t i = 0;
                uint64_t id_bound = 0;
                PrfBlock mask = record_mask(k);
                try {
                    decrypt_posrec(mask, as_span(*probe), i, id_bound);
                } catch (const DecodeError& e) {
                    throw IntegrityViolation(std::string("position record rejected: ") +
                                             e.what());
                }
                if (id_bound != token.id_in)
                    throw IntegrityViolation("position record binds a different vertex");
            }
            throw ContractViolation("duplicate insert");
        }
    }

    PrfBlock mask = record_mask(k);
    UpdateInsertMsg ins;
    ins.stag = stag_for(k, new_cnt);
    ins.id_e = encrypt_record(mask, token.id_in, token.aux, new_cnt);
    ins.ind = ind;
    ins.stag_e = encrypt_posrec(mask, new_cnt, token.id_in);

    Bytes xt = xtag_bytes(k, token.id_in, pos);
    uint16_t delta = hash_h2_fingerprint(as_span(xt));
    uint64_t mu = hash_h1(as_span(xt));
    std::string routed = tree_.route(delta);

    FilterStage stage;
    if (verifying()) {
        stage = stage_filter_mutation(routed, delta, mu, /*insert=*/true, nullptr);
        ins.mu = 0;
        ins.delta = 0;
    } else {
        ins.mu = static_cast<uint32_t>(mu);
        ins.delta = delta;
    }

    MultisetHash new_mh = old_mh;
    Bytes elem;
    if (verifying()) {
        config_.codec.put_id(elem, token.id_in);
        config_.codec.put_weight(elem, token.aux);
        new_mh.add(as_span(elem));
    }

    // vsecgraph_a: plan the accumulator move before committing anything.
    GroupDigestUpdateMsg gd;
    uint32_t group = 0;
    bool fresh_assign = false;
    mpz_class prime_old, prime_new;
    if (accumulating()) {
        Digest32 h4w = digest_label(k);
        if (cnt > 0) {
            group = acc_assign_.at(k.ckey);
            prime_old = prime_for(h4w, old_mh.to_bytes());
            gd.old_prime = mpz_to_bytes(prime_old);
        } else {
            group = assign_group(h4w);
            fresh_assign = true;
        }
        Digest32 h_w_new = new_mh.to_bytes();
        prime_new = prime_for(h4w, h_w_new);
        gd.group = group;
        gd.h4w = h4w;
        gd.fresh = {h_w_new, mpz_to_bytes(prime_new)};
    }

    // Phase 2: commit trusted state, then stream the mutations out.
    update_cnt_[k.ckey] = new_cnt;
    if (verifying() && !accumulating()) mh_[k.ckey] = new_mh;
    if (verifying()) commit_filter_stage(stage);
    if (accumulating()) {
        if (fresh_assign) {
            if (group >= group_count_) group_count_ = group + 1;
            acc_assign_[k.ckey] = group;
            ++group_live_[group];
        }
        auto git = group_ac_.try_emplace(group, acc_key_.g).first;
        Accumulator acc(acc_key_);
        acc.set_value(git->second);
        if (cnt > 0) {
            acc.swap(prime_old, prime_new);
        } else {
            acc.insert(prime_new);
        }
        git->second = acc.value();
        digest_cache_put(k.ckey, new_mh);
    }

    std::vector<std::string> splits;
    expect_ack(pack(ins), nullptr, &splits);
    if (!verifying()) {
        cache_drop(routed);
        apply_server_splits(splits);
    } else {
        for (const Bytes& msg : stage.messages) expect_ack(msg, nullptr);
    }
    if (accumulating()) expect_ack(pack(gd), nullptr);
}

void TrustedCore::do_delete(const KeywordRef& k, const UpdateToken& token) {
    auto cit = update_cnt_.find(k.ckey);
    if (cit == update_cnt_.end() || cit->second == 0)
        throw ContractViolation("deleting an unknown pair");
    uint32_t cnt = cit->second;
    std::optional<uint32_t> pos =
        token.positional ? std::optional<uint32_t>(static_cast<uint32_t>(token.aux))
                         : std::nullopt;
    PrfBlock mask = record_mask(k);

    // Phase 1: resolve the slot, fetch the records, verify everything.
    MultisetHash old_mh;
    if (verifying()) {
        old_mh = accumulating() ? fetch_verified_mh(k, nullptr) : require_mh(k);
    }

    Token ind_del = ind_for(k, token.id_in, pos);
    auto posrec = expect_one_or_absent(roundtrip(pack(LoadPosMsg{ind_del}), nullptr));
    if (!posrec) throw ContractViolation("deleting an unknown pair");
    uint32_t slot = 0;
    uint64_t bound_id = 0;
    try {
        decrypt_posrec(mask, as_span(*posrec), slot, bound_id);
    } catch (const DecodeError& e) {
        if (verifying())
            throw IntegrityViolation(std::string("position record rejected: ") + e.what());
        throw ProtocolError(std::string("position record rejected: ") + e.what());
    }
    if (verifying() && bound_id != token.id_in)
        throw IntegrityViolation("position record binds a different vertex");
    if (slot < 1 || slot > cnt) {
        if (verifying()) throw IntegrityViolation("position record counter out of range");
        throw ProtocolError("position record counter out of range");
    }

    Token stag_slot = stag_for(k, slot);
    auto del_ct = expect_one_or_absent(roundtrip(pack(LoadOneMsg{stag_slot}), nullptr));
    if (!del_ct) {
        if (verifying()) throw IntegrityViolation("posting record missing");
        throw ProtocolError("posting record missing");
    }
    uint64_t del_id = 0, del_aux = 0;
    uint32_t del_counter = 0;
    try {
        decrypt_record(mask, as_span(*del_ct), del_id, del_aux, del_counter);
    } catch (const DecodeError& e) {
        if (verifying())
            throw IntegrityViolation(std::string("posting record rejected: ") + e.what());
        throw ProtocolError(std::string("posting record rejected: ") + e.what());
    }
    if (verifying() && (del_id != token.id_in || del_counter != slot))
        throw IntegrityViolation("posting record does not match the deleted pair");

    uint64_t tail_id = del_id, tail_aux = del_aux;
    Token stag_tail = stag_slot;
    if (slot < cnt) {
        stag_tail = stag_for(k, cnt);
        auto tail_ct = expect_one_or_absent(roundtrip(pack(LoadOneMsg{stag_tail}), nullptr));
        if (!tail_ct) {
            if (verifying()) throw IntegrityViolation("tail posting record missing");
            throw ProtocolError("tail posting record missing");
        }
        uint32_t tail_counter = 0;
        try {
            decrypt_record(mask, as_span(*tail_ct), tail_id, tail_aux, tail_counter);
        } catch (const DecodeError& e) {
            if (verifying())
                throw IntegrityViolation(std::string("posting record rejected: ") + e.what());
            throw ProtocolError(std::string("posting record rejected: ") + e.what());
        }
        if (verifying() && tail_counter != cnt)
            throw IntegrityViolation("tail posting record counter mismatch");
    }

    Bytes xt = xtag_bytes(k, token.id_in, pos);
    uint16_t delta = hash_h2_fingerprint(as_span(xt));
    uint64_t mu = hash_h1(as_span(xt));
    std::string routed = tree_.route(delta);

    FilterStage stage;
    if (verifying()) stage = stage_filter_mutation(routed, delta, mu, /*insert=*/false, nullptr);

    uint32_t new_cnt = cnt - 1;
    MultisetHash new_mh = old_mh;
    if (verifying()) {
        Bytes elem;
        config_.codec.put_id(elem, del_id);
        config_.codec.put_weight(elem, del_aux);
        new_mh.remove(as_span(elem));
    }

    UpdateDeleteMsg del;
    del.stag = stag_slot;
    del.id_e = encrypt_record(mask, tail_id, tail_aux, slot);
    del.stag_tail = stag_tail;
    del.ind_erase = ind_del;
    del.ind_rewrite = slot < cnt
                          ? ind_for(k, tail_id,
                                    token.positional
                                        ? std::optional<uint32_t>(static_cast<uint32_t>(tail_aux))
                                        : std::nullopt)
                          : ind_del;
    del.stag_e = encrypt_posrec(mask, slot, tail_id);
    if (!verifying()) {
        del.mu = static_cast<uint32_t>(mu);
        del.delta = delta;
    }

    GroupDigestUpdateMsg gd;
    mpz_class prime_old, prime_new;
    uint32_t group = 0;
    if (accumulating()) {
        Digest32 h4w = digest_label(k);
        group = acc_assign_.at(k.ckey);
        prime_old = prime_for(h4w, old_mh.to_bytes());
        gd.group = group;
        gd.h4w = h4w;
        gd.old_prime = mpz_to_bytes(prime_old);
        if (new_cnt > 0) {
            prime_new = prime_for(h4w, new_mh.to_bytes());
            gd.fresh = {new_mh.to_bytes(), mpz_to_bytes(prime_new)};
        }
    }

    // Phase 2: commit, then send.
    if (new_cnt == 0) {
        update_cnt_.erase(k.ckey);
        mh_.erase(k.ckey);
    } else {
        update_cnt_[k.ckey] = new_cnt;
        if (verifying() && !accumulating()) mh_[k.ckey] = new_mh;
    }
    if (verifying()) commit_filter_stage(stage);
    if (accumulating()) {
        Accumulator acc(acc_key_);
        acc.set_value(group_ac_.at(group));
        if (new_cnt > 0) {
            acc.swap(prime_old, prime_new);
        } else {
            acc.remove(prime_old);
        }
        group_ac_.at(group) = acc.value();
        if (new_cnt > 0) {
            digest_cache_put(k.ckey, new_mh);
        } else {
            digest_cache_erase(k.ckey);
            acc_assign_.erase(k.ckey);
            auto lit = group_live_.find(group);
            if (lit != group_live_.end() && lit->second > 0) --lit->second;
        }
    }

    expect_ack(pack(del), nullptr);
    if (!verifying()) {
        cache_drop(routed);
    } else {
        for (const Bytes& msg : stage.messages) expect_ack(msg, nullptr);
    }
    if (accumulating()) expect_ack(pack(gd), nullptr);
}

SearchResult TrustedCore::search_conjunctive(const std::vector<std::string>& ws,
                                             std::optional<uint32_t> id_u) {
    std::lock_guard<std::mutex> lock(op_mu_);
    if (ws.empty()) throw ContractViolation("empty conjunction");
    begin_op_cache();
    SearchResult out;
    KeywordRef k1 = kw(ws[0], id_u);
    auto rows = checked_list(k1, out.stats);
    for (const auto& [id, aux] : rows) {
        bool match = true;
        for (size_t i = 1; i < ws.size(); ++i) {
            KeywordRef ki = kw(ws[i], id_u);
            Bytes xt = xtag_bytes(ki, id, std::nullopt);
            uint16_t delta = hash_h2_fingerprint(as_span(xt));
            uint64_t mu = hash_h1(as_span(xt));
            const SubFilter& f = acquire_filter(tree_.route(delta), &out.stats);
            ++out.stats.membership_checks;
            if (!f.contains(delta, mu)) {
                match = false;
                break;
            }
        }
        if (match) out.ids.push_back(id);
    }
    std::sort(out.ids.begin(), out.ids.end());
    out.ids.erase(std::unique(out.ids.begin(), out.ids.end()), out.ids.end());
    return out;
}

SearchResult TrustedCore::search_single(const std::string& w1, unsigned hops,
                                        std::optional<uint32_t> id_u) {
    std::lock_guard<std::mutex> lock(op_mu_);
    if (hops == 0) throw ContractViolation("at least one hop");
    begin_op_cache();
    SearchResult out;
    auto colon = w1.rfind(':');
    std::string type = colon == std::string::npos ? std::string() : w1.substr(colon + 1);
    std::set<std::string> visited{w1};
    std::set<uint64_t> found;
    std::vector<std::string> frontier{w1};
    for (unsigned hop = 0; hop < hops && !frontier.empty(); ++hop) {
        std::vector<std::string> next;
        for (const std::string& w : frontier) {
            KeywordRef k = kw(w, id_u);
            auto rows = checked_list(k, out.stats);
            for (const auto& [id, aux] : rows) {
                found.insert(id);
                std::string dw = format_id(id) + ":" + type;
                if (visited.insert(dw).second) next.push_back(std::move(dw));
            }
        }
        frontier = std::move(next);
    }
    out.ids.assign(found.begin(), found.end());
    return out;
}

SearchResult TrustedCore::search_fuzzy(
    const std::string& w1, const std::vector<std::pair<std::string, uint32_t>>& grams,
    std::optional<uint32_t> id_u) {
    std::lock_guard<std::mutex> lock(op_mu_);
    begin_op_cache();
    SearchResult out;
    KeywordRef k1 = kw(w1, id_u);
    auto rows = checked_list(k1, out.stats);
    std::set<uint64_t> found;
    for (const auto& [id, pos] : rows) {
        bool match = true;
        for (const auto& [g, delta_pos] : grams) {
            uint64_t shifted = pos + static_cast<uint64_t>(delta_pos);
            if (!FieldCodec::fits(shifted, config_.codec.weight_width)) {
                match = false;
                break;
            }
            KeywordRef kg = kw(g, id_u);
            Bytes xt = xtag_bytes(kg, id, static_cast<uint32_t>(shifted));
            uint16_t delta = hash_h2_fingerprint(as_span(xt));
            uint64_t mu = hash_h1(as_span(xt));
            const SubFilter& f = acquire_filter(tree_.route(delta), &out.stats);
            ++out.stats.membership_checks;
            if (!f.contains(delta, mu)) {
                match = false;
                break;
            }
        }
        if (match) found.insert(id);
    }
    out.ids.assign(found.begin(), found.end());
    return out;
}

uint32_t TrustedCore::update_count(const std::string& w,
                                   std::optional<uint32_t> id_u) const {
    std::lock_guard<std::mutex> lock(op_mu_);
    const ClientCtx& ctx = ctx_for(id_u);
    auto it = update_cnt_.find(ctx.ckey_prefix + w);
    return it == update_cnt_.end() ? 0 : it->second;
}

size_t TrustedCore::keyword_count() const {
    std::lock_guard<std::mutex> lock(op_mu_);
    return update_cnt_.size();
}

uint32_t TrustedCore::group_count() const {
    std::lock_guard<std::mutex> lock(op_mu_);
    return group_count_;
}

}  // namespace secgraph
