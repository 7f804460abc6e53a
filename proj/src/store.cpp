#include "secgraph/store.hpp"

#include <algorithm>
#include <mutex>

#include "secgraph/crypto.hpp"

namespace secgraph {
namespace {

Bytes error_frame(const std::string& message) {
    ErrorMsg e;
    e.message = message;
    return pack(e);
}

Bytes ack_frame(std::vector<std::string> splits = {}) {
    AckMsg a;
    a.splits = std::move(splits);
    return pack(a);
}

}  // namespace

Server::Server(StoreMode mode, const FilterParams& params, std::optional<AccumulatorPublic> acc)
    : mode_(mode), params_(params), acc_(std::move(acc)) {
    if (mode_ == StoreMode::kServerFilters) {
        container_.emplace(params_);
    } else {
        filters_.emplace("", SubFilter(params_, "").serialize());
    }
}

Bytes Server::handle(const Bytes& request_frame) {
    Frame f;
    try {
        f = decode_frame(as_span(request_frame));
    } catch (const DecodeError& e) {
        return error_frame(std::string("malformed frame: ") + e.what());
    }
    if (!is_request(f.kind)) return error_frame("not a request");
    try {
        return dispatch(f.kind, as_span(f.payload));
    } catch (const DecodeError& e) {
        return error_frame(std::string("malformed payload: ") + e.what());
    } catch (const std::exception& e) {
        return error_frame(std::string("store failure: ") + e.what());
    }
}

Bytes Server::dispatch(MsgKind kind, ByteSpan payload) {
    switch (kind) {
        case MsgKind::kUpdateInsert: {
            auto m = UpdateInsertMsg::decode(payload);
            std::unique_lock lock(mu_);
            return do_update_insert(m);
        }
        case MsgKind::kUpdateDelete: {
            auto m = UpdateDeleteMsg::decode(payload);
            std::unique_lock lock(mu_);
            return do_update_delete(m);
        }
        case MsgKind::kLoadList: {
            auto m = LoadListMsg::decode(payload);
            std::shared_lock lock(mu_);
            return do_load_list(m);
        }
        case MsgKind::kLoadFilter: {
            auto m = LoadFilterMsg::decode(payload);
            std::shared_lock lock(mu_);
            return do_load_filter(m);
        }
        case MsgKind::kLoadOne: {
            auto m = LoadOneMsg::decode(payload);
            std::shared_lock lock(mu_);
            auto it = tset_.find(key_of(m.stag));
            if (it == tset_.end()) return pack(NotFoundMsg{});
            OneResultMsg out;
            out.bytes = it->second;
            return pack(out);
        }
        case MsgKind::kLoadPos: {
            auto m = LoadPosMsg::decode(payload);
            std::shared_lock lock(mu_);
            auto it = itset_.find(key_of(m.ind));
            if (it == itset_.end()) return pack(NotFoundMsg{});
            OneResultMsg out;
            out.bytes = it->second;
            return pack(out);
        }
        case MsgKind::kReplaceFilter: {
            auto m = ReplaceFilterMsg::decode(payload);
            std::unique_lock lock(mu_);
            return do_replace_filter(m);
        }
        case MsgKind::kReplaceChildren: {
            auto m = ReplaceChildrenMsg::decode(payload);
            std::unique_lock lock(mu_);
            return do_replace_children(m);
        }
        case MsgKind::kGroupDigestUpdate: {
            auto m = GroupDigestUpdateMsg::decode(payload);
            std::unique_lock lock(mu_);
            return do_group_digest_update(m);
        }
        default:
            return error_frame("unhandled message kind");
    }
}

Bytes Server::do_update_insert(const UpdateInsertMsg& m) {
    std::string stag_key = key_of(m.stag);
    std::string ind_key = key_of(m.ind);
    if (tset_.count(stag_key)) return error_frame("stag reuse");
    if (itset_.count(ind_key)) return error_frame("inverse-map key reuse");
    tset_.emplace(std::move(stag_key), m.id_e);
    itset_.emplace(std::move(ind_key), m.stag_e);
    if (mode_ == StoreMode::kServerFilters) {
        return ack_frame(container_->insert(m.delta, m.mu));
    }
    return ack_frame();
}

Bytes Server::do_update_delete(const UpdateDeleteMsg& m) {
    std::string stag_key = key_of(m.stag);
    if (!tset_.count(stag_key)) return error_frame("unknown stag on delete-overwrite");
    if (!tset_.count(key_of(m.stag_tail))) return error_frame("unknown tail stag on delete");
    if (!itset_.count(key_of(m.ind_rewrite))) return error_frame("unknown inverse key on delete");
    // Write-then-erase: when the deleted slot is the tail itself the four
    // operations collapse to plain removal.
    tset_[stag_key] = m.id_e;
    tset_.erase(key_of(m.stag_tail));
    itset_[key_of(m.ind_rewrite)] = m.stag_e;
    itset_.erase(key_of(m.ind_erase));
    if (mode_ == StoreMode::kServerFilters) container_->remove(m.delta, m.mu);
    return ack_frame();
}

Bytes Server::do_load_list(const LoadListMsg& m) const {
    ListResultMsg out;
    out.entries.reserve(m.stags.size());
    for (const Token& stag : m.stags) {
        auto it = tset_.find(key_of(stag));
        if (it != tset_.end()) out.entries.push_back(it->second);
    }
    if (m.digest_query && acc_) {
        auto it = digests_.find(key_of(*m.digest_query));
        if (it != digests_.end()) {
            const auto& [h_w, group] = it->second;
            auto pit = products_.find(group);
            if (pit != products_.end()) {
                Bytes prime_label;
                prime_label.insert(prime_label.end(), m.digest_query->begin(),
                                   m.digest_query->end());
                prime_label.insert(prime_label.end(), h_w.begin(), h_w.end());
                mpz_class prime = hash_to_prime(as_span(prime_label));
                if (pit->second.divides(prime)) {
                    mpz_class w = pit->second.witness(acc_->n, acc_->g, prime);
                    out.digest = {h_w, mpz_to_bytes(w)};
                }
            }
        }
    }
    return pack(out);
}

Bytes Server::do_load_filter(const LoadFilterMsg& m) const {
    FilterResultMsg out;
    if (mode_ == StoreMode::kServerFilters) {
        if (!container_->has(m.label)) return pack(NotFoundMsg{});
        out.bytes = container_->at(m.label).serialize();
    } else {
        auto it = filters_.find(m.label);
        if (it == filters_.end()) return pack(NotFoundMsg{});
        out.bytes = it->second;
    }
    return pack(out);
}

Bytes Server::do_replace_filter(const ReplaceFilterMsg& m) {
    if (mode_ != StoreMode::kBlobFilters) return error_frame("filters are store-managed");
    auto it = filters_.find(m.label);
    if (it == filters_.end()) return error_frame("unknown sub-filter label");
    it->second = m.bytes;
    return ack_frame();
}

Bytes Server::do_replace_children(const ReplaceChildrenMsg& m) {
    if (mode_ != StoreMode::kBlobFilters) return error_frame("filters are store-managed");
    auto it = filters_.find(m.parent);
    if (it == filters_.end()) return error_frame("unknown sub-filter label");
    filters_.erase(it);
    filters_[m.parent + '0'] = m.left;
    filters_[m.parent + '1'] = m.right;
    return ack_frame();
}

Bytes Server::do_group_digest_update(const GroupDigestUpdateMsg& m) {
    if (!acc_) return error_frame("no accumulator configured");
    WitnessProduct& product = products_[m.group];
    if (m.old_prime) {
        mpz_class old_p = mpz_from_bytes(as_span(*m.old_prime));
        if (!product.divide(old_p))
            return error_frame("old digest prime does not divide group product");
    }
    if (m.fresh) {
        digests_[key_of(m.h4w)] = {m.fresh->first, m.group};
        product.multiply(mpz_from_bytes(as_span(m.fresh->second)));
    } else {
        digests_.erase(key_of(m.h4w));
    }
    return ack_frame();
}

size_t Server::tset_size() const {
    std::shared_lock lock(mu_);
    return tset_.size();
}

size_t Server::itset_size() const {
    std::shared_lock lock(mu_);
    return itset_.size();
}

size_t Server::filter_count() const {
    std::shared_lock lock(mu_);
    return mode_ == StoreMode::kServerFilters ? container_->filters().size() : filters_.size();
}

std::vector<std::string> Server::filter_labels() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    if (mode_ == StoreMode::kServerFilters) {
        return container_->tree().leaf_labels();
    }
    out.reserve(filters_.size());
    for (const auto& [label, bytes] : filters_) out.push_back(label);
    return out;
}

uint64_t Server::split_count() const {
    std::shared_lock lock(mu_);
    return container_ ? container_->split_count() : 0;
}

mpz_class Server::group_product_value(uint32_t group) const {
    std::shared_lock lock(mu_);
    auto it = products_.find(group);
    return it == products_.end() ? mpz_class(1) : it->second.value();
}

size_t Server::digest_count() const {
    std::shared_lock lock(mu_);
    return digests_.size();
}

Digest32 Server::state_digest() const {
    std::shared_lock lock(mu_);
    Bytes dump;
    auto add_map = [&dump](uint8_t tag, const std::unordered_map<std::string, Bytes>& m) {
        dump.push_back(tag);
        put_u32(dump, static_cast<uint32_t>(m.size()));
        std::vector<const std::pair<const std::string, Bytes>*> rows;
        rows.reserve(m.size());
        for (const auto& kv : m) rows.push_back(&kv);
        std::sort(rows.begin(), rows.end(),
                  [](const auto* a, const auto* b) { return a->first < b->first; });
        for (const auto* kv : rows) {
            put_lv(dump, as_span(kv->first));
            put_lv(dump, as_span(kv->second));
        }
    };
    add_map(1, tset_);
    add_map(2, itset_);
    dump.push_back(3);
    if (mode_ == StoreMode::kServerFilters) {
        put_u32(dump, static_cast<uint32_t>(container_->filters().size()));
        for (const auto& [label, filter] : container_->filters()) {
            put_lv(dump, as_span(label));
            put_lv(dump, as_span(filter.serialize()));
        }
    } else {
        put_u32(dump, static_cast<uint32_t>(filters_.size()));
        for (const auto& [label, bytes] : filters_) {
            put_lv(dump, as_span(label));
            put_lv(dump, as_span(bytes));
        }
    }
    dump.push_back(4);
    {
        std::vector<std::pair<std::string, std::pair<Digest32, uint32_t>>> rows(digests_.begin(),
                                                                                digests_.end());
        std::sort(rows.begin(), rows.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        put_u32(dump, static_cast<uint32_t>(rows.size()));
        for (const auto& [key, value] : rows) {
            put_lv(dump, as_span(key));
            dump.insert(dump.end(), value.first.begin(), value.first.end());
            put_u32(dump, value.second);
        }
    }
    dump.push_back(5);
    put_u32(dump, static_cast<uint32_t>(products_.size()));
    for (const auto& [group, product] : products_) {
        put_u32(dump, group);
        put_lv(dump, as_span(mpz_to_bytes(product.value())));
    }
    return sha256(as_span(dump));
}

}  // namespace secgraph
