#include "secgraph/ldcf.hpp"

#include <algorithm>
#include <stdexcept>

#include "secgraph/crypto.hpp"

namespace secgraph {
namespace {

bool is_pow2(uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }

uint32_t label_bits_value(const std::string& label) {
    uint32_t v = 0;
    for (char c : label) {
        if (c != '0' && c != '1') throw std::invalid_argument("label must be binary");
        v = (v << 1) | static_cast<uint32_t>(c - '0');
    }
    return v;
}

uint16_t remap(uint16_t residual) { return residual == 0 ? uint16_t{1} : residual; }

}  // namespace

uint32_t partner_offset(uint16_t full_fp, uint32_t bucket_count) {
    Bytes b;
    put_u16(b, full_fp);
    return static_cast<uint32_t>(hash_h1(as_span(b)) & (bucket_count - 1));
}

SubFilter::SubFilter(const FilterParams& params, std::string label)
    : params_(params), label_(std::move(label)) {
    if (!is_pow2(params_.bucket_count)) throw std::invalid_argument("bucket_count not a power of two");
    if (params_.fp_bits != 16) throw std::invalid_argument("fingerprint width is fixed at 16");
    if (label_.size() > 15) throw std::invalid_argument("filter level exceeds fingerprint width");
    label_value_ = label_bits_value(label_);
    slots_.assign(params_.capacity(), 0);
}

uint16_t SubFilter::stored_residual(uint16_t full_fp) const {
    unsigned bits = residual_bits();
    uint16_t mask = static_cast<uint16_t>(bits >= 16 ? 0xffff : (1u << bits) - 1);
    return remap(static_cast<uint16_t>(full_fp & mask));
}

uint32_t SubFilter::bucket_of(uint64_t mu) const {
    return static_cast<uint32_t>(mu & (params_.bucket_count - 1));
}

bool SubFilter::place_in_bucket(uint32_t bucket, uint16_t residual) {
    size_t base = static_cast<size_t>(bucket) * params_.slot_count;
    for (uint8_t s = 0; s < params_.slot_count; ++s) {
        if (slots_[base + s] == 0) {
            slots_[base + s] = residual;
            ++occupied_;
            return true;
        }
    }
    return false;
}

std::optional<SubFilter::Homeless> SubFilter::insert(uint16_t full_fp, uint64_t mu) {
    uint32_t b1 = bucket_of(mu);
    uint32_t offset = partner_offset(full_fp, params_.bucket_count);
    uint32_t b2 = b1 ^ offset;
    uint16_t residual = stored_residual(full_fp);

    if (place_in_bucket(b1, residual) || place_in_bucket(b2, residual)) return std::nullopt;

    uint16_t cur_fp = full_fp;
    uint32_t bucket = (kick_rotation_ & 1) ? b2 : b1;
    for (uint32_t kick = 0; kick < params_.max_kicks; ++kick) {
        // Pick a victim whose full fingerprint is reconstructible; a stored
        // residual of 1 is ambiguous and must stay put.
        size_t base = static_cast<size_t>(bucket) * params_.slot_count;
        uint8_t start = static_cast<uint8_t>(kick_rotation_++ % params_.slot_count);
        int victim = -1;
        for (uint8_t i = 0; i < params_.slot_count; ++i) {
            uint8_t s = static_cast<uint8_t>((start + i) % params_.slot_count);
            if (!slot_ambiguous(slots_[base + s])) {
                victim = s;
                break;
            }
        }
        if (victim < 0) return Homeless{cur_fp, bucket};

        uint16_t victim_res = slots_[base + static_cast<size_t>(victim)];
        uint16_t victim_fp = static_cast<uint16_t>((label_value_ << residual_bits()) | victim_res);
        slots_[base + static_cast<size_t>(victim)] = stored_residual(cur_fp);
        cur_fp = victim_fp;
        bucket ^= partner_offset(victim_fp, params_.bucket_count);
        if (place_in_bucket(bucket, stored_residual(cur_fp))) return std::nullopt;
    }
    // occupied_ is unchanged across the loop: every swap keeps one in hand.
    return Homeless{cur_fp, bucket};
}

bool SubFilter::contains(uint16_t full_fp, uint64_t mu) const {
    uint32_t b1 = bucket_of(mu);
    uint32_t b2 = b1 ^ partner_offset(full_fp, params_.bucket_count);
    uint16_t residual = stored_residual(full_fp);
    for (uint32_t b : {b1, b2}) {
        size_t base = static_cast<size_t>(b) * params_.slot_count;
        for (uint8_t s = 0; s < params_.slot_count; ++s)
            if (slots_[base + s] == residual) return true;
        if (b1 == b2) break;
    }
    return false;
}

bool SubFilter::remove(uint16_t full_fp, uint64_t mu) {
    uint32_t b1 = bucket_of(mu);
    uint32_t b2 = b1 ^ partner_offset(full_fp, params_.bucket_count);
    uint16_t residual = stored_residual(full_fp);
    for (uint32_t b : {b1, b2}) {
        size_t base = static_cast<size_t>(b) * params_.slot_count;
        for (uint8_t s = 0; s < params_.slot_count; ++s) {
            if (slots_[base + s] == residual) {
                slots_[base + s] = 0;
                --occupied_;
                return true;
            }
        }
        if (b1 == b2) break;
    }
    return false;
}

std::pair<SubFilter, SubFilter> SubFilter::split() const {
    if (residual_bits() <= 1) throw std::runtime_error("filter capacity exhausted at maximum depth");
    SubFilter left(params_, label_ + '0');
    SubFilter right(params_, label_ + '1');
    unsigned child_bits = residual_bits() - 1;
    uint16_t child_mask = static_cast<uint16_t>((1u << child_bits) - 1);
    for (uint32_t b = 0; b < params_.bucket_count; ++b) {
        size_t base = static_cast<size_t>(b) * params_.slot_count;
        for (uint8_t s = 0; s < params_.slot_count; ++s) {
            uint16_t r = slots_[base + s];
            if (r == 0) continue;
            // Ambiguous residual 1 has top bit 0 either way, so it lands in
            // the left child as residual 1, staying self-consistent.
            uint16_t branch = static_cast<uint16_t>((r >> child_bits) & 1);
            uint16_t child_res = remap(static_cast<uint16_t>(r & child_mask));
            SubFilter& child = branch ? right : left;
            child.slots_[base + s] = child_res;
            ++child.occupied_;
        }
    }
    return {std::move(left), std::move(right)};
}

Bytes SubFilter::serialize() const {
    Bytes out;
    out.reserve(7 + slots_.size() * 2);
    out.push_back(level());
    put_u32(out, params_.bucket_count);
    out.push_back(params_.slot_count);
    out.push_back(params_.fp_bits);
    for (uint16_t s : slots_) put_u16(out, s);
    return out;
}

SubFilter SubFilter::deserialize(ByteSpan bytes, const FilterParams& params,
                                 const std::string& label) {
    ByteReader r(bytes);
    uint8_t level = r.u8();
    uint32_t bucket_count = r.u32();
    uint8_t slot_count = r.u8();
    uint8_t fp_bits = r.u8();
    if (level != label.size()) throw DecodeError("filter level does not match label");
    if (level > 15) throw DecodeError("filter level exceeds fingerprint width");
    if (!is_pow2(bucket_count)) throw DecodeError("bucket_count not a power of two");
    if (bucket_count != params.bucket_count || slot_count != params.slot_count)
        throw DecodeError("filter geometry mismatch");
    if (fp_bits != 16) throw DecodeError("unsupported fingerprint width");

    SubFilter f(params, label);
    uint16_t limit = static_cast<uint16_t>(
        f.residual_bits() >= 16 ? 0xffff : (1u << f.residual_bits()) - 1);
    for (size_t i = 0; i < f.slots_.size(); ++i) {
        uint16_t v = r.u16();
        if (v > limit) throw DecodeError("residual exceeds level width");
        f.slots_[i] = v;
        if (v != 0) ++f.occupied_;
    }
    r.expect_end();
    return f;
}

const std::string& IndexTree::route(uint16_t fp) const {
    static const std::string kRoot;
    std::string label;
    for (int depth = 0; depth <= 16; ++depth) {
        auto it = leaves_.find(label);
        if (it != leaves_.end()) return *it;
        if (depth == 16) break;
        label += static_cast<char>('0' + ((fp >> (15 - depth)) & 1));
    }
    throw std::logic_error("fingerprint routes past every leaf");
}

void IndexTree::split_leaf(const std::string& label) {
    if (!leaves_.erase(label)) throw std::logic_error("split of a non-leaf label");
    digests_.erase(label);
    leaves_.insert(label + '0');
    leaves_.insert(label + '1');
}

std::vector<std::string> IndexTree::leaf_labels() const {
    std::vector<std::string> out(leaves_.begin(), leaves_.end());
    std::sort(out.begin(), out.end());
    return out;
}

const Digest32* IndexTree::digest(const std::string& label) const {
    auto it = digests_.find(label);
    return it == digests_.end() ? nullptr : &it->second;
}

LdcfContainer::LdcfContainer(const FilterParams& params) : params_(params) {
    filters_.emplace("", SubFilter(params_, ""));
}

std::vector<std::string> LdcfContainer::insert(uint16_t fp, uint64_t mu) {
    std::vector<std::string> splits;
    uint16_t cur_fp = fp;
    uint64_t cur_mu = mu;
    for (;;) {
        const std::string label = tree_.route(cur_fp);
        auto homeless = filters_.at(label).insert(cur_fp, cur_mu);
        if (!homeless) return splits;

        auto [left, right] = filters_.at(label).split();
        filters_.erase(label);
        filters_.emplace(left.label(), std::move(left));
        filters_.emplace(right.label(), std::move(right));
        tree_.split_leaf(label);
        ++split_count_;
        splits.push_back(label);
        cur_fp = homeless->fp;
        cur_mu = homeless->bucket;  // bucket indices survive the split
    }
}

bool LdcfContainer::contains(uint16_t fp, uint64_t mu) const {
    return filters_.at(tree_.route(fp)).contains(fp, mu);
}

bool LdcfContainer::remove(uint16_t fp, uint64_t mu) {
    return filters_.at(tree_.route(fp)).remove(fp, mu);
}

size_t LdcfContainer::element_count() const {
    size_t n = 0;
    for (const auto& [label, f] : filters_) n += f.size();
    return n;
}

void LdcfContainer::adopt(SubFilter filter) {
    std::string label = filter.label();
    filters_.erase(label);
    filters_.emplace(std::move(label), std::move(filter));
}

}  // namespace secgraph
