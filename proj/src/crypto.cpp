#include "secgraph/crypto.hpp"

#include <cstring>
#include <stdexcept>

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

namespace secgraph {
namespace {

Digest32 sha256_prefixed(uint8_t domain, ByteSpan input) {
    Bytes tagged;
    tagged.reserve(input.size() + 1);
    tagged.push_back(domain);
    tagged.insert(tagged.end(), input.begin(), input.end());
    Digest32 out{};
    SHA256(tagged.data(), tagged.size(), out.data());
    return out;
}

}  // namespace

SecretKeys SecretKeys::sample() {
    SecretKeys k;
    if (RAND_bytes(k.k_t.data(), static_cast<int>(k.k_t.size())) != 1 ||
        RAND_bytes(k.k_z.data(), static_cast<int>(k.k_z.size())) != 1 ||
        RAND_bytes(k.k_x.data(), static_cast<int>(k.k_x.size())) != 1) {
        throw std::runtime_error("RAND_bytes failed");
    }
    return k;
}

SecretKeys SecretKeys::derive(uint64_t seed) {
    PrfKey root{};
    Bytes seed_bytes;
    put_u64(seed_bytes, seed);
    Digest32 d = sha256_prefixed(0x10, as_span(seed_bytes));
    std::memcpy(root.data(), d.data(), root.size());

    SecretKeys k;
    Bytes label;
    label = to_bytes(std::string("k_t"));
    k.k_t = prf(root, as_span(label));
    label = to_bytes(std::string("k_z"));
    k.k_z = prf(root, as_span(label));
    label = to_bytes(std::string("k_x"));
    k.k_x = prf(root, as_span(label));
    return k;
}

SecretKeys SecretKeys::derive_client(uint32_t client_id) const {
    Bytes id_bytes;
    put_u32(id_bytes, client_id);
    SecretKeys k;
    k.k_t = prf(k_t, as_span(id_bytes));
    k.k_z = prf(k_z, as_span(id_bytes));
    k.k_x = prf(k_x, as_span(id_bytes));
    return k;
}

PrfBlock prf(const PrfKey& key, ByteSpan input) {
    PrfBlock out{};
    unsigned int len = 0;
    if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), input.data(),
             input.size(), out.data(), &len) == nullptr ||
        len != out.size()) {
        throw std::runtime_error("HMAC failed");
    }
    return out;
}

Bytes xor_mask(ByteSpan record, const PrfBlock& mask) {
    Bytes out(record.begin(), record.end());
    size_t off = 0;
    uint32_t block_index = 0;
    PrfBlock cur = mask;
    while (off < out.size()) {
        if (block_index > 0) {
            Bytes ctr;
            put_u32(ctr, block_index);
            cur = prf(mask, as_span(ctr));  // mask doubles as key for extension blocks
        }
        size_t n = std::min(out.size() - off, cur.size());
        for (size_t i = 0; i < n; ++i) out[off + i] ^= cur[i];
        off += n;
        ++block_index;
    }
    return out;
}

uint64_t hash_h1(ByteSpan input) {
    Digest32 d = sha256_prefixed(0x01, input);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | d[static_cast<size_t>(i)];
    return v;
}

uint16_t hash_h2_fingerprint(ByteSpan input) {
    Digest32 d = sha256_prefixed(0x02, input);
    uint16_t fp = static_cast<uint16_t>(d[0] | (d[1] << 8));
    return fp == 0 ? uint16_t{1} : fp;  // 0 is the empty-slot sentinel
}

Digest32 hash_h3(ByteSpan input) { return sha256_prefixed(0x03, input); }

Digest32 hash_h4(ByteSpan input) { return sha256_prefixed(0x04, input); }

Digest32 sha256(ByteSpan input) {
    Digest32 out{};
    SHA256(input.data(), input.size(), out.data());
    return out;
}

void FieldCodec::put_field(Bytes& out, uint64_t v, unsigned width) {
    if (!fits(v, width)) throw std::out_of_range("field value exceeds width");
    for (unsigned i = 0; i < width; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint64_t FieldCodec::get_field(ByteReader& r, unsigned width) {
    uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) v |= static_cast<uint64_t>(r.u8()) << (8 * i);
    return v;
}

bool FieldCodec::fits(uint64_t v, unsigned width) {
    if (width >= 8) return true;
    return v < (uint64_t{1} << (8 * width));
}

}  // namespace secgraph
