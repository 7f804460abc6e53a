#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "secgraph/bytes.hpp"

namespace secgraph {

inline constexpr size_t kPrfBlockBytes = 32;
using PrfKey = std::array<uint8_t, kPrfBlockBytes>;
using PrfBlock = std::array<uint8_t, kPrfBlockBytes>;

// Key triplet held in trusted memory: K_T keys the stag PRF, K_Z the XOR
// masks, K_X the inverse-map tags. Never serialized.
struct SecretKeys {
    PrfKey k_t{};
    PrfKey k_z{};
    PrfKey k_x{};

    static SecretKeys sample();                 // OS randomness
    static SecretKeys derive(uint64_t seed);    // deterministic, for reproducible runs
    SecretKeys derive_client(uint32_t client_id) const;
};

// Keyed MAC (HMAC-SHA256) over arbitrary input.
PrfBlock prf(const PrfKey& key, ByteSpan input);

// XOR stream encoding. The mask covers records up to 32 bytes directly and
// is extended by counter-mode re-keying for longer records, so
// xor_mask(xor_mask(r, m), m) == r at any length.
Bytes xor_mask(ByteSpan record, const PrfBlock& mask);

// Unkeyed hashes, domain-separated from each other.
uint64_t hash_h1(ByteSpan input);             // bucket-index domain
uint16_t hash_h2_fingerprint(ByteSpan input); // 16-bit fingerprint, never 0
Digest32 hash_h3(ByteSpan input);             // sub-filter digests
Digest32 hash_h4(ByteSpan input);             // keyword digests (accumulator labels)
Digest32 sha256(ByteSpan input);

// Fixed-width little-endian field layout for everything that gets XOR-masked.
// Widths are bytes; encode rejects values that do not fit.
struct FieldCodec {
    unsigned id_width = 8;
    unsigned weight_width = 4;
    unsigned counter_width = 4;   // update counter i and fuzzy pos share this

    void put_id(Bytes& out, uint64_t id) const { put_field(out, id, id_width); }
    void put_weight(Bytes& out, uint64_t w) const { put_field(out, w, weight_width); }
    void put_counter(Bytes& out, uint64_t c) const { put_field(out, c, counter_width); }

    uint64_t get_id(ByteReader& r) const { return get_field(r, id_width); }
    uint64_t get_weight(ByteReader& r) const { return get_field(r, weight_width); }
    uint64_t get_counter(ByteReader& r) const { return get_field(r, counter_width); }

    static void put_field(Bytes& out, uint64_t v, unsigned width);
    static uint64_t get_field(ByteReader& r, unsigned width);
    static bool fits(uint64_t v, unsigned width);
};

}  // namespace secgraph
