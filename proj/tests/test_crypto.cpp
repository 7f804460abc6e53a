#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "secgraph/bytes.hpp"
#include "secgraph/crypto.hpp"

using namespace secgraph;

namespace {

Bytes random_bytes(std::mt19937_64& rng, size_t n) {
    Bytes b(n);
    for (auto& x : b) x = static_cast<uint8_t>(rng());
    return b;
}

}  // namespace

TEST_CASE("prf is deterministic and separates keys and inputs") {
    SecretKeys keys = SecretKeys::derive(7);
    Bytes in = to_bytes(std::string("alpha"));
    CHECK(prf(keys.k_t, as_span(in)) == prf(keys.k_t, as_span(in)));
    CHECK(prf(keys.k_t, as_span(in)) != prf(keys.k_z, as_span(in)));
    CHECK(prf(keys.k_t, as_span(in)) != prf(keys.k_x, as_span(in)));

    Bytes in2 = to_bytes(std::string("alphb"));
    CHECK(prf(keys.k_t, as_span(in)) != prf(keys.k_t, as_span(in2)));

    // Empty input is valid.
    Bytes empty;
    CHECK_NOTHROW(prf(keys.k_t, as_span(empty)));
}

TEST_CASE("prf outputs collide nowhere over 10^4 distinct inputs") {
    SecretKeys keys = SecretKeys::derive(11);
    std::set<std::string> seen;
    for (uint32_t i = 0; i < 10000; ++i) {
        Bytes in;
        put_u32(in, i);
        PrfBlock out = prf(keys.k_x, as_span(in));
        seen.insert(std::string(out.begin(), out.end()));
    }
    CHECK(seen.size() == 10000);
}

TEST_CASE("key derivation is deterministic and client keys are isolated") {
    CHECK(SecretKeys::derive(42).k_t == SecretKeys::derive(42).k_t);
    CHECK(SecretKeys::derive(42).k_z != SecretKeys::derive(43).k_z);

    SecretKeys base = SecretKeys::derive(42);
    SecretKeys c1 = base.derive_client(1);
    SecretKeys c2 = base.derive_client(2);
    CHECK(c1.k_t != c2.k_t);
    CHECK(c1.k_z != c2.k_z);
    CHECK(c1.k_x != c2.k_x);
    CHECK(c1.k_t != base.k_t);

    SecretKeys a = SecretKeys::sample();
    SecretKeys b = SecretKeys::sample();
    CHECK(a.k_t != b.k_t);
}

TEST_CASE("xor_mask is an involution at every record length") {
    std::mt19937_64 rng(123);
    SecretKeys keys = SecretKeys::derive(5);
    Bytes w = to_bytes(std::string("keyword"));
    PrfBlock mask = prf(keys.k_z, as_span(w));

    for (size_t len : {size_t{0}, size_t{1}, size_t{12}, size_t{16}, size_t{31}, size_t{32},
                       size_t{33}, size_t{48}, size_t{64}, size_t{100}}) {
        Bytes rec = random_bytes(rng, len);
        Bytes ct = xor_mask(as_span(rec), mask);
        CHECK(ct.size() == rec.size());
        if (len > 0) CHECK(ct != rec);
        CHECK(xor_mask(as_span(ct), mask) == rec);
    }

    // 10^4 random 48-byte records, the verified-update payload size.
    for (int i = 0; i < 10000; ++i) {
        Bytes rec = random_bytes(rng, 48);
        CHECK(xor_mask(as_span(xor_mask(as_span(rec), mask)), mask) == rec);
    }
}

TEST_CASE("xor_mask extension blocks differ from the first block") {
    SecretKeys keys = SecretKeys::derive(5);
    Bytes w = to_bytes(std::string("keyword"));
    PrfBlock mask = prf(keys.k_z, as_span(w));
    Bytes zeros(64, 0);
    Bytes stream = xor_mask(as_span(zeros), mask);
    Bytes first(stream.begin(), stream.begin() + 32);
    Bytes second(stream.begin() + 32, stream.end());
    CHECK(first != second);
    CHECK(Bytes(first.begin(), first.begin() + 32) == Bytes(mask.begin(), mask.end()));
}

TEST_CASE("hash domains are separated") {
    Bytes in = to_bytes(std::string("same input"));
    Digest32 h3 = hash_h3(as_span(in));
    Digest32 h4 = hash_h4(as_span(in));
    Digest32 plain = sha256(as_span(in));
    CHECK(h3 != h4);
    CHECK(h3 != plain);
    CHECK(h4 != plain);

    uint64_t h1 = hash_h1(as_span(in));
    uint64_t h3_prefix = 0;
    for (int i = 7; i >= 0; --i) h3_prefix = (h3_prefix << 8) | h3[static_cast<size_t>(i)];
    CHECK(h1 != h3_prefix);
}

TEST_CASE("fingerprints are never the empty-slot sentinel") {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 100000; ++i) {
        Bytes in = random_bytes(rng, 24);
        CHECK(hash_h2_fingerprint(as_span(in)) != 0);
    }
}

TEST_CASE("bucket-index hash spreads roughly uniformly") {
    std::mt19937_64 rng(99);
    constexpr int kSamples = 100000;
    constexpr int kBuckets = 256;
    std::array<int, kBuckets> hist{};
    for (int i = 0; i < kSamples; ++i) {
        Bytes in = random_bytes(rng, 16);
        hist[hash_h1(as_span(in)) % kBuckets]++;
    }
    // Expected 390.6 per cell; 5 sigma is about 98.
    for (int c : hist) {
        CHECK(c > 290);
        CHECK(c < 490);
    }
}

TEST_CASE("field codec round-trips and rejects out-of-range values") {
    FieldCodec codec;
    Bytes buf;
    codec.put_id(buf, 0xdeadbeefcafef00dULL);
    codec.put_weight(buf, 0xffffffffu);
    codec.put_counter(buf, 1);
    CHECK(buf.size() == 16);

    ByteReader r(as_span(buf));
    CHECK(codec.get_id(r) == 0xdeadbeefcafef00dULL);
    CHECK(codec.get_weight(r) == 0xffffffffu);
    CHECK(codec.get_counter(r) == 1);
    r.expect_end();

    Bytes over;
    CHECK_THROWS_AS(codec.put_weight(over, 0x100000000ULL), std::out_of_range);
    CHECK_THROWS_AS(codec.put_counter(over, 0x100000000ULL), std::out_of_range);
    CHECK(FieldCodec::fits(0xffffffffu, 4));
    CHECK_FALSE(FieldCodec::fits(0x100000000ULL, 4));
    CHECK(FieldCodec::fits(~0ULL, 8));

    // Truncated reads fail loudly.
    Bytes shorty;
    codec.put_weight(shorty, 3);
    ByteReader r2(as_span(shorty));
    CHECK_THROWS_AS(codec.get_id(r2), DecodeError);
}
