#include "secgraph/multiset_hash.hpp"

#include "secgraph/crypto.hpp"

namespace secgraph {
namespace {

std::array<uint64_t, 4> digest_limbs(const Digest32& d) {
    std::array<uint64_t, 4> limbs{};
    for (size_t i = 0; i < 4; ++i) {
        uint64_t v = 0;
        for (size_t j = 0; j < 8; ++j) v |= static_cast<uint64_t>(d[i * 8 + j]) << (8 * j);
        limbs[i] = v;
    }
    return limbs;
}

}  // namespace

Digest32 MultisetHash::element_digest(ByteSpan element) {
    Bytes tagged;
    tagged.reserve(element.size() + 1);
    tagged.push_back(0x05);
    tagged.insert(tagged.end(), element.begin(), element.end());
    return sha256(as_span(tagged));
}

void MultisetHash::add_digest(const Digest32& d, bool negate) {
    std::array<uint64_t, 4> v = digest_limbs(d);
    if (negate) {
        // two's complement of the 256-bit value
        unsigned __int128 carry = 1;
        for (size_t i = 0; i < 4; ++i) {
            unsigned __int128 t = static_cast<unsigned __int128>(~v[i]) + carry;
            v[i] = static_cast<uint64_t>(t);
            carry = static_cast<uint64_t>(t >> 64);
        }
    }
    unsigned __int128 carry = 0;
    for (size_t i = 0; i < 4; ++i) {
        unsigned __int128 t = static_cast<unsigned __int128>(limbs_[i]) + v[i] + carry;
        limbs_[i] = static_cast<uint64_t>(t);
        carry = static_cast<uint64_t>(t >> 64);
    }
}

void MultisetHash::add(ByteSpan element) { add_digest(element_digest(element), false); }

void MultisetHash::remove(ByteSpan element) { add_digest(element_digest(element), true); }

void MultisetHash::combine(const MultisetHash& other) {
    unsigned __int128 carry = 0;
    for (size_t i = 0; i < 4; ++i) {
        unsigned __int128 t =
            static_cast<unsigned __int128>(limbs_[i]) + other.limbs_[i] + carry;
        limbs_[i] = static_cast<uint64_t>(t);
        carry = static_cast<uint64_t>(t >> 64);
    }
}

bool MultisetHash::is_zero() const {
    for (uint64_t l : limbs_)
        if (l != 0) return false;
    return true;
}

Digest32 MultisetHash::to_bytes() const {
    Digest32 out{};
    for (size_t i = 0; i < 4; ++i)
        for (size_t j = 0; j < 8; ++j)
            out[i * 8 + j] = static_cast<uint8_t>(limbs_[i] >> (8 * j));
    return out;
}

MultisetHash MultisetHash::from_bytes(ByteSpan bytes) {
    if (bytes.size() != 32) throw DecodeError("multiset hash must be 32 bytes");
    MultisetHash h;
    for (size_t i = 0; i < 4; ++i) {
        uint64_t v = 0;
        for (size_t j = 0; j < 8; ++j) v |= static_cast<uint64_t>(bytes[i * 8 + j]) << (8 * j);
        h.limbs_[i] = v;
    }
    return h;
}

}  // namespace secgraph
