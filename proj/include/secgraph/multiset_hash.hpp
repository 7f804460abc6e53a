#pragma once

#include <array>
#include <cstdint>

#include "secgraph/bytes.hpp"

namespace secgraph {

// Incremental multiset hash: sum of per-element digests in Z_2^256. Order
// independent, and remove() exactly undoes add(), so the hash of a list
// matches the hash of any insert/delete history with the same net content.
class MultisetHash {
public:
    MultisetHash() = default;

    void add(ByteSpan element);
    void remove(ByteSpan element);
    void combine(const MultisetHash& other);

    bool operator==(const MultisetHash& other) const { return limbs_ == other.limbs_; }
    bool operator!=(const MultisetHash& other) const { return !(*this == other); }
    bool is_zero() const;

    Digest32 to_bytes() const;
    static MultisetHash from_bytes(ByteSpan bytes);

    static Digest32 element_digest(ByteSpan element);

private:
    void add_digest(const Digest32& d, bool negate);
    std::array<uint64_t, 4> limbs_{};
};

}  // namespace secgraph
