#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"
#include "secgraph/bytes.hpp"
#include "secgraph/multiset_hash.hpp"

using namespace secgraph;

namespace {

Bytes elem(uint64_t i) {
    Bytes b;
    put_u64(b, i);
    return b;
}

}  // namespace

TEST_CASE("hash is order independent") {
    std::vector<uint64_t> ids(1000);
    for (size_t i = 0; i < ids.size(); ++i) ids[i] = i * 97 + 13;

    MultisetHash forward;
    for (uint64_t id : ids) forward.add(as_span(elem(id)));

    std::mt19937_64 rng(3);
    std::shuffle(ids.begin(), ids.end(), rng);
    MultisetHash shuffled;
    for (uint64_t id : ids) shuffled.add(as_span(elem(id)));

    CHECK(forward == shuffled);
}

TEST_CASE("remove exactly undoes add") {
    MultisetHash h;
    h.add(as_span(elem(1)));
    h.add(as_span(elem(2)));
    h.add(as_span(elem(3)));
    h.remove(as_span(elem(2)));

    MultisetHash expect;
    expect.add(as_span(elem(1)));
    expect.add(as_span(elem(3)));
    CHECK(h == expect);

    h.remove(as_span(elem(1)));
    h.remove(as_span(elem(3)));
    CHECK(h.is_zero());
    CHECK(h == MultisetHash{});
}

TEST_CASE("interleaved history matches the net content") {
    std::mt19937_64 rng(9);
    MultisetHash live;
    std::vector<uint64_t> alive;
    for (int step = 0; step < 5000; ++step) {
        if (alive.empty() || rng() % 3 != 0) {
            uint64_t id = rng();
            alive.push_back(id);
            live.add(as_span(elem(id)));
        } else {
            size_t k = rng() % alive.size();
            live.remove(as_span(elem(alive[k])));
            alive.erase(alive.begin() + static_cast<long>(k));
        }
    }
    MultisetHash net;
    for (uint64_t id : alive) net.add(as_span(elem(id)));
    CHECK(live == net);
}

TEST_CASE("combine equals element-wise accumulation") {
    MultisetHash a, b, both;
    for (uint64_t i = 0; i < 50; ++i) {
        a.add(as_span(elem(i)));
        both.add(as_span(elem(i)));
    }
    for (uint64_t i = 50; i < 90; ++i) {
        b.add(as_span(elem(i)));
        both.add(as_span(elem(i)));
    }
    a.combine(b);
    CHECK(a == both);
}

TEST_CASE("multiplicity matters") {
    MultisetHash once, twice;
    once.add(as_span(elem(7)));
    twice.add(as_span(elem(7)));
    twice.add(as_span(elem(7)));
    CHECK(once != twice);

    MultisetHash ab, ac;
    ab.add(as_span(elem(1)));
    ab.add(as_span(elem(2)));
    ac.add(as_span(elem(1)));
    ac.add(as_span(elem(3)));
    CHECK(ab != ac);
}

TEST_CASE("byte round-trip preserves the state") {
    MultisetHash h;
    for (uint64_t i = 0; i < 20; ++i) h.add(as_span(elem(i * i)));
    Digest32 bytes = h.to_bytes();
    MultisetHash back = MultisetHash::from_bytes(ByteSpan(bytes.data(), bytes.size()));
    CHECK(back == h);
    back.remove(as_span(elem(0)));
    CHECK(back != h);

    Bytes shorty(31, 0);
    CHECK_THROWS_AS(MultisetHash::from_bytes(as_span(shorty)), DecodeError);
}
