#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "secgraph/bytes.hpp"

namespace secgraph {

// 32-byte PRF tags and digests: stags, inds, keyword digests.
using Token = Digest32;

enum class MsgKind : uint8_t {
    // requests
    kUpdateInsert = 0x01,
    kUpdateDelete = 0x02,
    kLoadList = 0x03,
    kLoadFilter = 0x04,
    kLoadOne = 0x05,
    kLoadPos = 0x06,
    kReplaceFilter = 0x07,
    kReplaceChildren = 0x08,
    kGroupDigestUpdate = 0x09,
    // responses
    kAck = 0x81,
    kListResult = 0x82,
    kFilterResult = 0x83,
    kOneResult = 0x84,
    kNotFound = 0x85,
    kError = 0x86,
};

bool is_request(MsgKind kind);
bool is_known_kind(uint8_t kind);

// Insert per Alg. 2 line shape: (stag, id_e, ind, stag_e, mu, delta, op);
// op is carried by the message kind. mu/delta drive the store-side filter
// insert in SecGraph mode and are ignored when filters live in blob storage.
struct UpdateInsertMsg {
    static constexpr MsgKind kKind = MsgKind::kUpdateInsert;
    Token stag{};
    Bytes id_e;
    Token ind{};
    Bytes stag_e;
    uint32_t mu = 0;
    uint16_t delta = 0;

    Bytes encode() const;
    static UpdateInsertMsg decode(ByteSpan payload);
};

// Delete with relocate-last semantics. The tail tset entry is removed after
// relocation so tset size always equals the live counter sum.
struct UpdateDeleteMsg {
    static constexpr MsgKind kKind = MsgKind::kUpdateDelete;
    Token stag{};         // slot i, overwritten with the relocated record
    Bytes id_e;           // re-encrypted relocated record
    Token stag_tail{};    // slot cnt, erased after relocation
    Token ind_erase{};    // deleted pair's inverse-map key
    Token ind_rewrite{};  // relocated pair's inverse-map key, now pointing at i
    Bytes stag_e;         // re-encrypted position record for the relocated pair
    uint32_t mu = 0;
    uint16_t delta = 0;

    Bytes encode() const;
    static UpdateDeleteMsg decode(ByteSpan payload);
};

// SL batch load; digest_query additionally requests (h_w, witness) for the
// keyword digest, used by VSecGraph-A when the digest is not cached.
struct LoadListMsg {
    static constexpr MsgKind kKind = MsgKind::kLoadList;
    std::vector<Token> stags;
    std::optional<Token> digest_query;

    Bytes encode() const;
    static LoadListMsg decode(ByteSpan payload);
};

struct LoadFilterMsg {
    static constexpr MsgKind kKind = MsgKind::kLoadFilter;
    std::string label;

    Bytes encode() const;
    static LoadFilterMsg decode(ByteSpan payload);
};

struct LoadOneMsg {
    static constexpr MsgKind kKind = MsgKind::kLoadOne;
    Token stag{};

    Bytes encode() const;
    static LoadOneMsg decode(ByteSpan payload);
};

struct LoadPosMsg {
    static constexpr MsgKind kKind = MsgKind::kLoadPos;
    Token ind{};

    Bytes encode() const;
    static LoadPosMsg decode(ByteSpan payload);
};

struct ReplaceFilterMsg {
    static constexpr MsgKind kKind = MsgKind::kReplaceFilter;
    std::string label;
    Bytes bytes;

    Bytes encode() const;
    static ReplaceFilterMsg decode(ByteSpan payload);
};

struct ReplaceChildrenMsg {
    static constexpr MsgKind kKind = MsgKind::kReplaceChildren;
    std::string parent;
    Bytes left;
    Bytes right;

    Bytes encode() const;
    static ReplaceChildrenMsg decode(ByteSpan payload);
};

// Keyword digest and group product maintenance (VSecGraph-A). old_prime
// divides the group product; fresh stores the new digest and multiplies its
// prime in. A message without fresh erases the digest entirely.
struct GroupDigestUpdateMsg {
    static constexpr MsgKind kKind = MsgKind::kGroupDigestUpdate;
    uint32_t group = 0;
    Token h4w{};
    std::optional<Bytes> old_prime;
    std::optional<std::pair<Digest32, Bytes>> fresh;  // (h_w, new_prime)

    Bytes encode() const;
    static GroupDigestUpdateMsg decode(ByteSpan payload);
};

// splits reports parent labels split by a SecGraph-mode store-side insert,
// in order, so the trusted side can mirror its IndexTree.
struct AckMsg {
    static constexpr MsgKind kKind = MsgKind::kAck;
    std::vector<std::string> splits;

    Bytes encode() const;
    static AckMsg decode(ByteSpan payload);
};

struct ListResultMsg {
    static constexpr MsgKind kKind = MsgKind::kListResult;
    std::vector<Bytes> entries;
    std::optional<std::pair<Digest32, Bytes>> digest;  // (h_w, witness)

    Bytes encode() const;
    static ListResultMsg decode(ByteSpan payload);
};

struct FilterResultMsg {
    static constexpr MsgKind kKind = MsgKind::kFilterResult;
    Bytes bytes;

    Bytes encode() const;
    static FilterResultMsg decode(ByteSpan payload);
};

struct OneResultMsg {
    static constexpr MsgKind kKind = MsgKind::kOneResult;
    Bytes bytes;

    Bytes encode() const;
    static OneResultMsg decode(ByteSpan payload);
};

struct NotFoundMsg {
    static constexpr MsgKind kKind = MsgKind::kNotFound;

    Bytes encode() const { return {}; }
    static NotFoundMsg decode(ByteSpan payload);
};

struct ErrorMsg {
    static constexpr MsgKind kKind = MsgKind::kError;
    std::string message;

    Bytes encode() const;
    static ErrorMsg decode(ByteSpan payload);
};

// Frame layout: {u32 length}{u8 kind}{payload}, length = 1 + payload size.
struct Frame {
    MsgKind kind;
    Bytes payload;
};

Bytes encode_frame(MsgKind kind, ByteSpan payload);
Frame decode_frame(ByteSpan frame);

template <typename M>
Bytes pack(const M& msg) {
    return encode_frame(M::kKind, as_span(msg.encode()));
}

template <typename M>
M unpack(const Bytes& frame) {
    Frame f = decode_frame(as_span(frame));
    if (f.kind != M::kKind) throw DecodeError("unexpected message kind");
    return M::decode(as_span(f.payload));
}

}  // namespace secgraph
