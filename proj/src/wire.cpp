#include "secgraph/wire.hpp"

#include <algorithm>

namespace secgraph {
namespace {

void put_token(Bytes& out, const Token& t) { out.insert(out.end(), t.begin(), t.end()); }

void put_string(Bytes& out, const std::string& s) { put_lv(out, as_span(s)); }

std::string get_string(ByteReader& r) {
    Bytes b = r.lv();
    return std::string(b.begin(), b.end());
}

}  // namespace

bool is_known_kind(uint8_t kind) {
    return (kind >= 0x01 && kind <= 0x09) || (kind >= 0x81 && kind <= 0x86);
}

bool is_request(MsgKind kind) { return static_cast<uint8_t>(kind) < 0x80; }

Bytes UpdateInsertMsg::encode() const {
    Bytes out;
    put_token(out, stag);
    put_lv(out, as_span(id_e));
    put_token(out, ind);
    put_lv(out, as_span(stag_e));
    put_u32(out, mu);
    put_u16(out, delta);
    return out;
}

UpdateInsertMsg UpdateInsertMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    UpdateInsertMsg m;
    m.stag = r.digest32();
    m.id_e = r.lv();
    m.ind = r.digest32();
    m.stag_e = r.lv();
    m.mu = r.u32();
    m.delta = r.u16();
    r.expect_end();
    return m;
}

Bytes UpdateDeleteMsg::encode() const {
    Bytes out;
    put_token(out, stag);
    put_lv(out, as_span(id_e));
    put_token(out, stag_tail);
    put_token(out, ind_erase);
    put_token(out, ind_rewrite);
    put_lv(out, as_span(stag_e));
    put_u32(out, mu);
    put_u16(out, delta);
    return out;
}

UpdateDeleteMsg UpdateDeleteMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    UpdateDeleteMsg m;
    m.stag = r.digest32();
    m.id_e = r.lv();
    m.stag_tail = r.digest32();
    m.ind_erase = r.digest32();
    m.ind_rewrite = r.digest32();
    m.stag_e = r.lv();
    m.mu = r.u32();
    m.delta = r.u16();
    r.expect_end();
    return m;
}

Bytes LoadListMsg::encode() const {
    Bytes out;
    put_u32(out, static_cast<uint32_t>(stags.size()));
    for (const Token& t : stags) put_token(out, t);
    out.push_back(digest_query ? 1 : 0);
    if (digest_query) put_token(out, *digest_query);
    return out;
}

LoadListMsg LoadListMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    LoadListMsg m;
    uint32_t count = r.u32();
    // Cap the reservation by what the buffer can actually hold; the loop
    // below still throws on short input.
    m.stags.reserve(std::min<size_t>(count, r.remaining() / 32));
    for (uint32_t i = 0; i < count; ++i) m.stags.push_back(r.digest32());
    if (r.u8()) m.digest_query = r.digest32();
    r.expect_end();
    return m;
}

Bytes LoadFilterMsg::encode() const {
    Bytes out;
    put_string(out, label);
    return out;
}

LoadFilterMsg LoadFilterMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    LoadFilterMsg m;
    m.label = get_string(r);
    r.expect_end();
    return m;
}

Bytes LoadOneMsg::encode() const {
    Bytes out;
    put_token(out, stag);
    return out;
}

LoadOneMsg LoadOneMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    LoadOneMsg m;
    m.stag = r.digest32();
    r.expect_end();
    return m;
}

Bytes LoadPosMsg::encode() const {
    Bytes out;
    put_token(out, ind);
    return out;
}

LoadPosMsg LoadPosMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    LoadPosMsg m;
    m.ind = r.digest32();
    r.expect_end();
    return m;
}

Bytes ReplaceFilterMsg::encode() const {
    Bytes out;
    put_string(out, label);
    put_lv(out, as_span(bytes));
    return out;
}

ReplaceFilterMsg ReplaceFilterMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    ReplaceFilterMsg m;
    m.label = get_string(r);
    m.bytes = r.lv();
    r.expect_end();
    return m;
}

Bytes ReplaceChildrenMsg::encode() const {
    Bytes out;
    put_string(out, parent);
    put_lv(out, as_span(left));
    put_lv(out, as_span(right));
    return out;
}

ReplaceChildrenMsg ReplaceChildrenMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    ReplaceChildrenMsg m;
    m.parent = get_string(r);
    m.left = r.lv();
    m.right = r.lv();
    r.expect_end();
    return m;
}

Bytes GroupDigestUpdateMsg::encode() const {
    Bytes out;
    put_u32(out, group);
    put_token(out, h4w);
    out.push_back(old_prime ? 1 : 0);
    if (old_prime) put_lv(out, as_span(*old_prime));
    out.push_back(fresh ? 1 : 0);
    if (fresh) {
        put_token(out, fresh->first);
        put_lv(out, as_span(fresh->second));
    }
    return out;
}

GroupDigestUpdateMsg GroupDigestUpdateMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    GroupDigestUpdateMsg m;
    m.group = r.u32();
    m.h4w = r.digest32();
    if (r.u8()) m.old_prime = r.lv();
    if (r.u8()) {
        Digest32 hw = r.digest32();
        Bytes prime = r.lv();
        m.fresh = {hw, std::move(prime)};
    }
    r.expect_end();
    return m;
}

Bytes AckMsg::encode() const {
    Bytes out;
    put_u16(out, static_cast<uint16_t>(splits.size()));
    for (const auto& s : splits) put_string(out, s);
    return out;
}

AckMsg AckMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    AckMsg m;
    uint16_t count = r.u16();
    m.splits.reserve(std::min<size_t>(count, r.remaining() / 4));
    for (uint16_t i = 0; i < count; ++i) m.splits.push_back(get_string(r));
    r.expect_end();
    return m;
}

Bytes ListResultMsg::encode() const {
    Bytes out;
    put_u32(out, static_cast<uint32_t>(entries.size()));
    for (const Bytes& e : entries) put_lv(out, as_span(e));
    out.push_back(digest ? 1 : 0);
    if (digest) {
        put_token(out, digest->first);
        put_lv(out, as_span(digest->second));
    }
    return out;
}

ListResultMsg ListResultMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    ListResultMsg m;
    uint32_t count = r.u32();
    m.entries.reserve(std::min<size_t>(count, r.remaining() / 4));
    for (uint32_t i = 0; i < count; ++i) m.entries.push_back(r.lv());
    if (r.u8()) {
        Digest32 hw = r.digest32();
        Bytes witness = r.lv();
        m.digest = {hw, std::move(witness)};
    }
    r.expect_end();
    return m;
}

Bytes FilterResultMsg::encode() const {
    Bytes out;
    put_lv(out, as_span(bytes));
    return out;
}

FilterResultMsg FilterResultMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    FilterResultMsg m;
    m.bytes = r.lv();
    r.expect_end();
    return m;
}

Bytes OneResultMsg::encode() const {
    Bytes out;
    put_lv(out, as_span(bytes));
    return out;
}

OneResultMsg OneResultMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    OneResultMsg m;
    m.bytes = r.lv();
    r.expect_end();
    return m;
}

NotFoundMsg NotFoundMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    r.expect_end();
    return {};
}

Bytes ErrorMsg::encode() const {
    Bytes out;
    put_string(out, message);
    return out;
}

ErrorMsg ErrorMsg::decode(ByteSpan payload) {
    ByteReader r(payload);
    ErrorMsg m;
    m.message = get_string(r);
    r.expect_end();
    return m;
}

Bytes encode_frame(MsgKind kind, ByteSpan payload) {
    Bytes out;
    out.reserve(5 + payload.size());
    put_u32(out, static_cast<uint32_t>(1 + payload.size()));
    out.push_back(static_cast<uint8_t>(kind));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

Frame decode_frame(ByteSpan frame) {
    ByteReader r(frame);
    uint32_t len = r.u32();
    if (len == 0) throw DecodeError("empty frame");
    if (len != r.remaining()) throw DecodeError("frame length mismatch");
    uint8_t kind = r.u8();
    if (!is_known_kind(kind)) throw DecodeError("unknown message kind");
    Frame f;
    f.kind = static_cast<MsgKind>(kind);
    f.payload = r.bytes(r.remaining());
    return f;
}

}  // namespace secgraph
