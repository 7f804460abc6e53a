#include "secgraph/adversary.hpp"

#include <algorithm>

#include "secgraph/wire.hpp"

namespace secgraph {

const char* tamper_mode_name(TamperMode mode) {
    switch (mode) {
        case TamperMode::kHonest: return "honest";
        case TamperMode::kTamperTset: return "tamper_tset";
        case TamperMode::kTamperXset: return "tamper_xset";
        case TamperMode::kDropEntry: return "drop_entry";
        case TamperMode::kStaleReplay: return "stale_replay";
    }
    return "unknown";
}

TamperingEndpoint::TamperingEndpoint(Endpoint& inner, TamperMode mode, uint64_t seed)
    : inner_(&inner), mode_(mode), rng_(seed) {}

Bytes TamperingEndpoint::handle(const Bytes& request_frame) {
    Bytes honest = inner_->handle(request_frame);
    if (mode_ == TamperMode::kHonest) return honest;

    if (mode_ == TamperMode::kStaleReplay) {
        std::string key(request_frame.begin(), request_frame.end());
        auto it = replay_cache_.find(key);
        Bytes previous;
        bool have_previous = false;
        if (it != replay_cache_.end()) {
            previous = it->second;
            have_previous = true;
            it->second = honest;
        } else {
            replay_cache_.emplace(std::move(key), honest);
        }
        if (armed_ && !deviated_ && have_previous && previous != honest) {
            deviated_ = true;
            ++deviations_;
            return previous;
        }
        return honest;
    }

    if (!armed_ || deviated_) return honest;
    return mutate(request_frame, std::move(honest));
}

void TamperingEndpoint::flip_random_bit(Bytes& bytes) {
    size_t bit = rng_() % (bytes.size() * 8);
    bytes[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
}

Bytes TamperingEndpoint::mutate(const Bytes& request_frame, Bytes honest_response) {
    Frame req;
    Frame resp;
    try {
        req = decode_frame(as_span(request_frame));
        resp = decode_frame(as_span(honest_response));
    } catch (const DecodeError&) {
        return honest_response;
    }

    switch (mode_) {
        case TamperMode::kTamperTset: {
            if (req.kind == MsgKind::kLoadList && resp.kind == MsgKind::kListResult) {
                auto m = ListResultMsg::decode(as_span(resp.payload));
                size_t targets = m.entries.size() + (m.digest ? 2 : 0);
                if (targets == 0) break;
                size_t pick = rng_() % targets;
                if (pick < m.entries.size()) {
                    if (m.entries[pick].empty()) break;
                    flip_random_bit(m.entries[pick]);
                } else if (pick == m.entries.size()) {
                    Bytes hw(m.digest->first.begin(), m.digest->first.end());
                    flip_random_bit(hw);
                    std::copy(hw.begin(), hw.end(), m.digest->first.begin());
                } else {
                    if (m.digest->second.empty()) break;
                    flip_random_bit(m.digest->second);
                }
                deviated_ = true;
                ++deviations_;
                return pack(m);
            }
            if ((req.kind == MsgKind::kLoadOne || req.kind == MsgKind::kLoadPos) &&
                resp.kind == MsgKind::kOneResult) {
                auto m = OneResultMsg::decode(as_span(resp.payload));
                if (m.bytes.empty()) break;
                flip_random_bit(m.bytes);
                deviated_ = true;
                ++deviations_;
                return pack(m);
            }
            break;
        }
        case TamperMode::kTamperXset: {
            if (req.kind == MsgKind::kLoadFilter && resp.kind == MsgKind::kFilterResult) {
                auto m = FilterResultMsg::decode(as_span(resp.payload));
                if (m.bytes.empty()) break;
                flip_random_bit(m.bytes);
                deviated_ = true;
                ++deviations_;
                return pack(m);
            }
            break;
        }
        case TamperMode::kDropEntry: {
            if (req.kind == MsgKind::kLoadList && resp.kind == MsgKind::kListResult) {
                auto m = ListResultMsg::decode(as_span(resp.payload));
                if (m.entries.empty()) break;
                m.entries.erase(m.entries.begin() +
                                static_cast<long>(rng_() % m.entries.size()));
                deviated_ = true;
                ++deviations_;
                return pack(m);
            }
            break;
        }
        default:
            break;
    }
    return honest_response;
}

}  // namespace secgraph
