#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>

#include "secgraph/bytes.hpp"
#include "secgraph/transport.hpp"

namespace secgraph {

// honest: byte-exact pass-through.
// tamper_tset: flips one bit in one ciphertext (or digest/witness) of a
//   list/one load response.
// tamper_xset: flips one bit in a loaded sub-filter's bytes.
// drop_entry: removes one entry from a list response.
// stale_replay: answers a repeated request with the previous honest response
//   when the honest answer has since changed.
enum class TamperMode { kHonest, kTamperTset, kTamperXset, kDropEntry, kStaleReplay };

const char* tamper_mode_name(TamperMode mode);

// Wraps a store endpoint with seeded single-response deviations. While
// armed, at most one response deviates before the wrapper falls back to
// pass-through; arm() starts a fresh round.
class TamperingEndpoint : public Endpoint {
public:
    TamperingEndpoint(Endpoint& inner, TamperMode mode, uint64_t seed);

    Bytes handle(const Bytes& request_frame) override;

    void arm() {
        armed_ = true;
        deviated_ = false;
    }
    void disarm() { armed_ = false; }
    bool deviated() const { return deviated_; }
    uint64_t deviation_count() const { return deviations_; }

private:
    Bytes mutate(const Bytes& request_frame, Bytes honest_response);
    void flip_random_bit(Bytes& bytes);

    Endpoint* inner_;
    TamperMode mode_;
    std::mt19937_64 rng_;
    bool armed_ = false;
    bool deviated_ = false;
    uint64_t deviations_ = 0;
    std::unordered_map<std::string, Bytes> replay_cache_;
};

}  // namespace secgraph
