#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "secgraph/accumulator.hpp"
#include "secgraph/bytes.hpp"
#include "secgraph/ldcf.hpp"
#include "secgraph/transport.hpp"
#include "secgraph/wire.hpp"

namespace secgraph {

// Who mutates sub-filters. SecGraph: the store runs LDCF insert/delete/split
// itself and notifies the trusted side of splits in the ack. VSecGraph and
// VSecGraph-A: filters are opaque blobs the trusted side replaces wholesale.
enum class StoreMode { kServerFilters, kBlobFilters };

struct AccumulatorPublic {
    mpz_class n;
    mpz_class g;
};

// The untrusted key-value backend: TSet (stag -> id_e), ITSet (ind ->
// stag_e), XSet (sub-filters), and in VSecGraph-A the keyword digest store
// plus per-group witness products. Deterministic function of its request
// log; updates exclude loads, loads run concurrently.
class Server : public Endpoint {
public:
    Server(StoreMode mode, const FilterParams& params,
           std::optional<AccumulatorPublic> acc = std::nullopt);

    Bytes handle(const Bytes& request_frame) override;

    // Test-only introspection.
    size_t tset_size() const;
    size_t itset_size() const;
    size_t filter_count() const;
    std::vector<std::string> filter_labels() const;
    uint64_t split_count() const;  // kServerFilters only
    mpz_class group_product_value(uint32_t group) const;
    size_t digest_count() const;
    Digest32 state_digest() const;

private:
    Bytes dispatch(MsgKind kind, ByteSpan payload);
    Bytes do_update_insert(const UpdateInsertMsg& m);
    Bytes do_update_delete(const UpdateDeleteMsg& m);
    Bytes do_load_list(const LoadListMsg& m) const;
    Bytes do_load_filter(const LoadFilterMsg& m) const;
    Bytes do_replace_filter(const ReplaceFilterMsg& m);
    Bytes do_replace_children(const ReplaceChildrenMsg& m);
    Bytes do_group_digest_update(const GroupDigestUpdateMsg& m);

    StoreMode mode_;
    FilterParams params_;
    std::unordered_map<std::string, Bytes> tset_;
    std::unordered_map<std::string, Bytes> itset_;
    std::optional<LdcfContainer> container_;          // kServerFilters
    std::map<std::string, Bytes> filters_;            // kBlobFilters
    std::unordered_map<std::string, std::pair<Digest32, uint32_t>> digests_;
    std::map<uint32_t, WitnessProduct> products_;
    std::optional<AccumulatorPublic> acc_;
    mutable std::shared_mutex mu_;
};

}  // namespace secgraph
