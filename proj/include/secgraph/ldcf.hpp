#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "secgraph/bytes.hpp"

namespace secgraph {

struct FilterParams {
    uint32_t bucket_count = 2048;  // power of two
    uint8_t slot_count = 4;
    uint8_t fp_bits = 16;          // full fingerprint width, fixed
    uint32_t max_kicks = 500;

    size_t capacity() const { return static_cast<size_t>(bucket_count) * slot_count; }
};

// Alternate-bucket offset for a full fingerprint. Level-independent so splits
// keep every element's bucket index valid in the child filters.
uint32_t partner_offset(uint16_t full_fp, uint32_t bucket_count);

// One cuckoo filter in the logarithmic chain. A filter at level L is labeled
// by the top L fingerprint bits and stores the remaining 16-L bits per slot
// (0 = empty; a true residual of 0 is stored as 1, conflating it with 1).
class SubFilter {
public:
    SubFilter(const FilterParams& params, std::string label);

    struct Homeless {
        uint16_t fp;      // full fingerprint still in hand after max_kicks
        uint32_t bucket;  // bucket it was last displaced from
    };

    // nullopt on success. A Homeless result means the filter must be split;
    // all previously stored elements remain, only Homeless.fp is outside.
    std::optional<Homeless> insert(uint16_t full_fp, uint64_t mu);
    bool contains(uint16_t full_fp, uint64_t mu) const;
    bool remove(uint16_t full_fp, uint64_t mu);

    // Children at level+1 with labels label+'0' and label+'1'; every stored
    // residual moves to exactly one child, same bucket and slot index.
    std::pair<SubFilter, SubFilter> split() const;

    Bytes serialize() const;
    static SubFilter deserialize(ByteSpan bytes, const FilterParams& params,
                                 const std::string& label);

    const std::string& label() const { return label_; }
    uint8_t level() const { return static_cast<uint8_t>(label_.size()); }
    unsigned residual_bits() const { return 16u - level(); }
    size_t size() const { return occupied_; }
    const FilterParams& params() const { return params_; }
    uint16_t slot(uint32_t bucket, uint8_t s) const {
        return slots_[static_cast<size_t>(bucket) * params_.slot_count + s];
    }

private:
    uint16_t stored_residual(uint16_t full_fp) const;
    uint32_t bucket_of(uint64_t mu) const;
    bool place_in_bucket(uint32_t bucket, uint16_t residual);
    // A stored 1 may be a true residual of 0 or 1 (0 marks an empty slot), so
    // the full fingerprint, and with it the partner bucket, is unknowable.
    bool slot_ambiguous(uint16_t residual) const { return residual == 1; }

    FilterParams params_;
    std::string label_;
    uint32_t label_value_ = 0;
    std::vector<uint16_t> slots_;
    size_t occupied_ = 0;
    uint32_t kick_rotation_ = 0;  // deterministic victim choice
};

// Binary prefix tree over sub-filter labels. Leaves are the live filters;
// routing follows fingerprint bits most-significant first.
class IndexTree {
public:
    IndexTree() { leaves_.insert(""); }

    const std::string& route(uint16_t fp) const;
    bool is_leaf(const std::string& label) const { return leaves_.count(label) != 0; }
    void split_leaf(const std::string& label);
    size_t leaf_count() const { return leaves_.size(); }
    std::vector<std::string> leaf_labels() const;

    void set_digest(const std::string& label, const Digest32& d) { digests_[label] = d; }
    const Digest32* digest(const std::string& label) const;
    void erase_digest(const std::string& label) { digests_.erase(label); }

private:
    std::unordered_set<std::string> leaves_;
    std::unordered_map<std::string, Digest32> digests_;
};

// Tree plus filters, with automatic recursive splitting on overflow.
class LdcfContainer {
public:
    explicit LdcfContainer(const FilterParams& params);

    // Returns labels of filters that were split, in split order (usually empty).
    std::vector<std::string> insert(uint16_t fp, uint64_t mu);
    bool contains(uint16_t fp, uint64_t mu) const;
    bool remove(uint16_t fp, uint64_t mu);

    const IndexTree& tree() const { return tree_; }
    const SubFilter& at(const std::string& label) const { return filters_.at(label); }
    SubFilter& at(const std::string& label) { return filters_.at(label); }
    bool has(const std::string& label) const { return filters_.count(label) != 0; }
    uint64_t split_count() const { return split_count_; }
    size_t element_count() const;
    const std::map<std::string, SubFilter>& filters() const { return filters_; }

    // Used by the trusted side when mirroring server-reported splits.
    void adopt(SubFilter filter);
    void drop(const std::string& label) { filters_.erase(label); }
    IndexTree& mutable_tree() { return tree_; }

private:
    FilterParams params_;
    IndexTree tree_;
    std::map<std::string, SubFilter> filters_;
    uint64_t split_count_ = 0;
};

}  // namespace secgraph
