#ifndef SDM_PARTITION_HPP
#define SDM_PARTITION_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "sdm/bytes.hpp"
#include "sdm/errors.hpp"
#include "sdm/runtime.hpp"
#include "sdm/types.hpp"

namespace sdm {

// Map arrays translate local positions to global identifiers.
using MapArray = std::vector<GlobalId>;

// owner rank per global node, replicated on every rank
using PartitioningVector = std::vector<int>;

struct EdgeList {
    std::vector<GlobalId> edge1;
    std::vector<GlobalId> edge2;

    std::int64_t count() const { return static_cast<std::int64_t>(edge1.size()); }
};

// Contiguous slice of the global edge arrays; edge i of the block has global
// id lo + i.  This is the payload circulated around the ring.
struct EdgeBlock {
    GlobalId lo = 0;
    std::vector<GlobalId> n1;
    std::vector<GlobalId> n2;

    std::int64_t count() const { return static_cast<std::int64_t>(n1.size()); }

    Bytes encode() const;
    static EdgeBlock decode(ByteSpan b);
};

// Per-rank outcome of edge distribution.  held_edges and node_map are the map
// arrays driving all later I/O; edge endpoints are stored as positions into
// node_map.
struct LocalIndexSet {
    int rank = 0;
    MapArray held_edges;
    std::vector<std::int64_t> edge1_local;
    std::vector<std::int64_t> edge2_local;
    MapArray node_map;
    std::int64_t owned_node_count = 0;

    std::int64_t edge_count() const { return static_cast<std::int64_t>(held_edges.size()); }
    std::int64_t node_count() const { return static_cast<std::int64_t>(node_map.size()); }

    bool operator==(const LocalIndexSet&) const = default;
};

struct DistributeStats {
    std::int64_t blocks_scanned = 0;
    std::int64_t edges_scanned = 0;
    std::int64_t edge_appends = 0;
    std::int64_t buffer_growths = 0;
    std::int64_t ring_shifts = 0;
};

// Append-only array that doubles its capacity when full, so a block can be
// scanned in a single pass without a preliminary counting pass.
template <typename T>
class GrowableBuffer {
public:
    explicit GrowableBuffer(std::size_t initial_capacity) {
        cap_ = initial_capacity < 1 ? 1 : initial_capacity;
        data_.reserve(cap_);
    }

    void append(const T& v) {
        if (data_.size() == cap_) {
            cap_ *= 2;
            data_.reserve(cap_);
            ++growths_;
        }
        data_.push_back(v);
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return cap_; }
    std::int64_t growth_count() const { return growths_; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    std::vector<T> take() { return std::move(data_); }

private:
    std::vector<T> data_;
    std::size_t cap_ = 1;
    std::int64_t growths_ = 0;
};

// Front-loaded even split of [0, total) into nprocs blocks: the first
// total % nprocs blocks get one extra element.
std::pair<std::int64_t, std::int64_t> block_range(std::int64_t total, int rank, int nprocs);

// global id -> local position, -1 where absent
std::vector<std::int64_t> build_local_lookup(const MapArray& map, std::int64_t global_count);

// Circulates edge blocks around the ring; each rank keeps the edges whose
// endpoints it owns per pv and builds its map arrays.  Every rank must pass a
// block matching its block_range slice and an identical pv, or the call fails
// collectively on all ranks.
LocalIndexSet distribute_edges(RankContext& ctx, const EdgeBlock& my_block,
                               const PartitioningVector& pv,
                               DistributeStats* stats = nullptr);

} // namespace sdm

#endif
