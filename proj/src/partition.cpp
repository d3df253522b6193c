#include "sdm/partition.hpp"

#include <algorithm>

namespace sdm {

namespace {

struct HeldEdge {
    GlobalId id;
    GlobalId n1;
    GlobalId n2;
};

// FNV-1a over the owner ranks, used to cheaply compare pv replicas.
std::uint64_t pv_fingerprint(const PartitioningVector& pv) {
    std::uint64_t h = 1469598103934665603ull;
    for (int v : pv) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

Bytes EdgeBlock::encode() const {
    ByteWriter w;
    w.i64(lo);
    w.u64(n1.size());
    for (auto v : n1) w.i64(v);
    for (auto v : n2) w.i64(v);
    return w.take();
}

EdgeBlock EdgeBlock::decode(ByteSpan b) {
    ByteReader r(b);
    EdgeBlock blk;
    blk.lo = r.i64();
    std::uint64_t n = r.u64();
    blk.n1.reserve(n);
    blk.n2.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) blk.n1.push_back(r.i64());
    for (std::uint64_t i = 0; i < n; ++i) blk.n2.push_back(r.i64());
    return blk;
}

std::pair<std::int64_t, std::int64_t> block_range(std::int64_t total, int rank, int nprocs) {
    if (nprocs < 1) throw ValidationError("nprocs must be >= 1");
    if (rank < 0 || rank >= nprocs) throw ValidationError("rank out of range");
    if (total < 0) throw ValidationError("total must be >= 0");
    std::int64_t base = total / nprocs;
    std::int64_t rem = total % nprocs;
    std::int64_t lo = rank * base + std::min<std::int64_t>(rank, rem);
    std::int64_t hi = lo + base + (rank < rem ? 1 : 0);
    return {lo, hi};
}

std::vector<std::int64_t> build_local_lookup(const MapArray& map, std::int64_t global_count) {
    std::vector<std::int64_t> lookup(static_cast<std::size_t>(global_count), -1);
    for (std::size_t i = 0; i < map.size(); ++i) {
        GlobalId g = map[i];
        if (g < 0 || g >= global_count)
            throw BoundsError("map array entry " + std::to_string(g) +
                              " outside [0, " + std::to_string(global_count) + ")");
        if (lookup[static_cast<std::size_t>(g)] >= 0)
            throw ValidationError("map array repeats global id " + std::to_string(g));
        lookup[static_cast<std::size_t>(g)] = static_cast<std::int64_t>(i);
    }
    return lookup;
}

LocalIndexSet distribute_edges(RankContext& ctx, const EdgeBlock& my_block,
                               const PartitioningVector& pv, DistributeStats* stats) {
    const int rank = ctx.rank();
    const int nprocs = ctx.nprocs();
    const auto total_nodes = static_cast<std::int64_t>(pv.size());

    // Local validation feeds the collective pre-round: every edge sits in
    // exactly one initial block, so checking the block here covers the whole
    // mesh before anything circulates.
    std::string local_fault;
    if (my_block.n1.size() != my_block.n2.size())
        local_fault = "edge endpoint arrays differ in length";
    for (std::size_t i = 0; local_fault.empty() && i < pv.size(); ++i)
        if (pv[i] < 0 || pv[i] >= nprocs)
            local_fault = "pv assigns node " + std::to_string(i) + " to rank " +
                          std::to_string(pv[i]);
    for (std::int64_t i = 0; local_fault.empty() && i < my_block.count(); ++i) {
        if (my_block.n1[i] < 0 || my_block.n1[i] >= total_nodes ||
            my_block.n2[i] < 0 || my_block.n2[i] >= total_nodes)
            local_fault = "edge " + std::to_string(my_block.lo + i) +
                          " references a node outside [0, " +
                          std::to_string(total_nodes) + ")";
    }

    // Pre-round: rank 0 sees every rank's (pv fingerprint, block slice) and
    // admits the job only if the blocks tile the edge ids evenly and the pv
    // replicas agree.
    ByteWriter pw;
    pw.u64(pv.size());
    pw.u64(pv_fingerprint(pv));
    pw.i64(my_block.lo);
    pw.i64(my_block.count());
    pw.str(local_fault);
    auto gathered = ctx.gather(0, pw.take());
    ctx.root_eval(0, [&]() -> Bytes {
        std::vector<std::pair<std::int64_t, std::int64_t>> slices;
        std::uint64_t nodes0 = 0, fp0 = 0;
        std::int64_t total = 0;
        for (int r = 0; r < nprocs; ++r) {
            ByteReader br(gathered[static_cast<std::size_t>(r)]);
            std::uint64_t nodes = br.u64();
            std::uint64_t fp = br.u64();
            std::int64_t lo = br.i64();
            std::int64_t cnt = br.i64();
            std::string fault = br.str();
            if (!fault.empty())
                throw CollectiveError("rank " + std::to_string(r) + ": " + fault);
            if (r == 0) {
                nodes0 = nodes;
                fp0 = fp;
            } else if (nodes != nodes0 || fp != fp0) {
                throw CollectiveError("collective mismatch: rank " + std::to_string(r) +
                                      " holds a different partitioning vector");
            }
            if (cnt < 0) throw CollectiveError("negative block length from rank " +
                                               std::to_string(r));
            slices.emplace_back(lo, cnt);
            total += cnt;
        }
        for (int r = 0; r < nprocs; ++r) {
            auto [lo, hi] = block_range(total, r, nprocs);
            if (slices[static_cast<std::size_t>(r)].first != lo ||
                slices[static_cast<std::size_t>(r)].second != hi - lo)
                throw CollectiveError("collective mismatch: rank " + std::to_string(r) +
                                      " presented edge block [" +
                                      std::to_string(slices[static_cast<std::size_t>(r)].first) +
                                      ", +" +
                                      std::to_string(slices[static_cast<std::size_t>(r)].second) +
                                      ") but the even split expects [" + std::to_string(lo) +
                                      ", +" + std::to_string(hi - lo) + ")");
        }
        ByteWriter out;
        out.i64(total);
        return out.take();
    });

    DistributeStats st;
    const std::size_t initial_cap =
        static_cast<std::size_t>(std::max<std::int64_t>(1, 2 * (my_block.count())));
    GrowableBuffer<HeldEdge> held(initial_cap);

    auto scan = [&](const EdgeBlock& b) {
        ++st.blocks_scanned;
        for (std::int64_t i = 0; i < b.count(); ++i) {
            ++st.edges_scanned;
            GlobalId a = b.n1[static_cast<std::size_t>(i)];
            GlobalId c = b.n2[static_cast<std::size_t>(i)];
            if (pv[static_cast<std::size_t>(a)] == rank ||
                pv[static_cast<std::size_t>(c)] == rank) {
                held.append({b.lo + i, a, c});
                ++st.edge_appends;
            }
        }
    };

    EdgeBlock cur = my_block;
    scan(cur);
    for (int round = 1; round < nprocs; ++round) {
        Bytes received = ctx.ring_shift(cur.encode());
        ++st.ring_shifts;
        cur = EdgeBlock::decode(received);
        scan(cur);
    }
    // The final shift that would return each block to its importer carries no
    // information anybody still reads, so it is skipped.

    st.buffer_growths = held.growth_count();

    LocalIndexSet out;
    out.rank = rank;
    for (std::int64_t v = 0; v < total_nodes; ++v)
        if (pv[static_cast<std::size_t>(v)] == rank) out.node_map.push_back(v);
    out.owned_node_count = static_cast<std::int64_t>(out.node_map.size());

    std::vector<std::int64_t> local_of(static_cast<std::size_t>(total_nodes), -1);
    for (std::size_t i = 0; i < out.node_map.size(); ++i)
        local_of[static_cast<std::size_t>(out.node_map[i])] = static_cast<std::int64_t>(i);

    const std::size_t held_n = held.size();
    out.held_edges.reserve(held_n);
    out.edge1_local.reserve(held_n);
    out.edge2_local.reserve(held_n);
    for (std::size_t i = 0; i < held_n; ++i) {
        const HeldEdge& e = held[i];
        out.held_edges.push_back(e.id);
        for (GlobalId ep : {e.n1, e.n2}) {
            auto& slot = local_of[static_cast<std::size_t>(ep)];
            if (slot < 0) {
                slot = static_cast<std::int64_t>(out.node_map.size());
                out.node_map.push_back(ep);
            }
        }
        out.edge1_local.push_back(local_of[static_cast<std::size_t>(e.n1)]);
        out.edge2_local.push_back(local_of[static_cast<std::size_t>(e.n2)]);
    }

    if (stats) *stats = st;
    return out;
}

} // namespace sdm
