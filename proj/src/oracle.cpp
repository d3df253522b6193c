#include "sdm/oracle.hpp"

#include <stdexcept>

namespace sdm {

namespace {

// Independent copy of the even block split, written as plain arithmetic.
void oracle_block(std::int64_t total, int rank, int nprocs, std::int64_t& lo,
                  std::int64_t& hi) {
    std::int64_t small = total / nprocs;
    std::int64_t extra = total % nprocs;
    lo = 0;
    for (int r = 0; r < rank; ++r) lo += small + (r < extra ? 1 : 0);
    hi = lo + small + (rank < extra ? 1 : 0);
}

} // namespace

std::vector<LocalIndexSet> oracle_distribute(const EdgeList& edges,
                                             const PartitioningVector& pv, int nprocs) {
    if (nprocs < 1) throw std::invalid_argument("nprocs must be positive");
    if (edges.edge1.size() != edges.edge2.size())
        throw std::invalid_argument("ragged edge list");
    const auto total_nodes = static_cast<std::int64_t>(pv.size());
    const std::int64_t total_edges = edges.count();

    std::vector<LocalIndexSet> out;
    out.reserve(static_cast<std::size_t>(nprocs));

    for (int p = 0; p < nprocs; ++p) {
        LocalIndexSet ix;
        ix.rank = p;

        // Blocks arrive at rank p in the order p, p-1, p-2, ... around the
        // ring; an edge is kept when p owns either endpoint.
        for (int k = 0; k < nprocs; ++k) {
            int b = ((p - k) % nprocs + nprocs) % nprocs;
            std::int64_t lo, hi;
            oracle_block(total_edges, b, nprocs, lo, hi);
            for (std::int64_t e = lo; e < hi; ++e) {
                GlobalId a = edges.edge1[static_cast<std::size_t>(e)];
                GlobalId c = edges.edge2[static_cast<std::size_t>(e)];
                if (pv[static_cast<std::size_t>(a)] == p ||
                    pv[static_cast<std::size_t>(c)] == p)
                    ix.held_edges.push_back(e);
            }
        }

        // Owned nodes first, ascending; then ghosts in the order the held
        // edges first touch them.
        for (std::int64_t v = 0; v < total_nodes; ++v)
            if (pv[static_cast<std::size_t>(v)] == p) ix.node_map.push_back(v);
        ix.owned_node_count = static_cast<std::int64_t>(ix.node_map.size());

        auto local_of = [&](GlobalId v) -> std::int64_t {
            for (std::size_t i = 0; i < ix.node_map.size(); ++i)
                if (ix.node_map[i] == v) return static_cast<std::int64_t>(i);
            return -1;
        };

        for (GlobalId e : ix.held_edges) {
            for (GlobalId v : {edges.edge1[static_cast<std::size_t>(e)],
                               edges.edge2[static_cast<std::size_t>(e)]})
                if (local_of(v) < 0) ix.node_map.push_back(v);
        }
        for (GlobalId e : ix.held_edges) {
            ix.edge1_local.push_back(local_of(edges.edge1[static_cast<std::size_t>(e)]));
            ix.edge2_local.push_back(local_of(edges.edge2[static_cast<std::size_t>(e)]));
        }

        out.push_back(std::move(ix));
    }
    return out;
}

std::vector<double> oracle_gather_f64(const std::vector<double>& global,
                                      const MapArray& map) {
    std::vector<double> out;
    out.reserve(map.size());
    for (GlobalId g : map) out.push_back(global.at(static_cast<std::size_t>(g)));
    return out;
}

std::vector<std::int32_t> oracle_gather_i32(const std::vector<std::int32_t>& global,
                                            const MapArray& map) {
    std::vector<std::int32_t> out;
    out.reserve(map.size());
    for (GlobalId g : map) out.push_back(global.at(static_cast<std::size_t>(g)));
    return out;
}

} // namespace sdm
