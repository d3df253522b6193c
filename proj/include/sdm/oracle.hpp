#ifndef SDM_ORACLE_HPP
#define SDM_ORACLE_HPP

#include <vector>

#include "sdm/partition.hpp"

namespace sdm {

/// Sequential reference for distribute_edges: one plain loop nest per rank
/// over the whole edge list, no buffers, no ring, no shared code path with
/// the parallel implementation beyond the struct definitions.
std::vector<LocalIndexSet> oracle_distribute(const EdgeList& edges,
                                             const PartitioningVector& pv, int nprocs);

/// Gathers map-selected elements out of a full global array.
std::vector<double> oracle_gather_f64(const std::vector<double>& global, const MapArray& map);
std::vector<std::int32_t> oracle_gather_i32(const std::vector<std::int32_t>& global,
                                            const MapArray& map);

} // namespace sdm

#endif
