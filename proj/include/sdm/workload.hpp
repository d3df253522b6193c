#ifndef SDM_WORKLOAD_HPP
#define SDM_WORKLOAD_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdm/partition.hpp"
#include "sdm/types.hpp"

namespace sdm {

enum class WorkloadKind { WorkedExample, Fun3d, Rt };

WorkloadKind workload_kind_from_string(const std::string& s);
std::string to_string(WorkloadKind k);

/// Domain a result dataset ranges over, which decides the view each rank
/// binds: node datasets use the node map with ownership dedup, edge datasets
/// the held-edge map, contiguous datasets an even block slice.
enum class ResultDomain { Nodes, Edges, Contiguous };

struct ResultGroupSpec {
    std::vector<std::string> names;
    std::int64_t global_count = 0;
    ResultDomain domain = ResultDomain::Nodes;
};

struct ImportLayout {
    std::vector<DatasetSpec> datasets; // sequential in the mesh file
    std::vector<std::int64_t> counts;
};

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::WorkedExample;
    std::string name;
    std::uint64_t seed = 1;
    std::int64_t total_nodes = 0;
    std::int64_t total_edges = 0;
    int timesteps = 1;
    std::string mesh_file; // name within the data directory
    ImportLayout imports;
    std::vector<ResultGroupSpec> result_groups;
};

/// Fixed shape per kind; only the seed varies the data.
WorkloadSpec make_workload(WorkloadKind kind, std::uint64_t seed);

/// The mesh is a pure function of the workload description.
EdgeList workload_mesh(const WorkloadSpec& spec);

/// Node-owner assignment for a given rank count; every rank owns at least
/// one node. Pure function of (spec, nprocs).
PartitioningVector workload_partitioning(const WorkloadSpec& spec, int nprocs);

/// Deterministic element value for any dataset; timestep 0 addresses the
/// imported arrays. Integer-valued, so f64 round-trips are bit-exact.
double workload_value(const WorkloadSpec& spec, const std::string& dataset, int timestep,
                      GlobalId g);

/// Writes the import source file: edge1 and edge2 as little-endian i32,
/// then each further array in layout order.
void write_mesh_file(const WorkloadSpec& spec, const std::filesystem::path& dir);

/// Random mesh for property tests: `edges` pairs over `nodes` nodes, no
/// self-loops, reproducible from the seed.
EdgeList random_mesh(std::int64_t nodes, std::int64_t edges, std::uint64_t seed);
PartitioningVector random_partitioning(std::int64_t nodes, int nprocs, std::uint64_t seed);

} // namespace sdm

#endif
