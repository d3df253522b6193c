#include "sdm/workload.hpp"

#include <random>

#include "sdm/fsio.hpp"

namespace sdm {

namespace {

// Worked five-node mesh: e0=(0,1) e1=(1,2) e2=(0,3) e3=(2,4).
const std::vector<GlobalId> kExampleEdge1 = {0, 1, 0, 2};
const std::vector<GlobalId> kExampleEdge2 = {1, 2, 3, 4};
const PartitioningVector kExamplePv = {0, 1, 1, 0, 1};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t h = seed * 0x9e3779b97f4a7c15ull + salt;
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
    return h;
}

} // namespace

WorkloadKind workload_kind_from_string(const std::string& s) {
    if (s == "worked-example") return WorkloadKind::WorkedExample;
    if (s == "fun3d") return WorkloadKind::Fun3d;
    if (s == "rt") return WorkloadKind::Rt;
    throw UsageError("unknown workload '" + s + "' (expected fun3d, rt, or worked-example)");
}

std::string to_string(WorkloadKind k) {
    switch (k) {
    case WorkloadKind::WorkedExample: return "worked-example";
    case WorkloadKind::Fun3d: return "fun3d";
    case WorkloadKind::Rt: return "rt";
    }
    return "?";
}

WorkloadSpec make_workload(WorkloadKind kind, std::uint64_t seed) {
    WorkloadSpec s;
    s.kind = kind;
    s.name = to_string(kind);
    s.seed = seed;

    switch (kind) {
    case WorkloadKind::WorkedExample: {
        s.total_nodes = 5;
        s.total_edges = 4;
        s.timesteps = 1;
        s.mesh_file = "example_mesh.bin";
        s.imports.datasets = {{"edge1", DataType::Int32},
                              {"edge2", DataType::Int32},
                              {"x", DataType::Float64},
                              {"y", DataType::Float64}};
        s.imports.counts = {s.total_edges, s.total_edges, s.total_edges, s.total_nodes};
        s.result_groups = {{{"u"}, s.total_nodes, ResultDomain::Nodes}};
        break;
    }
    case WorkloadKind::Fun3d: {
        // Edges plus four edge arrays and four node arrays imported; five
        // result datasets per step, the four node ones grouped apart from the
        // single larger one.
        s.total_nodes = 60;
        s.total_edges = 240;
        s.timesteps = 2;
        s.mesh_file = "fun3d_mesh.bin";
        s.imports.datasets = {{"edge1", DataType::Int32}, {"edge2", DataType::Int32},
                              {"w0", DataType::Float64},  {"w1", DataType::Float64},
                              {"w2", DataType::Float64},  {"w3", DataType::Float64},
                              {"v0", DataType::Float64},  {"v1", DataType::Float64},
                              {"v2", DataType::Float64},  {"v3", DataType::Float64}};
        s.imports.counts = {s.total_edges, s.total_edges, s.total_edges, s.total_edges,
                            s.total_edges, s.total_edges, s.total_nodes, s.total_nodes,
                            s.total_nodes, s.total_nodes};
        s.result_groups = {
            {{"u0", "u1", "u2", "u3"}, s.total_nodes, ResultDomain::Nodes},
            {{"flux"}, 5 * s.total_nodes, ResultDomain::Contiguous},
        };
        break;
    }
    case WorkloadKind::Rt: {
        // A node dataset and a triangle dataset written per step, five steps.
        s.total_nodes = 50;
        s.total_edges = 150;
        s.timesteps = 5;
        s.mesh_file = "rt_mesh.bin";
        s.imports.datasets = {{"edge1", DataType::Int32},
                              {"edge2", DataType::Int32},
                              {"y", DataType::Float64}};
        s.imports.counts = {s.total_edges, s.total_edges, s.total_nodes};
        s.result_groups = {
            {{"vel"}, s.total_nodes, ResultDomain::Nodes},
            {{"tri"}, 2 * s.total_nodes, ResultDomain::Contiguous},
        };
        break;
    }
    }
    return s;
}

EdgeList random_mesh(std::int64_t nodes, std::int64_t edges, std::uint64_t seed) {
    if (nodes < 2) throw ValidationError("a mesh needs at least two nodes");
    std::mt19937_64 rng(mix_seed(seed, 0xED6E5));
    std::uniform_int_distribution<std::int64_t> pick(0, nodes - 1);
    std::uniform_int_distribution<std::int64_t> pick1(0, nodes - 2);
    EdgeList e;
    e.edge1.reserve(static_cast<std::size_t>(edges));
    e.edge2.reserve(static_cast<std::size_t>(edges));
    for (std::int64_t i = 0; i < edges; ++i) {
        std::int64_t a = pick(rng);
        std::int64_t b = pick1(rng);
        if (b >= a) ++b; // no self-loops
        e.edge1.push_back(a);
        e.edge2.push_back(b);
    }
    return e;
}

PartitioningVector random_partitioning(std::int64_t nodes, int nprocs, std::uint64_t seed) {
    if (nprocs < 1) throw ValidationError("nprocs must be >= 1");
    if (nodes < nprocs)
        throw ValidationError("cannot give each of " + std::to_string(nprocs) +
                              " ranks a node out of " + std::to_string(nodes));
    std::mt19937_64 rng(mix_seed(seed, 0xB117));
    std::uniform_int_distribution<int> pick(0, nprocs - 1);
    PartitioningVector pv(static_cast<std::size_t>(nodes));
    for (auto& v : pv) v = pick(rng);
    // every rank owns at least its own seed node
    for (int r = 0; r < nprocs; ++r) pv[static_cast<std::size_t>(r)] = r;
    return pv;
}

EdgeList workload_mesh(const WorkloadSpec& spec) {
    if (spec.kind == WorkloadKind::WorkedExample)
        return {kExampleEdge1, kExampleEdge2};
    return random_mesh(spec.total_nodes, spec.total_edges, mix_seed(spec.seed, 0x4D45));
}

PartitioningVector workload_partitioning(const WorkloadSpec& spec, int nprocs) {
    if (spec.kind == WorkloadKind::WorkedExample && nprocs == 2) return kExamplePv;
    if (spec.kind == WorkloadKind::WorkedExample) {
        PartitioningVector pv(static_cast<std::size_t>(spec.total_nodes));
        for (std::size_t i = 0; i < pv.size(); ++i)
            pv[i] = static_cast<int>(i) % nprocs;
        return pv;
    }
    return random_partitioning(spec.total_nodes, nprocs, mix_seed(spec.seed, 0x50AF));
}

double workload_value(const WorkloadSpec& spec, const std::string& dataset, int timestep,
                      GlobalId g) {
    // Small integers survive the f64 round trip exactly.
    std::uint64_t h = mix_seed(spec.seed, 0xDA7A);
    for (char c : dataset) h = h * 131 + static_cast<unsigned char>(c);
    h = h % 100000;
    return static_cast<double>(static_cast<std::int64_t>(h) +
                               static_cast<std::int64_t>(timestep) * 1000003 + g * 17);
}

void write_mesh_file(const WorkloadSpec& spec, const std::filesystem::path& dir) {
    EdgeList mesh = workload_mesh(spec);
    ByteWriter w;
    for (auto v : mesh.edge1) w.i32(static_cast<std::int32_t>(v));
    for (auto v : mesh.edge2) w.i32(static_cast<std::int32_t>(v));
    for (std::size_t d = 2; d < spec.imports.datasets.size(); ++d) {
        const auto& ds = spec.imports.datasets[d];
        for (std::int64_t g = 0; g < spec.imports.counts[d]; ++g) {
            double v = workload_value(spec, ds.name, 0, g);
            if (ds.type == DataType::Float64)
                w.f64(v);
            else
                w.i32(static_cast<std::int32_t>(v));
        }
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
    write_file(dir / spec.mesh_file, w.take());
}

} // namespace sdm
