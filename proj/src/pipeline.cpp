#include "sdm/pipeline.hpp"

#include <mutex>

#include "sdm/fsio.hpp"

namespace sdm {

namespace {

MapArray contiguous_view(std::int64_t count, int rank, int nprocs) {
    auto [lo, hi] = block_range(count, rank, nprocs);
    MapArray m;
    m.reserve(static_cast<std::size_t>(hi - lo));
    for (std::int64_t g = lo; g < hi; ++g) m.push_back(g);
    return m;
}

MapArray domain_view(const ResultGroupSpec& rg, const LocalIndexSet& ix, int rank,
                     int nprocs) {
    switch (rg.domain) {
    case ResultDomain::Nodes: return ix.node_map;
    case ResultDomain::Edges: return ix.held_edges;
    case ResultDomain::Contiguous: return contiguous_view(rg.global_count, rank, nprocs);
    }
    throw InternalError("unhandled result domain");
}

void verify_values(const WorkloadSpec& spec, const std::string& dataset, int timestep,
                   const MapArray& map, const std::vector<double>& got) {
    if (got.size() != map.size())
        throw VerifyMismatchError("dataset '" + dataset + "' returned " +
                                  std::to_string(got.size()) + " elements, expected " +
                                  std::to_string(map.size()));
    for (std::size_t i = 0; i < map.size(); ++i) {
        double want = workload_value(spec, dataset, timestep, map[i]);
        if (got[i] != want)
            throw VerifyMismatchError(
                "dataset '" + dataset + "' timestep " + std::to_string(timestep) +
                " differs at local element " + std::to_string(i) + " (global " +
                std::to_string(map[i]) + "): got " + std::to_string(got[i]) +
                ", expected " + std::to_string(want));
    }
}

} // namespace

std::filesystem::path resolved_data_dir(const RunConfig& cfg) {
    return cfg.data_dir.empty() ? cfg.catalog_dir / "data" : cfg.data_dir;
}

std::filesystem::path resolved_history_dir(const RunConfig& cfg) {
    return cfg.history_dir.empty() ? cfg.catalog_dir / "history" : cfg.history_dir;
}

void ensure_workload(const RunConfig& cfg) {
    WorkloadSpec spec = make_workload(cfg.workload, cfg.seed);
    auto dir = resolved_data_dir(cfg);
    if (!path_exists(dir / spec.mesh_file)) write_mesh_file(spec, dir);
}

RunSummary run_pipeline(const RunConfig& cfg) {
    if (cfg.catalog_dir.empty()) throw UsageError("a catalog directory is required");
    const WorkloadSpec spec = make_workload(cfg.workload, cfg.seed);
    const auto data_dir = resolved_data_dir(cfg);
    const auto history_dir = resolved_history_dir(cfg);
    ensure_workload(cfg);

    RunSummary summary;
    std::mutex summary_mutex;

    auto body = [&](RankContext& ctx) -> RankOutcome {
        const int rank = ctx.rank();
        const int nprocs = ctx.nprocs();

        std::optional<Catalog> catalog;
        if (rank == 0)
            catalog.emplace(Catalog::initialize(spec.name, cfg.catalog_dir, nprocs));
        Catalog* cat = catalog ? &*catalog : nullptr;

        Session session(ctx, cat, data_dir);
        PartitioningVector pv = workload_partitioning(spec, nprocs);
        session.bind_node_ownership(pv);

        DataGroupDescriptor imports = session.define_import_group(
            spec.imports.datasets, spec.imports.counts, spec.mesh_file);

        HistoryLookup lookup =
            shared_history_lookup(ctx, cat, spec.total_nodes, spec.total_edges);

        RankOutcome out;
        AsyncTicket ticket;
        if (lookup.record && cfg.use_history) {
            ctx.agree([&] {
                out.index = replay_history(ctx, history_dir, *lookup.record, pv);
            });
            out.replayed = true;
        } else {
            auto [lo1, e1] = session.import_block_i32(imports, "edge1");
            auto [lo2, e2] = session.import_block_i32(imports, "edge2");
            if (lo1 != lo2 || e1.size() != e2.size())
                throw InternalError("edge endpoint slices disagree");
            EdgeBlock block;
            block.lo = lo1;
            block.n1.assign(e1.begin(), e1.end());
            block.n2.assign(e2.begin(), e2.end());
            out.index = distribute_edges(ctx, block, pv, &out.dist);
            if (!lookup.record)
                ticket = index_registry(ctx, cat, history_dir, out.index,
                                        spec.total_nodes, spec.total_edges);
        }

        // Imported data arrays flow through the same map-array machinery as
        // results; checking them against the generator catches import bugs at
        // the source.
        for (std::size_t d = 2; d < spec.imports.datasets.size(); ++d) {
            const auto& ds = spec.imports.datasets[d];
            MapArray map;
            if (spec.imports.counts[d] == spec.total_nodes)
                map = out.index.node_map;
            else if (spec.imports.counts[d] == spec.total_edges)
                map = out.index.held_edges;
            else
                map = contiguous_view(spec.imports.counts[d], rank, nprocs);
            session.set_data_view(imports, ds.name, map, false);
            if (ds.type == DataType::Float64) {
                auto got = session.import_f64(imports, ds.name);
                verify_values(spec, ds.name, 0, map, got);
            }
        }
        session.release_importlist(imports);

        std::vector<DataGroupDescriptor> groups;
        std::vector<std::vector<MapArray>> group_maps;
        for (const auto& rg : spec.result_groups) {
            DataGroupDescriptor g = session.define_result_group(
                rg.names, DataType::Float64, rg.global_count, cfg.level);
            std::vector<MapArray> maps;
            for (const auto& name : rg.names) {
                MapArray map = domain_view(rg, out.index, rank, nprocs);
                session.set_data_view(g, name, map, rg.domain == ResultDomain::Nodes);
                maps.push_back(std::move(map));
            }
            groups.push_back(std::move(g));
            group_maps.push_back(std::move(maps));
        }

        for (int t = 1; t <= spec.timesteps; ++t) {
            for (std::size_t gi = 0; gi < groups.size(); ++gi) {
                const auto& rg = spec.result_groups[gi];
                for (std::size_t di = 0; di < rg.names.size(); ++di) {
                    const MapArray& map = group_maps[gi][di];
                    std::vector<double> values(map.size());
                    for (std::size_t i = 0; i < map.size(); ++i)
                        values[i] = workload_value(spec, rg.names[di], t, map[i]);
                    session.write_f64(groups[gi], rg.names[di], t, values);
                }
            }
        }

        if (cfg.verify_readback) {
            for (int t = 1; t <= spec.timesteps; ++t)
                for (std::size_t gi = 0; gi < groups.size(); ++gi)
                    for (std::size_t di = 0; di < spec.result_groups[gi].names.size();
                         ++di) {
                        const auto& name = spec.result_groups[gi].names[di];
                        auto got = session.read_f64(groups[gi], name, t);
                        verify_values(spec, name, t, group_maps[gi][di], got);
                    }
        }

        // The history write may still be in flight; everyone blocks on the
        // shared completion before the catalog closes.
        ticket.wait();
        ctx.barrier();

        out.io = session.stats();
        if (rank == 0) {
            std::lock_guard<std::mutex> lk(summary_mutex);
            summary.run_id = catalog->run_id();
            summary.history_hit = out.replayed;
            summary.history_written = ticket.pending();
            summary.history_other_nprocs = lookup.other_nprocs;
            catalog->finalize();
        }
        return out;
    };

    RunReport report;
    summary.ranks = run_ranks(cfg.nprocs, body, cfg.policy, &report);
    summary.job = report.stats;

    for (const auto& entry : std::filesystem::directory_iterator(data_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".dat")
            ++summary.data_files;
    return summary;
}

} // namespace sdm
