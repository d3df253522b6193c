#include "sdm/dataio.hpp"

#include <algorithm>
#include <cstring>

#include "sdm/fsio.hpp"

namespace sdm {

namespace {

// Ascending (global id, local position) pairs ready for run coalescing.
using Elems = std::vector<std::pair<GlobalId, std::size_t>>;

// Calls `f(first_elem, count)` once per maximal run of consecutive global ids.
template <typename F>
void for_each_run(const Elems& elems, F&& f) {
    std::size_t k = 0;
    while (k < elems.size()) {
        std::size_t start = k;
        while (k + 1 < elems.size() && elems[k + 1].first == elems[k].first + 1) ++k;
        ++k;
        f(start, k - start);
    }
}

} // namespace

std::string region_file_name(const DataGroupDescriptor& g, const std::string& dataset,
                             int timestep) {
    switch (g.level) {
    case OrgLevel::L1:
        return g.name + "_" + dataset + "_t" + std::to_string(timestep) + ".dat";
    case OrgLevel::L2:
        return g.name + "_" + dataset + ".dat";
    case OrgLevel::L3:
        return g.name + ".dat";
    }
    throw InternalError("unhandled file organization level");
}

Session::Session(RankContext& ctx, Catalog* catalog, std::filesystem::path data_dir)
    : ctx_(&ctx), catalog_(catalog), data_dir_(std::move(data_dir)) {
    if (ctx.rank() == 0 && !catalog_)
        throw ValidationError("rank 0 opens the session with the catalog handle");
    if (ctx.rank() != 0 && catalog_)
        throw ValidationError("only rank 0 may hold the catalog handle");
    ctx_->root_eval(0, [this]() -> Bytes {
        std::error_code ec;
        std::filesystem::create_directories(data_dir_, ec);
        if (ec)
            throw IoError("cannot create data directory '" + data_dir_.string() +
                          "': " + ec.message());
        return {};
    });
}

DataGroupDescriptor Session::define_result_group(const std::vector<std::string>& names,
                                                 DataType type, std::int64_t global_count,
                                                 OrgLevel level) {
    ByteWriter w;
    w.u8(1);
    w.u64(names.size());
    for (const auto& n : names) w.str(n);
    w.u32(static_cast<std::uint32_t>(type));
    w.i64(global_count);
    w.i32(static_cast<int>(level));
    auto votes = ctx_->gather(0, w.take());
    Bytes desc = ctx_->root_eval(0, [&]() -> Bytes {
        for (std::size_t r = 1; r < votes.size(); ++r)
            if (votes[r] != votes[0])
                throw CollectiveError("collective mismatch: rank " + std::to_string(r) +
                                      " defines a different result group");
        return catalog_->define_result_group(names, type, global_count, level).encode();
    });
    return DataGroupDescriptor::decode(desc);
}

DataGroupDescriptor Session::define_import_group(const std::vector<DatasetSpec>& datasets,
                                                 const std::vector<std::int64_t>& counts,
                                                 const std::string& source_file) {
    ByteWriter w;
    w.u8(2);
    w.u64(datasets.size());
    for (const auto& d : datasets) {
        w.str(d.name);
        w.u32(static_cast<std::uint32_t>(d.type));
    }
    w.u64(counts.size());
    for (auto c : counts) w.i64(c);
    w.str(source_file);
    auto votes = ctx_->gather(0, w.take());
    Bytes desc = ctx_->root_eval(0, [&]() -> Bytes {
        for (std::size_t r = 1; r < votes.size(); ++r)
            if (votes[r] != votes[0])
                throw CollectiveError("collective mismatch: rank " + std::to_string(r) +
                                      " defines a different import group");
        return catalog_->define_import_group(datasets, counts, source_file).encode();
    });
    return DataGroupDescriptor::decode(desc);
}

void Session::bind_node_ownership(PartitioningVector pv) {
    for (std::size_t i = 0; i < pv.size(); ++i)
        if (pv[i] < 0 || pv[i] >= ctx_->nprocs())
            throw ValidationError("pv assigns node " + std::to_string(i) +
                                  " to rank " + std::to_string(pv[i]));
    pv_ = std::move(pv);
}

void Session::set_data_view(const DataGroupDescriptor& g, const std::string& dataset,
                            MapArray map, bool dedup_owned_nodes) {
    dataset_spec(g, dataset);
    const std::int64_t domain = domain_count(g, dataset);
    build_local_lookup(map, domain); // bounds + duplicate validation
    if (dedup_owned_nodes) {
        if (!pv_)
            throw StateError("ownership deduplication needs bind_node_ownership first");
        if (static_cast<std::int64_t>(pv_->size()) != domain)
            throw ValidationError("dataset '" + dataset +
                                  "' is not node-shaped; cannot deduplicate by ownership");
    }

    View v;
    v.map = std::move(map);
    v.dedup = dedup_owned_nodes;
    v.sorted_by_global.resize(v.map.size());
    for (std::size_t i = 0; i < v.map.size(); ++i)
        v.sorted_by_global[i] = static_cast<std::int64_t>(i);
    std::sort(v.sorted_by_global.begin(), v.sorted_by_global.end(),
              [&](std::int64_t a, std::int64_t b) {
                  return v.map[static_cast<std::size_t>(a)] <
                         v.map[static_cast<std::size_t>(b)];
              });
    views_[dataset] = std::move(v);
}

void Session::write_f64(const DataGroupDescriptor& g, const std::string& dataset,
                        int timestep, std::span<const double> values) {
    write_raw(g, dataset, timestep,
              ByteSpan(reinterpret_cast<const std::byte*>(values.data()),
                       values.size() * sizeof(double)),
              DataType::Float64);
}

void Session::write_i32(const DataGroupDescriptor& g, const std::string& dataset,
                        int timestep, std::span<const std::int32_t> values) {
    write_raw(g, dataset, timestep,
              ByteSpan(reinterpret_cast<const std::byte*>(values.data()),
                       values.size() * sizeof(std::int32_t)),
              DataType::Int32);
}

std::vector<double> Session::read_f64(const DataGroupDescriptor& g,
                                      const std::string& dataset, int timestep) {
    return unpack_f64(read_raw(g, dataset, timestep, DataType::Float64));
}

std::vector<std::int32_t> Session::read_i32(const DataGroupDescriptor& g,
                                            const std::string& dataset, int timestep) {
    return unpack_i32(read_raw(g, dataset, timestep, DataType::Int32));
}

const DatasetSpec& Session::dataset_spec(const DataGroupDescriptor& g,
                                         const std::string& dataset) const {
    for (const auto& d : g.datasets)
        if (d.name == dataset) return d;
    throw NotFoundError("group '" + g.name + "' has no dataset '" + dataset + "'");
}

std::int64_t Session::domain_count(const DataGroupDescriptor& g,
                                   const std::string& dataset) const {
    if (g.kind == GroupKind::Result) return g.global_count;
    for (std::size_t i = 0; i < g.datasets.size(); ++i)
        if (g.datasets[i].name == dataset) return g.counts[i];
    throw NotFoundError("group '" + g.name + "' has no dataset '" + dataset + "'");
}

const Session::View& Session::view_for(const std::string& dataset) const {
    auto it = views_.find(dataset);
    if (it == views_.end())
        throw StateError("no data view bound for dataset '" + dataset + "'");
    return it->second;
}

void Session::check_collective_target(std::uint32_t op, const DataGroupDescriptor& g,
                                      const std::string& dataset, int timestep) {
    ByteWriter w;
    w.u32(op);
    w.i64(g.run_id);
    w.i32(g.group_id);
    w.i32(static_cast<int>(g.level));
    w.i64(g.global_count);
    w.str(dataset);
    w.i32(timestep);
    auto votes = ctx_->gather(0, w.take());
    ctx_->root_eval(0, [&]() -> Bytes {
        for (std::size_t r = 1; r < votes.size(); ++r)
            if (votes[r] != votes[0])
                throw CollectiveError("collective mismatch: rank " + std::to_string(r) +
                                      " targets a different dataset, timestep, or group");
        return {};
    });
}

void Session::write_raw(const DataGroupDescriptor& g, const std::string& dataset,
                        int timestep, ByteSpan values, DataType type) {
    if (g.kind != GroupKind::Result)
        throw ValidationError("imported data groups are read-only");
    const DatasetSpec& spec = dataset_spec(g, dataset);
    if (spec.type != type)
        throw ValidationError("dataset '" + dataset + "' stores " + to_string(spec.type) +
                              " elements");
    const View& view = view_for(dataset);
    const std::size_t esz = element_size(type);
    if (values.size() != view.map.size() * esz)
        throw ValidationError("local buffer holds " + std::to_string(values.size() / esz) +
                              " elements but the view maps " +
                              std::to_string(view.map.size()));
    if (timestep < 1) throw ValidationError("timestep must be >= 1");

    check_collective_target(10, g, dataset, timestep);

    const std::uint64_t region_len = static_cast<std::uint64_t>(g.global_count) * esz;
    Bytes plan = ctx_->root_eval(0, [&]() -> Bytes {
        std::string file = region_file_name(g, dataset, timestep);
        const std::int64_t run = catalog_->run_id();
        std::uint64_t base = 0;
        for (const auto& e : catalog_->execution_records()) {
            if (e.run_id != run) continue;
            if (e.dataset == dataset && e.timestep == timestep)
                throw ConflictError("dataset '" + dataset + "' timestep " +
                                    std::to_string(timestep) + " was already written");
            if (e.file_id == file) base = std::max(base, e.byte_offset + e.byte_length);
        }
        auto path = data_dir_ / file;
        // The full region exists on disk before any rank writes, so ranks can
        // land their runs in any order and unwritten slots read back as
        // zeros.
        ensure_file_size(path, base + region_len);
        ByteWriter w;
        w.str(file);
        w.u64(base);
        return w.take();
    });
    ByteReader pr(plan);
    std::string file = pr.str();
    std::uint64_t base = pr.u64();
    auto path = data_dir_ / file;

    Elems elems;
    elems.reserve(view.map.size());
    const int rank = ctx_->rank();
    for (auto pos : view.sorted_by_global) {
        GlobalId gid = view.map[static_cast<std::size_t>(pos)];
        if (view.dedup && (*pv_)[static_cast<std::size_t>(gid)] != rank) {
            ++stats_.elements_skipped;
            continue;
        }
        elems.emplace_back(gid, static_cast<std::size_t>(pos));
    }

    for_each_run(elems, [&](std::size_t start, std::size_t count) {
        Bytes buf(count * esz);
        for (std::size_t q = 0; q < count; ++q)
            std::memcpy(buf.data() + q * esz,
                        values.data() + elems[start + q].second * esz, esz);
        write_file_range(
            path, base + static_cast<std::uint64_t>(elems[start].first) * esz, buf);
        ++stats_.write_runs;
        stats_.bytes_written += buf.size();
    });

    // Nobody records the region until every rank's runs are on disk.
    ctx_->barrier();
    ctx_->root_eval(0, [&]() -> Bytes {
        catalog_->record_offset(dataset, timestep, file, base, region_len);
        return {};
    });
    ++stats_.write_calls;
}

Bytes Session::read_raw(const DataGroupDescriptor& g, const std::string& dataset,
                        int timestep, DataType type) {
    const DatasetSpec& spec = dataset_spec(g, dataset);
    if (spec.type != type)
        throw ValidationError("dataset '" + dataset + "' stores " + to_string(spec.type) +
                              " elements");
    const View& view = view_for(dataset);
    const std::size_t esz = element_size(type);
    const std::uint64_t domain_len =
        static_cast<std::uint64_t>(domain_count(g, dataset)) * esz;

    check_collective_target(20, g, dataset, timestep);

    Bytes plan = ctx_->root_eval(0, [&]() -> Bytes {
        auto rec = catalog_->get_offset(dataset, timestep);
        if (!rec)
            throw NotFoundError("no data recorded for dataset '" + dataset +
                                "' timestep " + std::to_string(timestep));
        if (rec->byte_length != domain_len)
            throw StateError("recorded region of " + std::to_string(rec->byte_length) +
                             " bytes does not cover dataset '" + dataset + "'");
        ByteWriter w;
        w.str(rec->file_id);
        w.u64(rec->byte_offset);
        return w.take();
    });
    ByteReader pr(plan);
    std::string file = pr.str();
    std::uint64_t base = pr.u64();
    auto path = data_dir_ / file;

    Elems elems;
    elems.reserve(view.map.size());
    for (auto pos : view.sorted_by_global)
        elems.emplace_back(view.map[static_cast<std::size_t>(pos)],
                           static_cast<std::size_t>(pos));

    Bytes out(view.map.size() * esz);
    for_each_run(elems, [&](std::size_t start, std::size_t count) {
        Bytes buf = read_file_range(
            path, base + static_cast<std::uint64_t>(elems[start].first) * esz,
            count * esz);
        for (std::size_t q = 0; q < count; ++q)
            std::memcpy(out.data() + elems[start + q].second * esz, buf.data() + q * esz,
                        esz);
        ++stats_.read_runs;
        stats_.bytes_read += buf.size();
    });
    ++stats_.read_calls;
    return out;
}

std::uint64_t Session::import_dataset_offset(const DataGroupDescriptor& g,
                                             const std::string& dataset) const {
    std::uint64_t off = 0;
    for (std::size_t i = 0; i < g.datasets.size(); ++i) {
        if (g.datasets[i].name == dataset) return off;
        off += static_cast<std::uint64_t>(g.counts[i]) * element_size(g.datasets[i].type);
    }
    throw NotFoundError("group '" + g.name + "' has no dataset '" + dataset + "'");
}

Bytes Session::import_raw(const DataGroupDescriptor& g, const std::string& dataset,
                          DataType expected) {
    if (g.kind != GroupKind::Import)
        throw ValidationError("group '" + g.name + "' was not imported");
    if (auto it = released_imports_.find(g.group_id);
        it != released_imports_.end() && it->second)
        throw LifecycleError("import list for group '" + g.name + "' was released");
    const DatasetSpec& spec = dataset_spec(g, dataset);
    if (spec.type != expected)
        throw ValidationError("dataset '" + dataset + "' stores " + to_string(spec.type) +
                              " elements");
    const View& view = view_for(dataset);
    const std::size_t esz = element_size(expected);
    const std::uint64_t off0 = import_dataset_offset(g, dataset);
    auto path = data_dir_ / g.source_file;

    Elems elems;
    elems.reserve(view.map.size());
    for (auto pos : view.sorted_by_global)
        elems.emplace_back(view.map[static_cast<std::size_t>(pos)],
                           static_cast<std::size_t>(pos));

    Bytes out(view.map.size() * esz);
    for_each_run(elems, [&](std::size_t start, std::size_t count) {
        Bytes buf = read_file_range(
            path, off0 + static_cast<std::uint64_t>(elems[start].first) * esz,
            count * esz);
        for (std::size_t q = 0; q < count; ++q)
            std::memcpy(out.data() + elems[start + q].second * esz, buf.data() + q * esz,
                        esz);
        ++stats_.read_runs;
        stats_.bytes_read += buf.size();
    });
    ++stats_.read_calls;
    return out;
}

std::pair<std::int64_t, std::vector<std::int32_t>> Session::import_block_i32(
    const DataGroupDescriptor& g, const std::string& dataset) {
    if (g.kind != GroupKind::Import)
        throw ValidationError("group '" + g.name + "' was not imported");
    if (auto it = released_imports_.find(g.group_id);
        it != released_imports_.end() && it->second)
        throw LifecycleError("import list for group '" + g.name + "' was released");
    const DatasetSpec& spec = dataset_spec(g, dataset);
    if (spec.type != DataType::Int32)
        throw ValidationError("dataset '" + dataset + "' stores " + to_string(spec.type) +
                              " elements");
    auto [lo, hi] = block_range(domain_count(g, dataset), ctx_->rank(), ctx_->nprocs());
    const std::uint64_t off0 = import_dataset_offset(g, dataset);
    Bytes raw = read_file_range(data_dir_ / g.source_file,
                                off0 + static_cast<std::uint64_t>(lo) * 4,
                                static_cast<std::uint64_t>(hi - lo) * 4);
    stats_.bytes_read += raw.size();
    ++stats_.read_calls;
    return {lo, unpack_i32(raw)};
}

std::vector<double> Session::import_f64(const DataGroupDescriptor& g,
                                        const std::string& dataset) {
    return unpack_f64(import_raw(g, dataset, DataType::Float64));
}

std::vector<std::int32_t> Session::import_i32(const DataGroupDescriptor& g,
                                              const std::string& dataset) {
    return unpack_i32(import_raw(g, dataset, DataType::Int32));
}

void Session::release_importlist(const DataGroupDescriptor& g) {
    if (g.kind != GroupKind::Import)
        throw ValidationError("group '" + g.name + "' was not imported");
    auto& slot = released_imports_[g.group_id];
    if (slot) throw LifecycleError("import list for group '" + g.name + "' was released");
    slot = true;
}

} // namespace sdm
