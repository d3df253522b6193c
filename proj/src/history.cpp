#include "sdm/history.hpp"

#include <cstring>
#include <map>
#include <memory>
#include <thread>

#include "sdm/fsio.hpp"

namespace sdm {

namespace {

[[noreturn]] void corrupt(const std::string& file, const std::string& why) {
    throw HistoryCorruptError("history file '" + file + "' is corrupt: " + why);
}

// Completion barrier for one in-flight history file: every rank's background
// writer checks in; the last one makes the file durable and inserts the
// catalog row before releasing all waiters.
struct PendingWrite {
    std::mutex m;
    int remaining = 0;
    std::exception_ptr first_error;
    std::function<void()> on_complete;
    std::promise<void> promise;
    std::shared_future<void> future;
};

std::mutex g_pending_mutex;
std::map<std::string, std::shared_ptr<PendingWrite>> g_pending;

std::shared_ptr<PendingWrite> create_pending(const std::string& key, int nprocs,
                                             std::function<void()> on_complete) {
    auto entry = std::make_shared<PendingWrite>();
    entry->remaining = nprocs;
    entry->on_complete = std::move(on_complete);
    entry->future = entry->promise.get_future().share();
    std::lock_guard<std::mutex> lk(g_pending_mutex);
    if (!g_pending.emplace(key, entry).second)
        throw InternalError("history write already pending for '" + key + "'");
    return entry;
}

std::shared_ptr<PendingWrite> join_pending(const std::string& key) {
    std::lock_guard<std::mutex> lk(g_pending_mutex);
    auto it = g_pending.find(key);
    if (it == g_pending.end())
        throw InternalError("no pending history write for '" + key + "'");
    return it->second;
}

void finish_pending(const std::shared_ptr<PendingWrite>& entry, const std::string& key,
                    std::exception_ptr err) {
    std::function<void()> run;
    {
        std::lock_guard<std::mutex> lk(entry->m);
        if (err && !entry->first_error) entry->first_error = err;
        if (--entry->remaining > 0) return;
        run = std::move(entry->on_complete);
    }
    if (!entry->first_error && run) {
        try {
            run();
        } catch (...) {
            entry->first_error = std::current_exception();
        }
    }
    {
        std::lock_guard<std::mutex> lk(g_pending_mutex);
        g_pending.erase(key);
    }
    if (entry->first_error)
        entry->promise.set_exception(entry->first_error);
    else
        entry->promise.set_value();
}

} // namespace

std::uint64_t HistoryLayout::section_size(std::int64_t edge_count, std::int64_t node_count) {
    return 8 + 24 * static_cast<std::uint64_t>(edge_count) + 8 +
           8 * static_cast<std::uint64_t>(node_count);
}

std::vector<std::uint64_t> HistoryLayout::section_offsets(
    const std::vector<std::int64_t>& edge_counts,
    const std::vector<std::int64_t>& node_counts) {
    if (edge_counts.size() != node_counts.size())
        throw ValidationError("per-rank count lists differ in length");
    std::vector<std::uint64_t> offs;
    offs.reserve(edge_counts.size());
    std::uint64_t at = header_size;
    for (std::size_t r = 0; r < edge_counts.size(); ++r) {
        offs.push_back(at);
        at += section_size(edge_counts[r], node_counts[r]);
    }
    return offs;
}

std::uint64_t HistoryLayout::file_size(const std::vector<std::int64_t>& edge_counts,
                                       const std::vector<std::int64_t>& node_counts) {
    auto offs = section_offsets(edge_counts, node_counts);
    if (offs.empty()) return header_size;
    return offs.back() + section_size(edge_counts.back(), node_counts.back());
}

std::string history_file_name(std::int64_t total_nodes, std::int64_t total_edges,
                              int nprocs) {
    return "hist_n" + std::to_string(total_nodes) + "_e" + std::to_string(total_edges) +
           "_p" + std::to_string(nprocs) + ".bin";
}

Bytes encode_history_header(std::int64_t total_nodes, std::int64_t total_edges, int nprocs) {
    ByteWriter w;
    w.raw(HistoryLayout::magic, 4);
    w.u32(HistoryLayout::version);
    w.u64(static_cast<std::uint64_t>(total_nodes));
    w.u64(static_cast<std::uint64_t>(total_edges));
    w.u32(static_cast<std::uint32_t>(nprocs));
    return w.take();
}

void check_history_header(ByteSpan header, std::int64_t total_nodes,
                          std::int64_t total_edges, int nprocs, const std::string& file) {
    if (header.size() < HistoryLayout::header_size) corrupt(file, "short header");
    ByteReader r(header);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, HistoryLayout::magic, 4) != 0)
        corrupt(file, "bad magic");
    std::uint32_t ver = r.u32();
    if (ver != HistoryLayout::version)
        corrupt(file, "unsupported version " + std::to_string(ver));
    auto nodes = static_cast<std::int64_t>(r.u64());
    auto edges = static_cast<std::int64_t>(r.u64());
    auto procs = static_cast<int>(r.u32());
    if (nodes != total_nodes || edges != total_edges || procs != nprocs)
        corrupt(file, "header keys (" + std::to_string(nodes) + " nodes, " +
                          std::to_string(edges) + " edges, " + std::to_string(procs) +
                          " procs) do not match the catalog row");
}

Bytes encode_index_section(const LocalIndexSet& ix) {
    ByteWriter w;
    w.u64(ix.held_edges.size());
    for (std::size_t i = 0; i < ix.held_edges.size(); ++i) {
        w.i64(ix.held_edges[i]);
        w.i64(ix.edge1_local[i]);
        w.i64(ix.edge2_local[i]);
    }
    w.u64(ix.node_map.size());
    for (auto v : ix.node_map) w.i64(v);
    return w.take();
}

LocalIndexSet decode_index_section(ByteSpan section, int rank, const PartitioningVector& pv,
                                   const std::string& file) {
    LocalIndexSet ix;
    ix.rank = rank;
    try {
        ByteReader r(section);
        std::uint64_t edges = r.u64();
        ix.held_edges.reserve(edges);
        ix.edge1_local.reserve(edges);
        ix.edge2_local.reserve(edges);
        for (std::uint64_t i = 0; i < edges; ++i) {
            ix.held_edges.push_back(r.i64());
            ix.edge1_local.push_back(r.i64());
            ix.edge2_local.push_back(r.i64());
        }
        std::uint64_t nodes = r.u64();
        ix.node_map.reserve(nodes);
        for (std::uint64_t i = 0; i < nodes; ++i) ix.node_map.push_back(r.i64());
        if (!r.at_end()) corrupt(file, "trailing bytes after index section");
    } catch (const IoError& e) {
        corrupt(file, e.what());
    }

    const auto total_nodes = static_cast<std::int64_t>(pv.size());
    const auto local_count = static_cast<std::int64_t>(ix.node_map.size());
    for (auto v : ix.node_map)
        if (v < 0 || v >= total_nodes)
            corrupt(file, "node id " + std::to_string(v) + " outside the mesh");
    for (std::size_t i = 0; i < ix.held_edges.size(); ++i) {
        if (ix.held_edges[i] < 0) corrupt(file, "negative edge id");
        if (ix.edge1_local[i] < 0 || ix.edge1_local[i] >= local_count ||
            ix.edge2_local[i] < 0 || ix.edge2_local[i] >= local_count)
            corrupt(file, "edge endpoint points outside the local node map");
    }
    for (auto v : ix.node_map)
        if (pv[static_cast<std::size_t>(v)] == rank) ++ix.owned_node_count;
    return ix;
}

HistoryLookup shared_history_lookup(RankContext& ctx, const Catalog* catalog,
                                    std::int64_t total_nodes, std::int64_t total_edges) {
    Bytes answer = ctx.root_eval(0, [&]() -> Bytes {
        if (!catalog) throw InternalError("history lookup needs the catalog on rank 0");
        ByteWriter w;
        auto rec = catalog->lookup_index_history(total_nodes, total_edges, ctx.nprocs());
        bool other = false;
        if (!rec) {
            for (const auto& existing : catalog->index_records())
                if (existing.total_nodes == total_nodes &&
                    existing.total_edges == total_edges) {
                    other = true;
                    break;
                }
        }
        w.u8(rec ? 1 : 0);
        w.u8(other ? 1 : 0);
        if (rec) w.bytes(rec->encode());
        return w.take();
    });

    ByteReader r(answer);
    HistoryLookup out;
    bool hit = r.u8() != 0;
    out.other_nprocs = r.u8() != 0;
    if (hit) {
        Bytes body = r.bytes();
        out.record = IndexHistoryRecord::decode(body);
    }
    return out;
}

AsyncTicket index_registry(RankContext& ctx, Catalog* catalog,
                           const std::filesystem::path& history_dir,
                           const LocalIndexSet& index, std::int64_t total_nodes,
                           std::int64_t total_edges) {
    const int rank = ctx.rank();
    const int nprocs = ctx.nprocs();

    ByteWriter counts;
    counts.i64(index.edge_count());
    counts.i64(index.node_count());
    auto gathered = ctx.gather(0, counts.take());

    // Rank 0 sizes the file, writes the header, and parks the completion
    // barrier before anyone returns from the broadcast, so every rank can
    // join it.
    Bytes plan = ctx.root_eval(0, [&]() -> Bytes {
        if (!catalog) throw InternalError("index registry needs the catalog on rank 0");
        // One outstanding write at a time; a still-running earlier write is
        // drained (and its failure surfaced) before the next file starts.
        catalog->wait_pending_write();

        IndexHistoryRecord rec;
        rec.total_nodes = total_nodes;
        rec.total_edges = total_edges;
        rec.nprocs = nprocs;
        rec.history_file = history_file_name(total_nodes, total_edges, nprocs);
        for (int r = 0; r < nprocs; ++r) {
            ByteReader br(gathered[static_cast<std::size_t>(r)]);
            rec.per_rank_edge_counts.push_back(br.i64());
            rec.per_rank_node_counts.push_back(br.i64());
        }
        rec.per_rank_byte_offsets =
            HistoryLayout::section_offsets(rec.per_rank_edge_counts, rec.per_rank_node_counts);

        std::error_code ec;
        std::filesystem::create_directories(history_dir, ec);
        if (ec)
            throw IoError("cannot create history directory '" + history_dir.string() +
                          "': " + ec.message());
        auto path = history_dir / rec.history_file;
        write_file(path, encode_history_header(total_nodes, total_edges, nprocs));
        ensure_file_size(path, HistoryLayout::file_size(rec.per_rank_edge_counts,
                                                        rec.per_rank_node_counts));

        std::string key = std::filesystem::absolute(path).string();
        create_pending(key, nprocs, [path, catalog, rec] {
            sync_file(path);
            catalog->insert_index_history(rec);
        });

        ByteWriter w;
        w.str(key);
        w.bytes(rec.encode());
        return w.take();
    });

    ByteReader r(plan);
    std::string key = r.str();
    IndexHistoryRecord rec = IndexHistoryRecord::decode(r.bytes());

    auto entry = join_pending(key);
    if (rank == 0) catalog->set_pending_write(entry->future);

    Bytes section = encode_index_section(index);
    if (section.size() != HistoryLayout::section_size(index.edge_count(), index.node_count()))
        throw InternalError("index section size disagrees with the layout");
    std::uint64_t offset = rec.per_rank_byte_offsets[static_cast<std::size_t>(rank)];

    std::thread([entry, key, offset, section = std::move(section)] {
        std::exception_ptr err;
        try {
            write_file_range(key, offset, section);
        } catch (...) {
            err = std::current_exception();
        }
        finish_pending(entry, key, err);
    }).detach();

    return AsyncTicket(entry->future);
}

LocalIndexSet replay_history(RankContext& ctx, const std::filesystem::path& history_dir,
                             const IndexHistoryRecord& rec, const PartitioningVector& pv) {
    const int rank = ctx.rank();
    if (rec.nprocs != ctx.nprocs())
        throw InternalError("replaying a history recorded for " +
                            std::to_string(rec.nprocs) + " ranks on " +
                            std::to_string(ctx.nprocs()));
    if (static_cast<std::int64_t>(pv.size()) != rec.total_nodes)
        throw ValidationError("partitioning vector length differs from the cached mesh");

    auto path = history_dir / rec.history_file;
    if (!path_exists(path))
        corrupt(path.string(), "file named by the catalog row is missing");

    Bytes header;
    try {
        header = read_file_range(path, 0, HistoryLayout::header_size);
    } catch (const BoundsError&) {
        corrupt(path.string(), "short header");
    }
    check_history_header(header, rec.total_nodes, rec.total_edges, rec.nprocs,
                         path.string());

    const auto r = static_cast<std::size_t>(rank);
    const std::uint64_t size =
        HistoryLayout::section_size(rec.per_rank_edge_counts[r], rec.per_rank_node_counts[r]);
    Bytes section;
    try {
        section = read_file_range(path, rec.per_rank_byte_offsets[r], size);
    } catch (const BoundsError&) {
        corrupt(path.string(), "rank " + std::to_string(rank) + " section is truncated");
    }

    LocalIndexSet ix = decode_index_section(section, rank, pv, path.string());
    if (ix.edge_count() != rec.per_rank_edge_counts[r] ||
        ix.node_count() != rec.per_rank_node_counts[r])
        corrupt(path.string(), "section counts disagree with the catalog row");
    return ix;
}

} // namespace sdm
