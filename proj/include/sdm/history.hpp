#ifndef SDM_HISTORY_HPP
#define SDM_HISTORY_HPP

#include <cstdint>
#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "sdm/catalog.hpp"
#include "sdm/partition.hpp"
#include "sdm/runtime.hpp"

namespace sdm {

/// Byte layout of a history file: a fixed header followed by one
/// self-contained index section per rank, packed in rank order.
///
///   header:  magic "SDMH" | version u32 | total_nodes u64 | total_edges u64
///            | nprocs u32
///   section: held_count u64
///            | per held edge: global id i64, endpoint1 local i64,
///              endpoint2 local i64
///            | node_count u64 | node_map entries i64
struct HistoryLayout {
    static constexpr char magic[4] = {'S', 'D', 'M', 'H'};
    static constexpr std::uint32_t version = 1;
    static constexpr std::uint64_t header_size = 28;

    static std::uint64_t section_size(std::int64_t edge_count, std::int64_t node_count);

    /// Section start offsets per rank, cumulative after the header.
    static std::vector<std::uint64_t> section_offsets(
        const std::vector<std::int64_t>& edge_counts,
        const std::vector<std::int64_t>& node_counts);

    static std::uint64_t file_size(const std::vector<std::int64_t>& edge_counts,
                                   const std::vector<std::int64_t>& node_counts);
};

std::string history_file_name(std::int64_t total_nodes, std::int64_t total_edges,
                              int nprocs);

Bytes encode_history_header(std::int64_t total_nodes, std::int64_t total_edges, int nprocs);

/// Throws HistoryCorruptError (naming `file`) unless the header bytes match
/// the expected key exactly.
void check_history_header(ByteSpan header, std::int64_t total_nodes,
                          std::int64_t total_edges, int nprocs, const std::string& file);

Bytes encode_index_section(const LocalIndexSet& ix);

/// Inverse of encode_index_section. owned_node_count is not stored; it is
/// recomputed from pv. Structural damage throws HistoryCorruptError naming
/// `file`.
LocalIndexSet decode_index_section(ByteSpan section, int rank, const PartitioningVector& pv,
                                   const std::string& file);

/// Handle on an in-flight history write. wait() blocks until every rank's
/// section landed, the file is durable, and the catalog row exists; it
/// rethrows the first failure.
class AsyncTicket {
public:
    AsyncTicket() = default;
    explicit AsyncTicket(std::shared_future<void> f) : fut_(std::move(f)) {}

    bool pending() const { return fut_.valid(); }
    void wait() {
        if (fut_.valid()) fut_.get();
    }

private:
    std::shared_future<void> fut_;
};

struct HistoryLookup {
    std::optional<IndexHistoryRecord> record; // exact (nodes, edges, nprocs) hit
    bool other_nprocs = false; // same mesh is cached, but for a different rank count
};

/// Rank 0 consults the catalog; every rank receives the same answer.
/// `catalog` may be null on ranks other than 0.
HistoryLookup shared_history_lookup(RankContext& ctx, const Catalog* catalog,
                                    std::int64_t total_nodes, std::int64_t total_edges);

/// Registers a freshly computed index distribution: creates the history file,
/// kicks off one background section write per rank, and arranges for the
/// catalog row to be inserted only after the whole file is durable. The
/// catalog also receives the completion future, so its finalize blocks until
/// the row is in place.
AsyncTicket index_registry(RankContext& ctx, Catalog* catalog,
                           const std::filesystem::path& history_dir,
                           const LocalIndexSet& index, std::int64_t total_nodes,
                           std::int64_t total_edges);

/// Restores this rank's index from a cached history file. No ring traffic.
LocalIndexSet replay_history(RankContext& ctx, const std::filesystem::path& history_dir,
                             const IndexHistoryRecord& rec, const PartitioningVector& pv);

} // namespace sdm

#endif
