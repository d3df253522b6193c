#ifndef SDM_CATALOG_HPP
#define SDM_CATALOG_HPP

#include <cstdint>
#include <filesystem>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sdm/bytes.hpp"
#include "sdm/types.hpp"

namespace sdm {

struct RunRow {
    std::int64_t run_id = 0;
    std::string app_name;
    int nprocs = 0;
    std::string timestamp;
    int org_level = 0; // 0 until a result group fixes it
};

/// A data group: datasets sharing global size (and, unless overridden per
/// dataset, element type) whose file organization is chosen jointly.
struct DataGroupDescriptor {
    std::int64_t run_id = 0;
    int group_id = 0;
    std::string name; // "g<id>", used in data file names
    std::vector<DatasetSpec> datasets;
    std::int64_t global_count = 0;     // elements per dataset (result groups)
    std::vector<std::int64_t> counts;  // per-dataset element counts (import groups)
    GroupKind kind = GroupKind::Result;
    OrgLevel level = OrgLevel::L3;     // meaningful for result groups only
    std::string source_file;           // import groups: file the data comes from

    Bytes encode() const;
    static DataGroupDescriptor decode(ByteSpan b);
};

struct ExecutionRecord {
    std::int64_t run_id = 0;
    std::string dataset;
    int timestep = 0;
    std::string file_id;
    std::uint64_t byte_offset = 0;
    std::uint64_t byte_length = 0;
};

/// Joined view over the index and index_history tables: everything a later
/// run needs to replay a stored index distribution.
struct IndexHistoryRecord {
    std::int64_t total_nodes = 0;
    std::int64_t total_edges = 0;
    int nprocs = 0;
    std::string history_file; // file name, resolved against the history dir
    std::vector<std::int64_t> per_rank_edge_counts;
    std::vector<std::int64_t> per_rank_node_counts;
    std::vector<std::uint64_t> per_rank_byte_offsets;

    Bytes encode() const;
    static IndexHistoryRecord decode(ByteSpan b);
};

/// Embedded metadata catalog. Persists the six tables (run, access_pattern,
/// execution, import, index, index_history) as newline-delimited record
/// files under one directory. A handle belongs to rank 0 of the running
/// job; other ranks see catalog-derived values only via collectives.
class Catalog {
public:
    Catalog(Catalog&&) noexcept;
    Catalog& operator=(Catalog&&) noexcept;
    Catalog(const Catalog&) = delete;
    Catalog& operator=(const Catalog&) = delete;
    ~Catalog();

    /// Opens (creating if needed) the catalog under root_dir and records a
    /// run row. Reopening an existing catalog keeps all prior rows.
    static Catalog initialize(const std::string& app_name,
                              const std::filesystem::path& root_dir, int nprocs);

    /// Read-only snapshot for dump/verification tooling; records no run row
    /// and refuses mutation.
    static Catalog inspect(const std::filesystem::path& root_dir);

    static const std::vector<std::string>& table_file_names();

    // -- groups ------------------------------------------------------------

    DataGroupDescriptor define_result_group(const std::vector<std::string>& names,
                                            DataType type, std::int64_t global_count,
                                            OrgLevel level);

    DataGroupDescriptor define_import_group(const std::vector<DatasetSpec>& datasets,
                                            const std::vector<std::int64_t>& counts,
                                            const std::string& source_file);

    // -- execution offsets ---------------------------------------------------

    void record_offset(const std::string& dataset, int timestep, const std::string& file_id,
                       std::uint64_t byte_offset, std::uint64_t byte_length);

    /// Latest record for (dataset, timestep), i.e. the current run's when
    /// one exists.
    std::optional<ExecutionRecord> get_offset(const std::string& dataset,
                                              int timestep) const;

    // -- index history -------------------------------------------------------

    std::optional<IndexHistoryRecord> lookup_index_history(std::int64_t total_nodes,
                                                           std::int64_t total_edges,
                                                           int nprocs) const;

    void insert_index_history(const IndexHistoryRecord& rec);

    // -- lifecycle -----------------------------------------------------------

    /// Blocks on any pending asynchronous history write, flushes all tables,
    /// and invalidates the handle.
    void finalize();

    /// Registered by the history module; finalize and the next registry wait
    /// on it.
    void set_pending_write(std::shared_future<void> f);
    void wait_pending_write();

    // -- introspection ---------------------------------------------------------

    std::int64_t run_id() const;
    const std::filesystem::path& root() const;
    std::size_t run_count() const;
    std::vector<RunRow> runs() const;
    std::vector<DataGroupDescriptor> groups(GroupKind kind) const;
    std::vector<ExecutionRecord> execution_records() const;
    std::vector<IndexHistoryRecord> index_records() const;

private:
    Catalog() = default;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace sdm

#endif
