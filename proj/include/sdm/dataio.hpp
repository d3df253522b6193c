#ifndef SDM_DATAIO_HPP
#define SDM_DATAIO_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdm/catalog.hpp"
#include "sdm/partition.hpp"
#include "sdm/runtime.hpp"

namespace sdm {

/// Where a (dataset, timestep) region lives on disk.
struct Region {
    std::string file_id;
    std::uint64_t byte_offset = 0;
    std::uint64_t byte_length = 0;
};

/// Data file name for one dataset/timestep under the group's organization
/// level: L1 isolates every timestep, L2 every dataset, L3 packs the whole
/// group into one file.
std::string region_file_name(const DataGroupDescriptor& g, const std::string& dataset,
                             int timestep);

struct IoStats {
    std::uint64_t write_calls = 0;
    std::uint64_t read_calls = 0;
    std::uint64_t write_runs = 0;   // coalesced contiguous segments written
    std::uint64_t read_runs = 0;
    std::uint64_t bytes_written = 0;
    std::uint64_t bytes_read = 0;
    std::uint64_t elements_skipped = 0; // ghosts suppressed by ownership dedup
};

/// Per-rank facade over the catalog, the runtime, and the data directory.
/// All public methods except the import ones are collective: every rank of
/// the job must call them with matching arguments. The catalog handle lives
/// on rank 0 only; other ranks pass null and receive catalog-derived values
/// through the collectives.
class Session {
public:
    Session(RankContext& ctx, Catalog* catalog, std::filesystem::path data_dir);

    // -- group definition (collective) --------------------------------------

    DataGroupDescriptor define_result_group(const std::vector<std::string>& names,
                                            DataType type, std::int64_t global_count,
                                            OrgLevel level);

    DataGroupDescriptor define_import_group(const std::vector<DatasetSpec>& datasets,
                                            const std::vector<std::int64_t>& counts,
                                            const std::string& source_file);

    // -- views ----------------------------------------------------------------

    /// Replicated node-owner vector; enables ownership deduplication for
    /// views registered with dedup_owned_nodes.
    void bind_node_ownership(PartitioningVector pv);

    /// Attaches this rank's local-to-global map for one dataset. With
    /// dedup_owned_nodes, writes skip entries whose node this rank does not
    /// own (reads still fetch them), so replicated ghosts land on disk
    /// exactly once.
    void set_data_view(const DataGroupDescriptor& g, const std::string& dataset,
                       MapArray map, bool dedup_owned_nodes = false);

    // -- collective result I/O ------------------------------------------------

    void write_f64(const DataGroupDescriptor& g, const std::string& dataset, int timestep,
                   std::span<const double> values);
    void write_i32(const DataGroupDescriptor& g, const std::string& dataset, int timestep,
                   std::span<const std::int32_t> values);

    std::vector<double> read_f64(const DataGroupDescriptor& g, const std::string& dataset,
                                 int timestep);
    std::vector<std::int32_t> read_i32(const DataGroupDescriptor& g,
                                       const std::string& dataset, int timestep);

    // -- imports (local) --------------------------------------------------------

    /// This rank's even-split slice of an imported dataset; first is the
    /// global index of the slice start.
    std::pair<std::int64_t, std::vector<std::int32_t>> import_block_i32(
        const DataGroupDescriptor& g, const std::string& dataset);

    /// Gathers the elements selected by the dataset's view.
    std::vector<double> import_f64(const DataGroupDescriptor& g, const std::string& dataset);
    std::vector<std::int32_t> import_i32(const DataGroupDescriptor& g,
                                         const std::string& dataset);

    /// Drops the group's import state; further imports from it are refused.
    void release_importlist(const DataGroupDescriptor& g);

    const IoStats& stats() const { return stats_; }
    const std::filesystem::path& data_dir() const { return data_dir_; }

private:
    struct View {
        MapArray map;
        std::vector<std::int64_t> sorted_by_global; // positions, ascending global id
        bool dedup = false;
    };

    const DatasetSpec& dataset_spec(const DataGroupDescriptor& g,
                                    const std::string& dataset) const;
    std::int64_t domain_count(const DataGroupDescriptor& g, const std::string& dataset) const;
    const View& view_for(const std::string& dataset) const;
    void check_collective_target(std::uint32_t op, const DataGroupDescriptor& g,
                                 const std::string& dataset, int timestep);

    void write_raw(const DataGroupDescriptor& g, const std::string& dataset, int timestep,
                   ByteSpan values, DataType type);
    Bytes read_raw(const DataGroupDescriptor& g, const std::string& dataset, int timestep,
                   DataType type);
    Bytes import_raw(const DataGroupDescriptor& g, const std::string& dataset,
                     DataType expected);
    std::uint64_t import_dataset_offset(const DataGroupDescriptor& g,
                                        const std::string& dataset) const;

    RankContext* ctx_;
    Catalog* catalog_; // rank 0 only
    std::filesystem::path data_dir_;
    std::optional<PartitioningVector> pv_;
    std::map<std::string, View> views_;
    std::map<int, bool> released_imports_; // group_id -> released
    IoStats stats_;
};

} // namespace sdm

#endif
