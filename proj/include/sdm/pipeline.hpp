#ifndef SDM_PIPELINE_HPP
#define SDM_PIPELINE_HPP

#include <filesystem>
#include <vector>

#include "sdm/dataio.hpp"
#include "sdm/history.hpp"
#include "sdm/workload.hpp"

namespace sdm {

struct RunConfig {
    WorkloadKind workload = WorkloadKind::Fun3d;
    std::uint64_t seed = 1;
    int nprocs = 2;
    OrgLevel level = OrgLevel::L3;
    bool use_history = false;
    std::filesystem::path catalog_dir;
    std::filesystem::path data_dir;    // defaults to catalog_dir/data
    std::filesystem::path history_dir; // defaults to catalog_dir/history
    ExecPolicy policy = ExecPolicy::Threads;
    bool verify_readback = true;
};

struct RankOutcome {
    LocalIndexSet index;
    DistributeStats dist;
    IoStats io;
    bool replayed = false;
};

struct RunSummary {
    std::int64_t run_id = 0;
    bool history_hit = false;          // index restored from a cached file
    bool history_written = false;      // fresh distribution was registered
    bool history_other_nprocs = false; // mesh cached, but for another rank count
    std::vector<RankOutcome> ranks;
    JobStats job;
    int data_files = 0; // .dat files present after the run
};

std::filesystem::path resolved_data_dir(const RunConfig& cfg);
std::filesystem::path resolved_history_dir(const RunConfig& cfg);

/// Writes the workload's import source file if it is not there yet.
void ensure_workload(const RunConfig& cfg);

/// Full lifecycle on simulated ranks: catalog run row, import group, index
/// (cached or redistributed), result groups, per-timestep collective writes,
/// read-back verification, history registration, finalize.
RunSummary run_pipeline(const RunConfig& cfg);

} // namespace sdm

#endif
