#include "sdm/cli.hpp"

#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "sdm/fsio.hpp"
#include "sdm/oracle.hpp"
#include "sdm/pipeline.hpp"

namespace sdm {

namespace {

struct CommonOpts {
    std::string workload = "fun3d";
    std::uint64_t seed = 1;
    int nprocs = 2;
    int level = 3;
    bool use_history = false;
    bool lockstep = false;
    std::string catalog_dir;
    std::string data_dir;
    std::string history_dir;
};

void add_workload_opts(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--workload", o.workload, "Workload: fun3d, rt, or worked-example")
        ->check(CLI::IsMember({"fun3d", "rt", "worked-example"}));
    cmd->add_option("--seed", o.seed, "Workload data seed");
}

void add_run_opts(CLI::App* cmd, CommonOpts& o) {
    add_workload_opts(cmd, o);
    cmd->add_option("--nprocs", o.nprocs, "Number of simulated ranks")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--level", o.level, "File organization level")
        ->check(CLI::Range(1, 3));
    cmd->add_flag("--use-history", o.use_history,
                  "Replay a cached index distribution when one matches");
    cmd->add_flag("--lockstep", o.lockstep,
                  "Schedule ranks one at a time (debugging; results identical)");
    cmd->add_option("--catalog-dir", o.catalog_dir, "Catalog root directory")->required();
    cmd->add_option("--data-dir", o.data_dir,
                    "Data file directory (default: <catalog-dir>/data)");
    cmd->add_option("--history-dir", o.history_dir,
                    "History file directory (default: <catalog-dir>/history)");
}

RunConfig to_config(const CommonOpts& o) {
    RunConfig cfg;
    cfg.workload = workload_kind_from_string(o.workload);
    cfg.seed = o.seed;
    cfg.nprocs = o.nprocs;
    cfg.level = org_level_from_int(o.level);
    cfg.use_history = o.use_history;
    cfg.catalog_dir = o.catalog_dir;
    cfg.data_dir = o.data_dir;
    cfg.history_dir = o.history_dir;
    cfg.policy = o.lockstep ? ExecPolicy::Lockstep : ExecPolicy::Threads;
    return cfg;
}

void print_summary(const RunSummary& s) {
    std::cout << "run " << s.run_id << ": "
              << (s.history_hit ? "index replayed from history" : "index redistributed");
    if (!s.history_hit && s.history_other_nprocs)
        std::cout << " (cached index exists for a different rank count)";
    std::cout << "\n";
    std::cout << "ring shifts: " << s.job.ring_shifts << ", barriers: " << s.job.barriers
              << ", broadcasts: " << s.job.broadcasts << ", gathers: " << s.job.gathers
              << "\n";
    std::uint64_t wrote = 0, read = 0;
    for (const auto& r : s.ranks) {
        wrote += r.io.bytes_written;
        read += r.io.bytes_read;
    }
    std::cout << "data files: " << s.data_files << ", bytes written: " << wrote
              << ", bytes read: " << read << "\n";
    if (s.history_written) std::cout << "history: registered\n";
}

int cmd_gen(const CommonOpts& o) {
    RunConfig cfg = to_config(o);
    if (cfg.catalog_dir.empty() && cfg.data_dir.empty())
        throw UsageError("gen needs --data-dir or --catalog-dir");
    if (cfg.catalog_dir.empty()) cfg.catalog_dir = cfg.data_dir;
    WorkloadSpec spec = make_workload(cfg.workload, cfg.seed);
    write_mesh_file(spec, resolved_data_dir(cfg));
    std::cout << "wrote " << (resolved_data_dir(cfg) / spec.mesh_file).string() << "\n";
    return 0;
}

int cmd_run(const CommonOpts& o) {
    RunSummary s = run_pipeline(to_config(o));
    print_summary(s);
    return 0;
}

int cmd_verify(const CommonOpts& o) {
    RunConfig cfg = to_config(o);
    cfg.verify_readback = true;
    RunSummary s = run_pipeline(cfg);

    WorkloadSpec spec = make_workload(cfg.workload, cfg.seed);
    auto expected = oracle_distribute(workload_mesh(spec),
                                      workload_partitioning(spec, cfg.nprocs), cfg.nprocs);
    for (int r = 0; r < cfg.nprocs; ++r)
        if (!(s.ranks[static_cast<std::size_t>(r)].index ==
              expected[static_cast<std::size_t>(r)]))
            throw VerifyMismatchError("rank " + std::to_string(r) +
                                      " index differs from the sequential reference");
    print_summary(s);
    std::cout << "verify: index ok, data ok\n";
    return 0;
}

int cmd_catalog(const std::string& dir, bool normalize) {
    Catalog cat = Catalog::inspect(dir); // validates the tables before dumping
    (void)cat;
    for (const auto& name : Catalog::table_file_names()) {
        std::cout << "== " << name << " ==\n";
        std::string text = read_text_file(std::filesystem::path(dir) / name);
        if (normalize) {
            std::size_t pos = 0;
            while ((pos = text.find("timestamp=", pos)) != std::string::npos) {
                std::size_t start = pos + 10;
                std::size_t end = text.find_first_of("\t\n", start);
                if (end == std::string::npos) end = text.size();
                text.replace(start, end - start, "T");
                pos = start;
            }
        }
        std::cout << text;
    }
    return 0;
}

int cmd_bench(const CommonOpts& o, int repeat) {
    using clock = std::chrono::steady_clock;
    RunConfig cfg = to_config(o);
    for (int i = 0; i < repeat; ++i) {
        auto t0 = clock::now();
        RunSummary s = run_pipeline(cfg);
        auto us =
            std::chrono::duration_cast<std::chrono::microseconds>(clock::now() - t0)
                .count();
        std::cout << "run " << s.run_id << ": " << us << " us, "
                  << (s.history_hit ? "replayed" : "redistributed") << ", "
                  << s.job.ring_shifts << " ring shifts\n";
        cfg.use_history = true; // later iterations measure the cached path
    }
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Scientific data manager for parallel unstructured-mesh applications"};
    app.require_subcommand(1);

    CommonOpts gen_o, run_o, verify_o, bench_o;
    std::string catalog_dir;
    bool normalize = false;
    int repeat = 2;

    auto* gen = app.add_subcommand("gen", "Write a workload's import source file");
    add_workload_opts(gen, gen_o);
    gen->add_option("--data-dir", gen_o.data_dir, "Data file directory");
    gen->add_option("--catalog-dir", gen_o.catalog_dir,
                    "Catalog root (data goes to <catalog-dir>/data)");

    auto* run = app.add_subcommand("run", "Run a workload end to end");
    add_run_opts(run, run_o);

    auto* verify = app.add_subcommand(
        "verify", "Run a workload and check the index against the sequential reference");
    add_run_opts(verify, verify_o);

    auto* catalog = app.add_subcommand("catalog", "Dump the catalog tables");
    catalog->add_option("--catalog-dir", catalog_dir, "Catalog root directory")
        ->required();
    catalog->add_flag("--normalize", normalize,
                      "Replace timestamps so dumps of identical runs compare equal");

    auto* bench = app.add_subcommand("bench", "Time repeated runs; later ones use history");
    add_run_opts(bench, bench_o);
    bench->add_option("--repeat", repeat, "Total runs")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_gen(gen_o);
        if (run->parsed()) return cmd_run(run_o);
        if (verify->parsed()) return cmd_verify(verify_o);
        if (catalog->parsed()) return cmd_catalog(catalog_dir, normalize);
        if (bench->parsed()) return cmd_bench(bench_o, repeat);
        return 2;
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const VerifyMismatchError& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

} // namespace sdm
