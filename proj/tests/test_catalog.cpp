#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "sdm/catalog.hpp"
#include "sdm/fsio.hpp"
#include "test_support.hpp"

using namespace sdm;

TEST_CASE("initialize creates the six table files and a run row") {
    TempDir dir("cat");
    Catalog cat = Catalog::initialize("app1", dir.path(), 4);

    REQUIRE(Catalog::table_file_names().size() == 6);
    for (const auto& name : Catalog::table_file_names())
        CHECK(path_exists(dir / name));

    CHECK(cat.run_id() == 1);
    auto runs = cat.runs();
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].app_name == "app1");
    CHECK(runs[0].nprocs == 4);
    CHECK(runs[0].org_level == 0); // no result group yet
    cat.finalize();
}

TEST_CASE("each initialize appends a run with the next id") {
    TempDir dir("cat");
    {
        Catalog c = Catalog::initialize("a", dir.path(), 1);
        CHECK(c.run_id() == 1);
        c.finalize();
    }
    {
        Catalog c = Catalog::initialize("a", dir.path(), 2);
        CHECK(c.run_id() == 2);
        CHECK(c.run_count() == 2);
        c.finalize();
    }
}

TEST_CASE("result groups get sequential ids and fix the run's level") {
    TempDir dir("cat");
    Catalog cat = Catalog::initialize("a", dir.path(), 2);

    auto g0 = cat.define_result_group({"p", "q"}, DataType::Float64, 10, OrgLevel::L2);
    CHECK(g0.group_id == 0);
    CHECK(g0.name == "g0");
    CHECK(g0.global_count == 10);

    auto g1 = cat.define_result_group({"r"}, DataType::Float64, 4, OrgLevel::L2);
    CHECK(g1.group_id == 1);
    CHECK(g1.name == "g1");

    CHECK(cat.runs().back().org_level == 2);
    cat.finalize();
}

TEST_CASE("import groups persist per-dataset counts and the source") {
    TempDir dir("cat");
    Catalog cat = Catalog::initialize("a", dir.path(), 2);
    std::vector<DatasetSpec> ds = {{"edge1", DataType::Int32},
                                   {"edge2", DataType::Int32},
                                   {"y", DataType::Float64}};
    auto g = cat.define_import_group(ds, {7, 7, 5}, "mesh.bin");
    CHECK(g.kind == GroupKind::Import);
    CHECK(g.counts == std::vector<std::int64_t>{7, 7, 5});
    CHECK(g.source_file == "mesh.bin");
    cat.finalize();

    Catalog snap = Catalog::inspect(dir.path());
    auto imports = snap.groups(GroupKind::Import);
    REQUIRE(imports.size() == 1);
    CHECK(imports[0].datasets == ds);
    CHECK(imports[0].counts == g.counts);
}

TEST_CASE("a dataset name can appear once per run") {
    TempDir dir("cat");
    Catalog cat = Catalog::initialize("a", dir.path(), 2);
    cat.define_result_group({"p"}, DataType::Float64, 3, OrgLevel::L1);
    CHECK_THROWS_AS(cat.define_result_group({"p"}, DataType::Float64, 3, OrgLevel::L1),
                    ConflictError);
    CHECK_THROWS_AS(cat.define_result_group({"q", "q"}, DataType::Float64, 3, OrgLevel::L1),
                    ConflictError);
    CHECK_THROWS_AS(
        cat.define_import_group({{"p", DataType::Float64}}, {3}, "m.bin"),
        ConflictError);
    cat.finalize();

    // a new run may reuse the name
    Catalog cat2 = Catalog::initialize("a", dir.path(), 2);
    CHECK_NOTHROW(cat2.define_result_group({"p"}, DataType::Float64, 3, OrgLevel::L1));
    cat2.finalize();
}

TEST_CASE("execution records: uniqueness per (dataset, timestep) and file ranges") {
    TempDir dir("cat");
    Catalog cat = Catalog::initialize("a", dir.path(), 2);
    cat.record_offset("p", 1, "g0.dat", 0, 80);
    cat.record_offset("q", 1, "g0.dat", 80, 80);

    CHECK_THROWS_AS(cat.record_offset("p", 1, "other.dat", 0, 8), ConflictError);
    // overlapping ranges in the same file
    CHECK_THROWS_AS(cat.record_offset("p", 2, "g0.dat", 72, 16), ConflictError);
    CHECK_NOTHROW(cat.record_offset("p", 2, "g0.dat", 160, 80));

    auto rec = cat.get_offset("q", 1);
    REQUIRE(rec.has_value());
    CHECK(rec->file_id == "g0.dat");
    CHECK(rec->byte_offset == 80);
    CHECK(rec->byte_length == 80);
    CHECK_FALSE(cat.get_offset("q", 9).has_value());
    cat.finalize();
}

TEST_CASE("get_offset prefers the latest run's record") {
    TempDir dir("cat");
    {
        Catalog c1 = Catalog::initialize("a", dir.path(), 2);
        c1.record_offset("p", 1, "r1.dat", 0, 40);
        c1.finalize();
    }
    Catalog c2 = Catalog::initialize("a", dir.path(), 2);
    // the older record answers until this run writes its own
    CHECK(c2.get_offset("p", 1)->file_id == "r1.dat");
    c2.record_offset("p", 1, "r2.dat", 0, 40);
    CHECK(c2.get_offset("p", 1)->file_id == "r2.dat");
    c2.finalize();
}

TEST_CASE("index history: exact key lookup, duplicate keys refused") {
    TempDir dir("cat");
    Catalog cat = Catalog::initialize("a", dir.path(), 2);

    IndexHistoryRecord rec;
    rec.total_nodes = 5;
    rec.total_edges = 4;
    rec.nprocs = 2;
    rec.history_file = "hist_n5_e4_p2.bin";
    rec.per_rank_edge_counts = {2, 3};
    rec.per_rank_node_counts = {3, 4};
    rec.per_rank_byte_offsets = {28, 116};
    cat.insert_index_history(rec);

    auto hit = cat.lookup_index_history(5, 4, 2);
    REQUIRE(hit.has_value());
    CHECK(hit->history_file == "hist_n5_e4_p2.bin");
    CHECK(hit->per_rank_edge_counts == rec.per_rank_edge_counts);
    CHECK(hit->per_rank_node_counts == rec.per_rank_node_counts);
    CHECK(hit->per_rank_byte_offsets == rec.per_rank_byte_offsets);

    // same mesh, different nprocs: no hit
    CHECK_FALSE(cat.lookup_index_history(5, 4, 4).has_value());
    CHECK_FALSE(cat.lookup_index_history(6, 4, 2).has_value());

    CHECK_THROWS_AS(cat.insert_index_history(rec), ConflictError);

    IndexHistoryRecord bad = rec;
    bad.nprocs = 3; // lists still sized for 2
    CHECK_THROWS_AS(cat.insert_index_history(bad), ValidationError);
    cat.finalize();
}

TEST_CASE("tables survive a reopen byte-for-byte semantically") {
    TempDir dir("cat");
    IndexHistoryRecord rec;
    rec.total_nodes = 9;
    rec.total_edges = 12;
    rec.nprocs = 3;
    rec.history_file = "hist_n9_e12_p3.bin";
    rec.per_rank_edge_counts = {4, 4, 5};
    rec.per_rank_node_counts = {3, 3, 3};
    rec.per_rank_byte_offsets = {28, 156, 284};
    {
        Catalog cat = Catalog::initialize("app", dir.path(), 3);
        cat.define_result_group({"p"}, DataType::Float64, 9, OrgLevel::L3);
        cat.define_import_group({{"edge1", DataType::Int32}}, {12}, "m.bin");
        cat.record_offset("p", 1, "g0.dat", 0, 72);
        cat.insert_index_history(rec);
        cat.finalize();
    }
    Catalog snap = Catalog::inspect(dir.path());
    CHECK(snap.runs().size() == 1);
    CHECK(snap.groups(GroupKind::Result).size() == 1);
    CHECK(snap.groups(GroupKind::Import).size() == 1);
    CHECK(snap.execution_records().size() == 1);
    auto hit = snap.lookup_index_history(9, 12, 3);
    REQUIRE(hit.has_value());
    CHECK(hit->per_rank_byte_offsets == rec.per_rank_byte_offsets);
}

TEST_CASE("inspect refuses mutation and a missing catalog") {
    TempDir dir("cat");
    CHECK_THROWS_AS(Catalog::inspect(dir / "nowhere"), IoError);
    {
        Catalog cat = Catalog::initialize("a", dir.path(), 1);
        cat.finalize();
    }
    Catalog snap = Catalog::inspect(dir.path());
    CHECK_THROWS_AS(snap.record_offset("p", 1, "f", 0, 8), LifecycleError);
    CHECK_THROWS_AS(snap.define_result_group({"p"}, DataType::Float64, 1, OrgLevel::L1),
                    LifecycleError);
}

TEST_CASE("a finalized handle refuses further use") {
    TempDir dir("cat");
    Catalog cat = Catalog::initialize("a", dir.path(), 1);
    cat.finalize();
    CHECK_THROWS_AS(cat.record_offset("p", 1, "f", 0, 8), LifecycleError);
    CHECK_THROWS_AS(cat.get_offset("p", 1), LifecycleError);
}

TEST_CASE("corrupt tables name the offending file") {
    TempDir dir("cat");
    {
        Catalog cat = Catalog::initialize("a", dir.path(), 1);
        cat.finalize();
    }

    SUBCASE("mangled field") {
        write_text_file_atomic(dir / "run.tbl", "run_id=zap\tapp=a\n");
        try {
            Catalog::inspect(dir.path());
            FAIL("expected CatalogCorruptError");
        } catch (const CatalogCorruptError& e) {
            CHECK(std::string(e.what()).find("run.tbl") != std::string::npos);
        }
    }
    SUBCASE("missing newline on the final record") {
        write_text_file_atomic(dir / "execution.tbl",
                               "run_id=1\tdataset=p\ttimestep=1\tfile=f\toffset=0\tlength=8");
        CHECK_THROWS_AS(Catalog::inspect(dir.path()), CatalogCorruptError);
    }
    SUBCASE("index row without its history row") {
        write_text_file_atomic(
            dir / "index.tbl",
            "index_id=1\ttotal_nodes=5\ttotal_edges=4\tnprocs=2\thistory=h.bin\n");
        CHECK_THROWS_AS(Catalog::inspect(dir.path()), CatalogCorruptError);
    }
    SUBCASE("history row list length disagrees with nprocs") {
        write_text_file_atomic(
            dir / "index.tbl",
            "index_id=1\ttotal_nodes=5\ttotal_edges=4\tnprocs=2\thistory=h.bin\n");
        write_text_file_atomic(
            dir / "index_history.tbl",
            "index_id=1\tedge_counts=4\tnode_counts=5\tbyte_offsets=28\n");
        CHECK_THROWS_AS(Catalog::inspect(dir.path()), CatalogCorruptError);
    }
}

TEST_CASE("pending write gate blocks finalize until the future resolves") {
    TempDir dir("cat");
    Catalog cat = Catalog::initialize("a", dir.path(), 1);

    std::promise<void> prom;
    cat.set_pending_write(prom.get_future().share());
    std::atomic<bool> resolved{false};
    std::thread t([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        resolved = true;
        prom.set_value();
    });
    cat.finalize(); // must block on the promise
    CHECK(resolved.load());
    t.join();
}

TEST_CASE("a failed pending write surfaces at finalize") {
    TempDir dir("cat");
    Catalog cat = Catalog::initialize("a", dir.path(), 1);
    std::promise<void> prom;
    cat.set_pending_write(prom.get_future().share());
    prom.set_exception(std::make_exception_ptr(IoError("disk gone")));
    CHECK_THROWS_AS(cat.finalize(), IoError);
}
