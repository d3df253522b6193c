#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "sdm/fsio.hpp"
#include "sdm/workload.hpp"
#include "test_support.hpp"

using namespace sdm;

TEST_CASE("workload names parse both ways") {
    for (auto k : {WorkloadKind::WorkedExample, WorkloadKind::Fun3d, WorkloadKind::Rt})
        CHECK(workload_kind_from_string(to_string(k)) == k);
    CHECK(workload_kind_from_string("fun3d") == WorkloadKind::Fun3d);
    CHECK_THROWS_AS(workload_kind_from_string("FUN3D"), UsageError);
    CHECK_THROWS_AS(workload_kind_from_string(""), UsageError);
}

TEST_CASE("workload shapes are frozen") {
    SUBCASE("worked example") {
        auto s = make_workload(WorkloadKind::WorkedExample, 7);
        CHECK(s.total_nodes == 5);
        CHECK(s.total_edges == 4);
        CHECK(s.timesteps == 1);
        CHECK(s.imports.datasets.size() == 4);
        CHECK(s.imports.counts == std::vector<std::int64_t>{4, 4, 4, 5});
        REQUIRE(s.result_groups.size() == 1);
        CHECK(s.result_groups[0].names == std::vector<std::string>{"u"});
        CHECK(s.result_groups[0].global_count == 5);
        CHECK(s.result_groups[0].domain == ResultDomain::Nodes);
    }
    SUBCASE("fun3d") {
        auto s = make_workload(WorkloadKind::Fun3d, 7);
        CHECK(s.total_nodes == 60);
        CHECK(s.total_edges == 240);
        CHECK(s.timesteps == 2);
        CHECK(s.imports.datasets.size() == 10);
        REQUIRE(s.result_groups.size() == 2);
        CHECK(s.result_groups[0].names ==
              std::vector<std::string>{"u0", "u1", "u2", "u3"});
        CHECK(s.result_groups[0].domain == ResultDomain::Nodes);
        CHECK(s.result_groups[1].names == std::vector<std::string>{"flux"});
        CHECK(s.result_groups[1].global_count == 300);
        CHECK(s.result_groups[1].domain == ResultDomain::Contiguous);
    }
    SUBCASE("rt") {
        auto s = make_workload(WorkloadKind::Rt, 7);
        CHECK(s.total_nodes == 50);
        CHECK(s.total_edges == 150);
        CHECK(s.timesteps == 5);
        REQUIRE(s.result_groups.size() == 2);
        CHECK(s.result_groups[0].names == std::vector<std::string>{"vel"});
        CHECK(s.result_groups[1].global_count == 100);
    }
}

TEST_CASE("meshes are a pure function of the workload description") {
    auto s1 = make_workload(WorkloadKind::Fun3d, 11);
    auto s2 = make_workload(WorkloadKind::Fun3d, 11);
    auto s3 = make_workload(WorkloadKind::Fun3d, 12);

    auto m1 = workload_mesh(s1);
    auto m2 = workload_mesh(s2);
    auto m3 = workload_mesh(s3);
    CHECK(m1.edge1 == m2.edge1);
    CHECK(m1.edge2 == m2.edge2);
    CHECK(m1.edge1 != m3.edge1); // the seed actually steers the mesh
    CHECK(m1.count() == 240);

    auto w = make_workload(WorkloadKind::WorkedExample, 99);
    auto wm = workload_mesh(w);
    CHECK(wm.edge1 == std::vector<GlobalId>{0, 1, 0, 2});
    CHECK(wm.edge2 == std::vector<GlobalId>{1, 2, 3, 4});
}

TEST_CASE("partitionings cover every rank") {
    auto w = make_workload(WorkloadKind::WorkedExample, 1);
    CHECK(workload_partitioning(w, 2) == PartitioningVector{0, 1, 1, 0, 1});
    CHECK(workload_partitioning(w, 3) == PartitioningVector{0, 1, 2, 0, 1});

    auto f = make_workload(WorkloadKind::Fun3d, 5);
    for (int nprocs : {1, 2, 4, 8}) {
        auto pv = workload_partitioning(f, nprocs);
        REQUIRE(pv.size() == 60);
        std::set<int> owners(pv.begin(), pv.end());
        CHECK(static_cast<int>(owners.size()) == nprocs);
        CHECK(*owners.begin() == 0);
        CHECK(*owners.rbegin() == nprocs - 1);
    }
    CHECK(workload_partitioning(f, 4) == workload_partitioning(f, 4));
}

TEST_CASE("random meshes avoid self-loops and respect their bounds") {
    auto m = random_mesh(20, 300, 42);
    REQUIRE(m.count() == 300);
    for (std::size_t i = 0; i < m.edge1.size(); ++i) {
        CHECK(m.edge1[i] != m.edge2[i]);
        CHECK(m.edge1[i] >= 0);
        CHECK(m.edge1[i] < 20);
        CHECK(m.edge2[i] >= 0);
        CHECK(m.edge2[i] < 20);
    }
    auto again = random_mesh(20, 300, 42);
    CHECK(m.edge1 == again.edge1);
    CHECK(m.edge2 == again.edge2);

    CHECK_THROWS_AS(random_mesh(1, 3, 0), ValidationError);
}

TEST_CASE("random partitionings give every rank a node") {
    auto pv = random_partitioning(10, 4, 3);
    REQUIRE(pv.size() == 10);
    for (int r = 0; r < 4; ++r)
        CHECK(std::count(pv.begin(), pv.end(), r) >= 1);
    CHECK_THROWS_AS(random_partitioning(3, 4, 0), ValidationError);
}

TEST_CASE("dataset values are deterministic integers") {
    auto s = make_workload(WorkloadKind::Rt, 21);
    double v = workload_value(s, "vel", 1, 0);
    CHECK(v == workload_value(s, "vel", 1, 0));
    CHECK(v == std::floor(v));

    // timestep and element offsets are visible in the value
    CHECK(workload_value(s, "vel", 2, 0) - v == 1000003.0);
    CHECK(workload_value(s, "vel", 1, 1) - v == 17.0);
    CHECK(workload_value(s, "vel", 1, 0) != workload_value(s, "tri", 1, 0));
}

TEST_CASE("the mesh file lays out edge arrays then value arrays") {
    TempDir dir("wl");
    auto s = make_workload(WorkloadKind::WorkedExample, 13);
    write_mesh_file(s, dir.path());

    auto path = dir / s.mesh_file;
    // 4+4 i32 edges, 4 f64 for x (edge domain), 5 f64 for y (node domain)
    REQUIRE(file_size_of(path) == 104);

    CHECK(unpack_i32(read_file_range(path, 0, 16)) ==
          std::vector<std::int32_t>{0, 1, 0, 2});
    CHECK(unpack_i32(read_file_range(path, 16, 16)) ==
          std::vector<std::int32_t>{1, 2, 3, 4});

    auto x = unpack_f64(read_file_range(path, 32, 32));
    REQUIRE(x.size() == 4);
    for (GlobalId g = 0; g < 4; ++g)
        CHECK(x[static_cast<std::size_t>(g)] == workload_value(s, "x", 0, g));

    auto y = unpack_f64(read_file_range(path, 64, 40));
    REQUIRE(y.size() == 5);
    for (GlobalId g = 0; g < 5; ++g)
        CHECK(y[static_cast<std::size_t>(g)] == workload_value(s, "y", 0, g));
}

TEST_CASE("the larger mesh files carry every import array") {
    TempDir dir("wl");
    auto s = make_workload(WorkloadKind::Fun3d, 2);
    write_mesh_file(s, dir.path());
    // 2*240 i32, then 4*240 + 4*60 f64
    CHECK(file_size_of(dir / s.mesh_file) == 2 * 240 * 4 + 4 * 240 * 8 + 4 * 60 * 8);
}
