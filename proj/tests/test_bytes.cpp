#include <doctest.h>

#include <cmath>

#include "sdm/bytes.hpp"
#include "sdm/fsio.hpp"
#include "test_support.hpp"

using namespace sdm;

TEST_CASE("writer emits little-endian bytes") {
    ByteWriter w;
    w.u32(0x01020304u);
    w.u64(0x1122334455667788ull);
    Bytes b = w.take();
    REQUIRE(b.size() == 12);
    // low byte first
    CHECK(std::to_integer<int>(b[0]) == 0x04);
    CHECK(std::to_integer<int>(b[3]) == 0x01);
    CHECK(std::to_integer<int>(b[4]) == 0x88);
    CHECK(std::to_integer<int>(b[11]) == 0x11);
}

TEST_CASE("round trip of every scalar kind") {
    ByteWriter w;
    w.u8(250);
    w.i32(-7);
    w.i64(-(1ll << 40));
    w.f64(3.5);
    w.f64(-0.0);
    w.str("abc");
    w.bytes(Bytes{std::byte{1}, std::byte{2}});

    Bytes b = w.take();
    ByteReader r(b);
    CHECK(r.u8() == 250);
    CHECK(r.i32() == -7);
    CHECK(r.i64() == -(1ll << 40));
    CHECK(r.f64() == 3.5);
    double nz = r.f64();
    CHECK(nz == 0.0);
    CHECK(std::signbit(nz));
    CHECK(r.str() == "abc");
    Bytes tail = r.bytes();
    REQUIRE(tail.size() == 2);
    CHECK(r.at_end());
}

TEST_CASE("reader underrun throws IoError") {
    ByteWriter w;
    w.u32(1);
    Bytes b = w.take();
    ByteReader r(b);
    r.u32();
    CHECK_THROWS_AS(r.u64(), IoError);
}

TEST_CASE("pack and unpack are inverses") {
    std::vector<double> d = {0.0, -1.5, 1e300, 42.0};
    CHECK(unpack_f64(pack_f64(d)) == d);
    std::vector<std::int32_t> i = {-2, 0, 7, 1 << 30};
    CHECK(unpack_i32(pack_i32(i)) == i);

    // 4 doubles -> 32 bytes, little endian: 42.0 = 0x4045000000000000
    Bytes b = pack_f64(d);
    REQUIRE(b.size() == 32);
    CHECK(std::to_integer<int>(b[31]) == 0x40);
    CHECK(std::to_integer<int>(b[30]) == 0x45);
}

TEST_CASE("unpack rejects ragged buffers") {
    Bytes b(10); // not a multiple of 8 or 4
    CHECK_THROWS_AS(unpack_f64(b), ValidationError);
    CHECK_THROWS_AS(unpack_i32(b), ValidationError);
}

TEST_CASE("positioned file write and ranged read") {
    TempDir dir("fsio");
    auto p = dir / "f.bin";

    std::vector<std::int32_t> pair = {1, 2};
    write_file_range(p, 8, pack_i32(pair));
    CHECK(file_size_of(p) == 16);
    // the hole reads back as zeros
    CHECK(unpack_i32(read_file_range(p, 0, 8)) == std::vector<std::int32_t>{0, 0});
    CHECK(unpack_i32(read_file_range(p, 8, 8)) == std::vector<std::int32_t>{1, 2});

    // positioned writes never truncate
    std::vector<std::int32_t> nine = {9};
    write_file_range(p, 0, pack_i32(nine));
    CHECK(file_size_of(p) == 16);
    CHECK(unpack_i32(read_file_range(p, 8, 8)) == std::vector<std::int32_t>{1, 2});

    CHECK_THROWS_AS(read_file_range(p, 12, 8), BoundsError);
    CHECK_THROWS_AS(read_file(dir / "absent.bin"), IoError);
}

TEST_CASE("ensure_file_size only extends") {
    TempDir dir("fsio");
    auto p = dir / "g.bin";
    std::vector<std::int32_t> five = {5};
    write_file(p, pack_i32(five));
    ensure_file_size(p, 32);
    CHECK(file_size_of(p) == 32);
    ensure_file_size(p, 4);
    CHECK(file_size_of(p) == 32);
    CHECK(unpack_i32(read_file_range(p, 0, 4)) == std::vector<std::int32_t>{5});
}

TEST_CASE("atomic text write replaces content completely") {
    TempDir dir("fsio");
    auto p = dir / "t.txt";
    write_text_file_atomic(p, "first version, long enough to notice truncation\n");
    write_text_file_atomic(p, "v2\n");
    CHECK(read_text_file(p) == "v2\n");
}
