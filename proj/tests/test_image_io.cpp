#include <doctest.h>

#include <string>
#include <vector>

#include "igs/core/errors.hpp"
#include "igs/core/rng.hpp"
#include "igs/datasets/image_io.hpp"
#include "igs/streamio/binary.hpp"
#include "test_util.hpp"

using namespace igs;

namespace {

std::string write_raw(const std::filesystem::path& dir, const char* name,
                      const std::string& content) {
    std::string path = (dir / name).string();
    write_file_bytes(path, std::span<const uint8_t>(
                               reinterpret_cast<const uint8_t*>(content.data()),
                               content.size()));
    return path;
}

IoCode read_code(const std::string& path) {
    try {
        read_ppm(path);
    } catch (const IoError& e) {
        return e.code;
    }
    FAIL("expected an io error for ", path);
    return IoCode::generic;
}

}  // namespace

TEST_CASE("pixels quantize with round-half-up and clamping") {
    std::filesystem::path dir = igs::test::scratch_dir("ppm_quant");
    Image img(3, 1);
    img.set(0, 0, {0.5, 1.0 / 255.0, 0.4999});
    img.set(0, 1, {1.7, -0.3, 1.0});
    img.set(0, 2, {0.0, 0.25, 0.75});
    std::string path = (dir / "q.ppm").string();
    write_ppm(img, path);

    std::vector<uint8_t> bytes = read_file_bytes(path);
    REQUIRE(bytes.size() == 11 + 9);  // "P6\n3 1\n255\n" + payload
    const uint8_t* px = bytes.data() + 11;
    CHECK(px[0] == 128);  // 127.5 rounds away from zero
    CHECK(px[1] == 1);
    CHECK(px[2] == 127);
    CHECK(px[3] == 255);  // clamped high
    CHECK(px[4] == 0);    // clamped low
    CHECK(px[5] == 255);

    Image back = read_ppm(path);
    CHECK(back.at(0, 0).x == 128.0 / 255.0);
    CHECK(back.at(0, 1).y == 0.0);
}

TEST_CASE("write after read is byte-identical for canonical files") {
    std::filesystem::path dir = igs::test::scratch_dir("ppm_roundtrip");
    Rng rng(9);
    Image img(7, 5);
    for (double& v : img.data) v = rng.uniform();
    std::string a = (dir / "a.ppm").string();
    std::string b = (dir / "b.ppm").string();
    write_ppm(img, a);
    write_ppm(read_ppm(a), b);
    CHECK(read_file_bytes(a) == read_file_bytes(b));

    // Values already on the 1/255 lattice survive a full round trip exactly.
    Image lattice(4, 2);
    for (size_t i = 0; i < lattice.data.size(); ++i)
        lattice.data[i] = static_cast<double>(i % 256) / 255.0;
    std::string c = (dir / "c.ppm").string();
    write_ppm(lattice, c);
    CHECK(read_ppm(c).data == lattice.data);
}

TEST_CASE("header comments and loose whitespace parse") {
    std::filesystem::path dir = igs::test::scratch_dir("ppm_header");
    std::string body(3 * 2 * 1, '\x40');
    std::string path = write_raw(
        dir, "c.ppm", "P6 # binary pixmap\n# banner line\n 2   1 # size\n255\n" + body);
    Image img = read_ppm(path);
    CHECK(img.width == 2);
    CHECK(img.height == 1);
    CHECK(img.at(0, 1).z == 0x40 / 255.0);
}

TEST_CASE("malformed headers and payloads are rejected") {
    std::filesystem::path dir = igs::test::scratch_dir("ppm_bad");
    std::string body(3, '\x01');

    CHECK(read_code(write_raw(dir, "p5.ppm", "P5\n1 1\n255\n" + body)) ==
          IoCode::bad_magic);
    CHECK(read_code(write_raw(dir, "deep.ppm", "P6\n1 1\n65535\n" + body)) ==
          IoCode::malformed);
    CHECK(read_code(write_raw(dir, "nowidth.ppm", "P6\nx 1\n255\n" + body)) ==
          IoCode::malformed);
    CHECK(read_code(write_raw(dir, "zero.ppm", "P6\n0 1\n255\n")) ==
          IoCode::malformed);
    CHECK(read_code(write_raw(dir, "short.ppm", "P6\n2 2\n255\n" + body)) ==
          IoCode::truncated);
    CHECK(read_code(write_raw(dir, "long.ppm", "P6\n1 1\n255\n" + body + "!")) ==
          IoCode::truncated);
    CHECK(read_code(write_raw(dir, "cut.ppm", "P6\n1 1\n")) == IoCode::malformed);
    CHECK(read_code((dir / "absent.ppm").string()) == IoCode::missing);

    Image empty;
    CHECK_THROWS_AS(write_ppm(empty, (dir / "never.ppm").string()), ValidationError);
}
